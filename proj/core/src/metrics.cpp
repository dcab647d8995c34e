#include "cfm/metrics.hpp"

#include <cmath>
#include <limits>

namespace cfm {

double psnr(const SpaceElement& x, const SpaceElement& x0) {
  check_same_space(x.space, x0.space, "psnr");
  const double err = (x.data - x0.data).norm();
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(std::sqrt(double(x.data.size())) / err);
}

}  // namespace cfm
