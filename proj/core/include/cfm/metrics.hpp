#pragma once

#include "cfm/space.hpp"

namespace cfm {

//! Peak signal-to-noise ratio in dB for an n1 x n2 image with pixel values
//! nominally in [0,1]: 20 log10(sqrt(n1 n2) / ||x - x0||_F). Returns +infinity
//! when x == x0.
double psnr(const SpaceElement& x, const SpaceElement& x0);

}  // namespace cfm
