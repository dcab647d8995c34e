#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cfm::cli {

//! Command-line overrides applied on top of the config file (documented
//! precedence: flags win).
struct Overrides {
  std::optional<std::string> variant;
  std::optional<double> mu;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

int cmd_solve(const std::string& config_path, const Overrides& ov);
int cmd_bench(const std::string& config_path, const Overrides& ov, std::vector<std::string> variants);
int cmd_testgen(const std::string& config_path, const Overrides& ov);
int cmd_reproduce(const std::string& figure_id, const Overrides& ov);

}  // namespace cfm::cli
