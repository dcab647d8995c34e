#pragma once

#include <Eigen/Core>
#include <string>

namespace cfm {

//! Dense matrices on disk.
//!
//! CSV: one row per line, '.' decimal separator, comma delimited.
//! Binary ("cfm" format): magic bytes "CFM1", then u64 rows, u64 cols,
//! then rows*cols f64 values in row-major order, all little-endian.

Eigen::MatrixXd load_matrix_csv(const std::string& path);
void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

Eigen::MatrixXd load_matrix_cfm(const std::string& path);
void save_matrix_cfm(const std::string& path, const Eigen::MatrixXd& m);

}  // namespace cfm
