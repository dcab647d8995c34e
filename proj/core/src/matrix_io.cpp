#include "cfm/matrix_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "cfm/errors.hpp"

namespace cfm {

namespace {

constexpr char kMagic[4] = {'C', 'F', 'M', '1'};

// The format is little-endian by definition; this code targets little-endian
// hosts and fails loudly elsewhere.
void require_little_endian() {
  const std::uint16_t probe = 1;
  char byte;
  std::memcpy(&byte, &probe, 1);
  if (byte != 1) throw IoError("cfm matrix format requires a little-endian host");
}

}  // namespace

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("bad numeric cell '" + cell + "' in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("ragged CSV in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[size_t(i)][size_t(j)];
  return m;
}

void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf;
      if (j + 1 < m.cols()) out << ',';
    }
    out << '\n';
  }
}

Eigen::MatrixXd load_matrix_cfm(const std::string& path) {
  require_little_endian();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("'" + path + "' is not a CFM1 matrix file");
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 8);
  in.read(reinterpret_cast<char*>(&cols), 8);
  if (!in) throw IoError("truncated header in " + path);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<double> row(cols);
  for (std::uint64_t i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(8 * cols));
    if (!in) throw IoError("truncated data in " + path);
    for (std::uint64_t j = 0; j < cols; ++j) m(Eigen::Index(i), Eigen::Index(j)) = row[j];
  }
  return m;
}

void save_matrix_cfm(const std::string& path, const Eigen::MatrixXd& m) {
  require_little_endian();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  const std::uint64_t rows = std::uint64_t(m.rows()), cols = std::uint64_t(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), 8);
  out.write(reinterpret_cast<const char*>(&cols), 8);
  std::vector<double> row(cols);
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) row[j] = m(Eigen::Index(i), Eigen::Index(j));
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(8 * cols));
  }
}

}  // namespace cfm
