#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lowdim {

/// INI-style config: [section] headers, key = value lines, '#' comments.
/// Values parse on demand as scalars, vectors (space-separated) or matrices
/// (';'-separated rows).
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  Eigen::VectorXd get_vector(const std::string& section, const std::string& key) const;
  Eigen::MatrixXd get_matrix(const std::string& section, const std::string& key) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
};

/// Numeric CSV, one row per line; first line may be a header (detected by
/// non-numeric leading field) and is skipped on read.
Eigen::MatrixXd read_csv_matrix(const std::string& path);
void write_csv_matrix(const Eigen::MatrixXd& m, const std::string& path,
                      const std::vector<std::string>& header = {});

}  // namespace lowdim
