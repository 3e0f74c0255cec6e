#include <lowdim/io.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lowdim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": empty key");
    cfg.data_[section][key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto it = data_.find(section);
  return it != data_.end() && it->second.count(key) > 0;
}

std::string Config::get_string(const std::string& section,
                               const std::string& key) const {
  const auto it = data_.find(section);
  if (it == data_.end() || it->second.count(key) == 0)
    throw std::runtime_error("missing config key [" + section + "] " + key);
  return it->second.at(key);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const std::string s = get_string(section, key);
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (trim(s.substr(pos)) != "")
    throw std::runtime_error("config key [" + section + "] " + key +
                             ": not a number: " + s);
  return v;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

int Config::get_int(const std::string& section, const std::string& key) const {
  const std::string s = get_string(section, key);
  size_t pos = 0;
  const int v = std::stoi(s, &pos);
  if (trim(s.substr(pos)) != "")
    throw std::runtime_error("config key [" + section + "] " + key +
                             ": not an integer: " + s);
  return v;
}

int Config::get_int(const std::string& section, const std::string& key,
                    int fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

Eigen::VectorXd Config::get_vector(const std::string& section,
                                   const std::string& key) const {
  std::istringstream in(get_string(section, key));
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  Eigen::VectorXd out(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) out[i] = vals[i];
  return out;
}

Eigen::MatrixXd Config::get_matrix(const std::string& section,
                                   const std::string& key) const {
  const std::string s = get_string(section, key);
  std::vector<std::vector<double>> rows;
  std::istringstream in(s);
  std::string row_text;
  while (std::getline(in, row_text, ';')) {
    std::istringstream rin(row_text);
    std::vector<double> row;
    double v;
    while (rin >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw std::runtime_error("config key [" + section + "] " + key +
                               ": ragged matrix rows");
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream rin(line);
    std::string field;
    bool numeric = true;
    while (std::getline(rin, field, ',')) {
      field = trim(field);
      try {
        size_t pos = 0;
        row.push_back(std::stod(field, &pos));
        if (pos != field.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
      if (!numeric) break;
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header line
      }
      throw std::runtime_error("csv file " + path + ": non-numeric row");
    }
    first = false;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw std::runtime_error("csv file " + path + ": ragged rows");
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_csv_matrix(const Eigen::MatrixXd& m, const std::string& path,
                      const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write csv file: " + path);
  out.precision(17);
  if (!header.empty()) {
    for (size_t j = 0; j < header.size(); ++j)
      out << (j ? "," : "") << header[j];
    out << "\n";
  }
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << "\n";
  }
}

}  // namespace lowdim
