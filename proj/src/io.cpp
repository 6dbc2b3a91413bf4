#include "aiflab/io.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "aiflab/errors.hpp"

namespace aiflab {

DataMatrix::DataMatrix(Mat entries) : x_(std::move(entries)) {
  if (x_.rows() < 1 || x_.cols() < 1)
    fail(ErrorKind::DimensionError, "data matrix needs m >= 1 and N >= 1");
  require_finite(x_, "data matrix");
}

DataMatrix DataMatrix::perturbed(const Mat& delta) const {
  if (delta.rows() != x_.rows() || delta.cols() != x_.cols())
    fail(ErrorKind::DimensionError, "perturbation shape does not match the data");
  return DataMatrix(x_ + delta);
}

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) fail(ErrorKind::NumericsError, fmt::format("{} has non-finite entries", what));
}
void require_finite(const Mat& v, const char* what) {
  if (!v.allFinite()) fail(ErrorKind::NumericsError, fmt::format("{} has non-finite entries", what));
}

std::vector<std::vector<double>> parse_csv_rows(std::istream& in, bool header) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (first && header) {
      first = false;
      continue;
    }
    first = false;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        fail(ErrorKind::ConfigError, fmt::format("line {}: '{}' is not a number", lineno, cell));
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos)
        fail(ErrorKind::ConfigError, fmt::format("line {}: '{}' is not a number", lineno, cell));
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorKind::DimensionError, fmt::format("line {}: ragged row", lineno));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, fmt::format("cannot open '{}'", path));
  return parse_csv_rows(in, header);
}

DataMatrix read_data_matrix(const std::string& path, bool header) {
  auto rows = read_csv_rows(path, header);
  if (rows.empty()) fail(ErrorKind::DimensionError, fmt::format("'{}' has no data rows", path));
  Mat x(rows.front().size(), rows.size());
  for (std::size_t n = 0; n < rows.size(); ++n)
    for (std::size_t i = 0; i < rows[n].size(); ++i) x(i, n) = rows[n][i];
  return DataMatrix(std::move(x));
}

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

void write_matrix_csv(std::ostream& out, const Mat& pts, const std::vector<std::string>& header) {
  if (!header.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
  }
  for (Eigen::Index n = 0; n < pts.cols(); ++n) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) out << (i ? "," : "") << fmt17(pts(i, n));
    out << "\n";
  }
}

namespace {

void dump_rec(const Json& j, int indent, int level, std::string& out) {
  auto nl = [&](int lv) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(lv * indent), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        nl(level + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_rec(it.value(), indent, level + 1, out);
      }
      nl(level);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // numeric arrays stay on one line
      bool flat = true;
      for (const auto& e : j)
        if (e.is_structured()) flat = false;
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",";
        first = false;
        if (!flat) nl(level + 1);
        dump_rec(e, indent, level + 1, out);
      }
      if (!flat) nl(level);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v))
        out += fmt17(v);
      else
        out += '"' + fmt17(v) + '"';
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  return out;
}

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

}  // namespace aiflab
