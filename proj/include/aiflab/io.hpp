#pragma once

#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "aiflab/types.hpp"

namespace aiflab {

using Json = nlohmann::ordered_json;

std::vector<std::vector<double>> parse_csv_rows(std::istream& in, bool header);
std::vector<std::vector<double>> read_csv_rows(const std::string& path, bool header);

// One point per row; returns the m x N matrix with points as columns.
DataMatrix read_data_matrix(const std::string& path, bool header);
void write_matrix_csv(std::ostream& out, const Mat& points_as_columns,
                      const std::vector<std::string>& header = {});

// %.17g formatting, so doubles round-trip.
std::string fmt17(double v);

// Serializes with every floating value at 17 significant digits.
// Non-finite numbers become the strings "inf", "-inf", "nan".
std::string dump_json(const Json& j, int indent = 2);

Json to_json(const Vec& v);
Json to_json(const Mat& m);  // row-major nested arrays

}  // namespace aiflab
