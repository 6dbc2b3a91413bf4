#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aiflab {

// Exit codes: 0 ok, 1 usage error, 2 numeric failure (JSON error on err).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "a:b:step" (inclusive) or "v1,v2,...".
std::vector<double> parse_grid(const std::string& s);

}  // namespace aiflab
