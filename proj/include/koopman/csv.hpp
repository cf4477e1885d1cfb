#pragma once

#include "koopman/types.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace koopman::csv {

// Shortest-roundtrip-safe decimal form ("%.17g"); "nan"/"inf" for non-finite.
std::string format(double v);

double parse_double(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep = ',');

// Reads the next line that is neither empty nor a `#` comment.
bool next_record(std::istream& is, std::string& line);

void write_row(std::ostream& os, const Eigen::Ref<const Vector>& v);

// Matrix format: first line `# rows cols`, then one comma-separated row per line.
void write_matrix(std::ostream& os, const Matrix& m);
Matrix read_matrix(std::istream& is);

}  // namespace koopman::csv
