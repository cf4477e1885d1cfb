#include "koopman/csv.hpp"

#include "koopman/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace koopman::csv {

std::string format(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view s) {
    const std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (end == tmp.c_str()) throw IoError("not a number: '" + tmp + "'");
    return v;
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    }
    return out;
}

bool next_record(std::istream& is, std::string& line) {
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        return true;
    }
    return false;
}

void write_row(std::ostream& os, const Eigen::Ref<const Vector>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << format(v(i));
    }
}

void write_matrix(std::ostream& os, const Matrix& m) {
    os << "# " << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        write_row(os, m.row(r).transpose());
        os << '\n';
    }
}

Matrix read_matrix(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.empty() || line.front() != '#')
        throw IoError("matrix csv: missing '# rows cols' header");
    std::istringstream hdr(line.substr(1));
    Eigen::Index rows = -1, cols = -1;
    hdr >> rows >> cols;
    if (rows < 0 || cols < 0) throw IoError("matrix csv: bad header '" + line + "'");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!next_record(is, line)) throw IoError("matrix csv: truncated");
        const auto fields = split(line);
        if (static_cast<Eigen::Index>(fields.size()) != cols) throw IoError("matrix csv: ragged row");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = parse_double(fields[c]);
    }
    return m;
}

}  // namespace koopman::csv
