#include "uqnn/jsonio.hpp"

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "uqnn/error.hpp"

namespace uqnn {

std::string format_double(double x) {
    char buf[40];
    // Try increasing precision until the value round-trips; 17 digits
    // always does for IEEE doubles.
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) return buf;
    }
    return buf;
}

void write_json_vector(std::ostream& os, const Vector& v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << format_double(v[i]);
    }
    os << ']';
}

void write_json_matrix(std::ostream& os, const Matrix& m) {
    os << '[';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (i) os << ',';
        write_json_vector(os, m.row_vector(i));
    }
    os << ']';
}

void write_csv_row(std::ostream& os, const Vector& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << format_double(v[i]);
    }
    os << '\n';
}

Vector parse_csv_row(const std::string& line, std::size_t line_no) {
    Vector out;
    const char* p = line.c_str();
    while (*p) {
        char* end = nullptr;
        const double v = std::strtod(p, &end);
        if (end == p)
            throw ParseError("line " + std::to_string(line_no) + ": expected number near '" +
                             std::string(p).substr(0, 12) + "'");
        out.push_back(v);
        p = end;
        while (*p == ' ' || *p == '\t') ++p;
        if (*p == ',') ++p;
        else if (*p != '\0' && *p != '\r')
            throw ParseError("line " + std::to_string(line_no) + ": unexpected character '" +
                             std::string(1, *p) + "'");
        else break;
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace uqnn
