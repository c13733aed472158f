#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "uqnn/linalg.hpp"

namespace uqnn {

/// Shortest decimal form of x that parses back to the same double,
/// capped at 17 significant digits.
std::string format_double(double x);

void write_json_vector(std::ostream& os, const Vector& v);
void write_json_matrix(std::ostream& os, const Matrix& m); // array of row arrays

void write_csv_row(std::ostream& os, const Vector& v);
Vector parse_csv_row(const std::string& line, std::size_t line_no);

std::string read_text_file(const std::string& path);

/// FNV-1a hash of a byte string, hex-encoded; used to fingerprint nets.
std::string fnv1a_hex(const std::string& bytes);

} // namespace uqnn
