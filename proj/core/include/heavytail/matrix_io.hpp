#pragma once

#include <iosfwd>
#include <string>

#include "heavytail/norms.hpp"

namespace heavytail {

// Plain-text matrix format: first line "rows cols", then one line per row of
// space-separated decimals. Values are written with 17 significant digits so
// a round trip is value-preserving.
void write_matrix(std::ostream& os, const Matrix& m);
void write_matrix_file(const std::string& path, const Matrix& m);
Matrix read_matrix(std::istream& is);
Matrix read_matrix_file(const std::string& path);

// Vectors use the same format with cols == 1 or a bare list of numbers.
Vector read_vector_file(const std::string& path);
void write_vector_file(const std::string& path, const Vector& v);

} // namespace heavytail
