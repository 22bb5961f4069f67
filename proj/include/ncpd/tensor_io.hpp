#pragma once

#include "ncpd/tensor.hpp"

#include <iosfwd>
#include <string>

namespace ncpd {

// ".ten" text format:
//   line 1: N
//   line 2: I_1 ... I_N
//   then prod(I_n) whitespace-separated values in first-index-fastest order.
// Values are written with 17 significant digits so a write/read cycle is exact.

DenseTensor read_tensor(std::istream& in);
DenseTensor read_tensor_file(const std::string& path);
void write_tensor(std::ostream& out, const DenseTensor& t);
void write_tensor_file(const std::string& path, const DenseTensor& t);

/// Writes a matrix as an order-2 tensor, and a vector as an I x 1 tensor.
void write_matrix_file(const std::string& path, const Matrix& m);

/// Shortest-exact formatting used by every text output in the project.
std::string format_double(double v);

}  // namespace ncpd
