#include "ncpd/tensor_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace ncpd {

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return {buf, static_cast<std::size_t>(n)};
}

namespace {

double parse_double(const std::string& tok) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw std::runtime_error("malformed tensor value '" + tok + "'");
  }
  return v;
}

Index parse_index(const std::string& tok, const char* what) {
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') {
    throw std::runtime_error(std::string("malformed ") + what + " '" + tok + "'");
  }
  return static_cast<Index>(v);
}

}  // namespace

DenseTensor read_tensor(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("empty tensor file");
  const Index order = parse_index(tok, "tensor order");
  if (order < 2) throw std::runtime_error("tensor order must be at least 2");

  std::vector<Index> dims;
  for (Index n = 0; n < order; ++n) {
    if (!(in >> tok)) throw std::runtime_error("missing tensor dimension");
    const Index d = parse_index(tok, "tensor dimension");
    if (d < 1) throw std::runtime_error("tensor dimensions must be positive");
    dims.push_back(d);
  }

  Vector values(product(dims));
  for (Index i = 0; i < values.size(); ++i) {
    if (!(in >> tok)) {
      throw std::runtime_error("tensor file has " + std::to_string(i) + " values, expected " +
                               std::to_string(values.size()));
    }
    values[i] = parse_double(tok);
  }
  if (in >> tok) throw std::runtime_error("trailing data after tensor values");
  return DenseTensor(std::move(dims), std::move(values));
}

DenseTensor read_tensor_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tensor file '" + path + "'");
  try {
    return read_tensor(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_tensor(std::ostream& out, const DenseTensor& t) {
  out << t.order() << '\n';
  for (Index n = 0; n < t.order(); ++n) out << (n ? " " : "") << t.dim(n);
  out << '\n';
  for (Index i = 0; i < t.numel(); ++i) out << format_double(t.values()[i]) << '\n';
}

void write_tensor_file(const std::string& path, const DenseTensor& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_tensor(out, t);
}

void write_matrix_file(const std::string& path, const Matrix& m) {
  write_tensor_file(path, DenseTensor({m.rows(), m.cols()},
                                      Eigen::Map<const Vector>(m.data(), m.size())));
}

}  // namespace ncpd
