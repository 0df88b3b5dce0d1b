#include "admmrnn/matrix.hpp"

#include <cmath>
#include <sstream>

#include "admmrnn/errors.hpp"

namespace admmrnn {

namespace {

std::string shape_of(std::size_t r, std::size_t c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) {
    throw shape_error("Matrix: dimensions must be positive, got " + shape_of(rows, cols));
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw shape_error("Matrix: dimensions must be positive, got " + shape_of(rows, cols));
  }
  if (data_.size() != rows * cols) {
    std::ostringstream os;
    os << "Matrix: data length " << data_.size() << " does not match shape " << shape_of(rows, cols);
    throw shape_error(os.str());
  }
  check_finite("Matrix()");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> data)
    : Matrix(rows, cols, std::vector<double>(data)) {}

Matrix Matrix::zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix::shape_str() const { return shape_of(rows_, cols_); }

void Matrix::check_finite(const char* where) const {
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw numeric_error(std::string(where) + ": non-finite entry in " + shape_of(rows_, cols_) +
                          " matrix");
    }
  }
}

bool same_shape(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
  if (!same_shape(a, b)) {
    throw shape_error(std::string(where) + ": shape mismatch " + a.shape_str() + " vs " +
                      b.shape_str());
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw shape_error("matmul: shape mismatch (" + a.shape_str() + ")*(" + b.shape_str() + ")");
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        out(i, j) += aip * b(p, j);
      }
    }
  }
  out.check_finite("matmul");
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  out.check_finite("add");
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  out.check_finite("sub");
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  out.check_finite("scale");
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  out.check_finite("hadamard");
  return out;
}

Matrix map(const Matrix& a, const std::function<double(double)>& fn) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(out[i]);
  out.check_finite("map");
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) { return add(a, b); }
Matrix operator-(const Matrix& a, const Matrix& b) { return sub(a, b); }
Matrix operator*(double s, const Matrix& a) { return scale(a, s); }

Matrix elementwise_tanh(const Matrix& a) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return out;
}

double dot(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * a[i];
  return s;
}

double norm_fro(const Matrix& a) { return std::sqrt(norm_sq(a)); }

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

double g_norm(const Matrix& x, const Matrix& g) {
  if (x.cols() != 1) {
    throw shape_error("g_norm: x must be a column vector, got " + x.shape_str());
  }
  if (g.rows() != g.cols() || g.rows() != x.rows()) {
    throw shape_error("g_norm: G must be square of order " + std::to_string(x.rows()) +
                      ", got " + g.shape_str());
  }
  for (std::size_t i = 0; i < g.rows(); ++i) {
    for (std::size_t j = i + 1; j < g.cols(); ++j) {
      if (std::fabs(g(i, j) - g(j, i)) > 1e-10) {
        throw numeric_error("g_norm: G is not symmetric within 1e-10");
      }
    }
  }
  double q = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < g.cols(); ++j) row += g(i, j) * x[j];
    q += x[i] * row;
  }
  if (q < -1e-10) {
    throw numeric_error("g_norm: negative quadratic form " + std::to_string(q) +
                        " (G not PSD; r likely too small)");
  }
  return std::sqrt(q < 0.0 ? 0.0 : q);
}

}  // namespace admmrnn
