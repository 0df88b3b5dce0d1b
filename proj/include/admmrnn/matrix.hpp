#ifndef ADMMRNN_MATRIX_HPP
#define ADMMRNN_MATRIX_HPP

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace admmrnn {

// Dense real matrix, row-major, 64-bit floats. No broadcasting: every shape
// mismatch throws, and every public operation leaves only finite entries.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);  // zero-filled
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> data);

  static Matrix zeros(std::size_t rows, std::size_t cols);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  std::string shape_str() const;

  // Throws numeric_error if any entry is NaN/Inf.
  void check_finite(const char* where) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

bool same_shape(const Matrix& a, const Matrix& b);
void require_same_shape(const Matrix& a, const Matrix& b, const char* where);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix map(const Matrix& a, const std::function<double(double)>& fn);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

Matrix elementwise_tanh(const Matrix& a);

double dot(const Matrix& a, const Matrix& b);   // sum of elementwise products
double norm_sq(const Matrix& a);                // squared Frobenius norm
double norm_fro(const Matrix& a);
double max_abs(const Matrix& a);

// sqrt(x' G x) for a column vector x and square PSD G (symmetric within 1e-10).
// A quadratic form below -1e-10 throws numeric_error; small negatives clamp to 0.
double g_norm(const Matrix& x, const Matrix& g);

}  // namespace admmrnn

#endif
