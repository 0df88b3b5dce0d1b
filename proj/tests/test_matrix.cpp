#include <doctest.h>

#include <cmath>
#include <random>

#include "admmrnn/errors.hpp"
#include "admmrnn/matrix.hpp"

using namespace admmrnn;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  }
  return m;
}

// Independent triple-loop product, index order deliberately different from
// the library kernel.
Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("matmul identity and small products") {
  const Matrix x(2, 1, {1.0, 2.0});
  const Matrix ix = matmul(Matrix::identity(2), x);
  CHECK(ix(0, 0) == 1.0);
  CHECK(ix(1, 0) == 2.0);

  const Matrix row(1, 2, {1.0, 2.0});
  const Matrix col(2, 1, {3.0, 4.0});
  const Matrix prod = matmul(row, col);
  CHECK(prod.rows() == 1);
  CHECK(prod.cols() == 1);
  CHECK(prod(0, 0) == 11.0);
}

TEST_CASE("matmul matches the triple-loop oracle exactly") {
  std::mt19937_64 rng(7);
  const Matrix a = random_matrix(rng, 3, 4);
  const Matrix b = random_matrix(rng, 4, 2);
  const Matrix got = matmul(a, b);
  const Matrix want = matmul_oracle(a, b);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);  // bitwise
}

TEST_CASE("matmul rejects mismatched shapes naming both") {
  const Matrix a(2, 3);
  const Matrix b(4, 1);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), shape_error);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("4x1"), shape_error);
}

TEST_CASE("matmul associativity on random instances") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 1 + rng() % 3, 1 + rng() % 3);
    const Matrix b = random_matrix(rng, a.cols(), 1 + rng() % 3);
    const Matrix c = random_matrix(rng, b.cols(), 1 + rng() % 3);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i) {
      CHECK(std::fabs(left[i] - right[i]) <= 1e-10 * std::max(1.0, std::fabs(right[i])));
    }
  }
}

TEST_CASE("elementwise_tanh values and range") {
  const Matrix zeros(2, 2);
  const Matrix tz = elementwise_tanh(zeros);
  for (std::size_t i = 0; i < tz.size(); ++i) CHECK(tz[i] == 0.0);

  const Matrix half(1, 1, {0.5});
  CHECK(elementwise_tanh(half)[0] == doctest::Approx(0.4621171573).epsilon(1e-9));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = 20.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 10.0;
    const Matrix m(1, 1, {x});
    const Matrix neg(1, 1, {-x});
    CHECK(elementwise_tanh(m)[0] == -elementwise_tanh(neg)[0]);  // odd function
    CHECK(elementwise_tanh(m)[0] > -1.0);
    CHECK(elementwise_tanh(m)[0] < 1.0);
  }
}

TEST_CASE("g_norm quadratic forms") {
  const Matrix x(2, 1, {3.0, 4.0});
  CHECK(g_norm(x, Matrix::identity(2)) == doctest::Approx(5.0));

  // an all-zero G is a legal PSD matrix here even though Matrix() zero-fills
  CHECK(g_norm(x, Matrix(2, 2)) == 0.0);

  // G = r I - rho1 x_t x_t' with r=5, rho1=1, x_t=(1,2)
  const Matrix g(2, 2, {4.0, -2.0, -2.0, 1.0});
  CHECK(g_norm(Matrix(2, 1, {1.0, 1.0}), g) == doctest::Approx(1.0));
}

TEST_CASE("g_norm flags PSD violations and asymmetry") {
  CHECK_THROWS_AS(g_norm(Matrix(1, 1, {1.0}), Matrix(1, 1, {-1.0})), numeric_error);
  CHECK_THROWS_AS(g_norm(Matrix(2, 1, {1.0, 1.0}), Matrix(2, 2, {1.0, 0.5, 0.2, 1.0})),
                  numeric_error);
  CHECK_THROWS_AS(g_norm(Matrix(2, 2), Matrix(2, 2)), shape_error);
  CHECK_THROWS_AS(g_norm(Matrix(2, 1), Matrix(3, 3)), shape_error);
}

TEST_CASE("g_norm with identity equals the Frobenius norm") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_matrix(rng, 1 + rng() % 5, 1);
    CHECK(std::fabs(g_norm(x, Matrix::identity(x.rows())) - norm_fro(x)) <= 1e-12);
  }
}

TEST_CASE("matrix construction validates its input") {
  CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0}), shape_error);
  CHECK_THROWS_AS(Matrix(0, 1), shape_error);
  CHECK_THROWS_AS(Matrix(1, 1, {std::nan("")}), numeric_error);
  CHECK_THROWS_AS(Matrix(1, 1, {std::numeric_limits<double>::infinity()}), numeric_error);
}
