#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tempolearn {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  bool operator==(const Matrix&) const = default;
};

/// xoshiro256** seeded through splitmix64.
///
/// Owned by the library (rather than std::mt19937 + std distributions) so every
/// derived quantity, including uniform reals, integer ranges and permutations,
/// is identical across compilers and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random mantissa bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n); unbiased (rejection sampling). n >= 1.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

/// Stateless seed mixing: derives an independent child seed from a parent
/// seed and a tag (run index, stream purpose, ...).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag);

/// Glorot/Xavier uniform init; returns a fan_out x fan_in matrix.
Matrix xavier_init(Rng& rng, std::size_t fan_in, std::size_t fan_out);

std::vector<std::size_t> seeded_permutation(Rng& rng, std::size_t n);

Vector relu(std::span<const double> x);
/// Subgradient convention: derivative at exactly 0 is 0.
Vector relu_derivative(std::span<const double> x);
Vector softmax(std::span<const double> x);
Vector sigmoid(std::span<const double> x);
double sigmoid(double x);

/// y = W x (+ b when b is non-empty).
Vector matvec(const Matrix& w, std::span<const double> x, std::span<const double> b = {});
/// y = W^T x.
Vector matvec_transposed(const Matrix& w, std::span<const double> x);
/// W += scale * u v^T.
void add_outer(Matrix& w, std::span<const double> u, std::span<const double> v,
               double scale = 1.0);

std::size_t argmax(std::span<const double> x);
bool all_finite(std::span<const double> x);

}  // namespace tempolearn
