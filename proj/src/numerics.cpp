#include "tempolearn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tempolearn {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be >= 1");
  // Reject the low partial bucket so every residue is equally likely.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  std::uint64_t state = parent ^ rotl(tag * 0xd1b54a32d192ed03ULL, 23);
  splitmix64(state);
  return splitmix64(state);
}

Matrix xavier_init(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  if (fan_in == 0 || fan_out == 0) {
    throw std::invalid_argument("xavier_init: fan_in and fan_out must be >= 1");
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_out, fan_in);
  for (double& v : m.data) v = rng.uniform(-bound, bound);
  return m;
}

std::vector<std::size_t> seeded_permutation(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("seeded_permutation: n must be >= 1");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.below(i + 1)]);
  }
  return perm;
}

Vector relu(std::span<const double> x) {
  Vector y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
  return y;
}

Vector relu_derivative(std::span<const double> x) {
  Vector y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v > 0.0 ? 1.0 : 0.0; });
  return y;
}

Vector softmax(std::span<const double> x) {
  Vector y(x.size());
  if (x.empty()) return y;
  const double top = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - top);
    sum += y[i];
  }
  for (double& v : y) v /= sum;
  return y;
}

double sigmoid(double x) {
  // Branch keeps exp() argument non-positive.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid(std::span<const double> x) {
  Vector y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return sigmoid(v); });
  return y;
}

Vector matvec(const Matrix& w, std::span<const double> x, std::span<const double> b) {
  if (x.size() != w.cols || (!b.empty() && b.size() != w.rows)) {
    throw std::invalid_argument("matvec: dimension mismatch (" + std::to_string(w.rows) +
                                "x" + std::to_string(w.cols) + " times " +
                                std::to_string(x.size()) + ")");
  }
  Vector y(w.rows);
  const double* row = w.data.data();
  for (std::size_t r = 0; r < w.rows; ++r, row += w.cols) {
    // Four interleaved partial sums, combined in a fixed order.
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t c = 0;
    for (; c + 4 <= w.cols; c += 4) {
      a0 += row[c] * x[c];
      a1 += row[c + 1] * x[c + 1];
      a2 += row[c + 2] * x[c + 2];
      a3 += row[c + 3] * x[c + 3];
    }
    for (; c < w.cols; ++c) a0 += row[c] * x[c];
    const double acc = (a0 + a1) + (a2 + a3);
    y[r] = b.empty() ? acc : acc + b[r];
  }
  return y;
}

Vector matvec_transposed(const Matrix& w, std::span<const double> x) {
  if (x.size() != w.rows) throw std::invalid_argument("matvec_transposed: dimension mismatch");
  Vector y(w.cols, 0.0);
  const double* row = w.data.data();
  for (std::size_t r = 0; r < w.rows; ++r, row += w.cols) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < w.cols; ++c) y[c] += row[c] * xr;
  }
  return y;
}

void add_outer(Matrix& w, std::span<const double> u, std::span<const double> v, double scale) {
  if (u.size() != w.rows || v.size() != w.cols) {
    throw std::invalid_argument("add_outer: dimension mismatch");
  }
  double* row = w.data.data();
  for (std::size_t r = 0; r < w.rows; ++r, row += w.cols) {
    const double ur = scale * u[r];
    if (ur == 0.0) continue;
    for (std::size_t c = 0; c < w.cols; ++c) row[c] += ur * v[c];
  }
}

std::size_t argmax(std::span<const double> x) {
  return static_cast<std::size_t>(std::distance(x.begin(), std::max_element(x.begin(), x.end())));
}

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace tempolearn
