#include "taylorcl/linalg.hpp"

#include <cmath>
#include <limits>

namespace taylorcl {

namespace {

// Returns the estimate, or a negative value when the start vector is
// annihilated by the operator.
double power_iterate(const SymmetricOperator& op, Vector v, const PowerIterationOptions& options) {
  v.normalize();
  Vector av = op(v);
  require(av.size() == v.size(), "operator_norm: operator changed the dimension");
  require_finite(av, "operator_norm");
  double estimate = av.norm();
  if (estimate == 0.0) return -1.0;
  for (int it = 1; it <= options.max_iters; ++it) {
    v = av / estimate;
    av = op(v);
    require_finite(av, "operator_norm");
    const double next = av.norm();
    if (std::abs(next - estimate) <= options.tol * next) return next;
    estimate = next;
  }
  throw ConvergenceError("operator_norm: power iteration did not converge", estimate, options.max_iters);
}

}  // namespace

double operator_norm(const SymmetricOperator& op, Index dim, const PowerIterationOptions& options) {
  require(dim >= 1, "operator_norm: dimension must be positive");
  require(options.tol > 0.0 && options.max_iters > 0, "operator_norm: invalid options");
  const double first = power_iterate(op, Vector::Ones(dim), options);
  if (first >= 0.0) return first;
  Rng rng(options.restart_seed);
  const double second = power_iterate(op, rng.normal_vector(dim), options);
  return second >= 0.0 ? second : 0.0;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng Rng::keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (const auto key : keys) h = splitmix64(h ^ splitmix64(key + 0x632be59bd9b4e019ULL));
  return Rng(h);
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

Index Rng::below(Index n) {
  require(n > 0, "Rng::below: bound must be positive");
  const auto bound = static_cast<std::uint64_t>(n);
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<Index>(x % bound);
}

Vector Rng::normal_vector(Index n) {
  Vector out(n);
  for (Index i = 0; i < n; ++i) out[i] = normal();
  return out;
}

std::vector<Index> Rng::permutation(Index n) {
  std::vector<Index> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i;
  shuffle(out);
  return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = basis;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& text) { return fnv1a64(text.data(), text.size()); }

}  // namespace taylorcl
