#pragma once

// Dense linear algebra helpers shared by every module: Eigen aliases, error
// types, power iteration for operator norms, Kronecker quadratic forms and a
// portable random number generator.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace taylorcl {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by iterative routines that exhaust their budget. Carries the last
/// estimate so callers can still report it.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_estimate, int iterations)
      : std::runtime_error(what), last_estimate_(last_estimate), iterations_(iterations) {}
  double last_estimate() const { return last_estimate_; }
  int iterations() const { return iterations_; }

 private:
  double last_estimate_;
  int iterations_;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw DimensionError(what);
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& x, const std::string& what) {
  if (!x.allFinite()) throw NumericError(what + ": non-finite value");
}

inline void require_finite(double x, const std::string& what) {
  if (!std::isfinite(x)) throw NumericError(what + ": non-finite value");
}

template <typename DerivedM, typename DerivedV>
Vector matvec(const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedV>& v) {
  require(m.cols() == v.size(), "matvec: column count " + std::to_string(m.cols()) +
                                    " does not match vector length " + std::to_string(v.size()));
  Vector out = m * v;
  require_finite(out, "matvec");
  return out;
}

/// Matrix-free symmetric operator: returns A*v.
using SymmetricOperator = std::function<Vector(const Vector&)>;

struct PowerIterationOptions {
  double tol = 1e-12;
  int max_iters = 20000;
  std::uint64_t restart_seed = 0x9e3779b97f4a7c15ULL;
};

/// Largest absolute eigenvalue of a symmetric operator by power iteration.
///
/// Starts from the normalized all-ones vector. The tracked estimate is
/// ||A v|| for unit v, the square root of the Rayleigh quotient of A^2, which
/// is non-decreasing along the iteration and converges even when the top
/// eigenvalues are +lambda and -lambda. If the start vector is annihilated the
/// iteration restarts once from a seeded random vector.
double operator_norm(const SymmetricOperator& op, Index dim, const PowerIterationOptions& options = {});

template <typename Derived>
double operator_norm(const Eigen::MatrixBase<Derived>& m, const PowerIterationOptions& options = {}) {
  require(m.rows() == m.cols(), "operator_norm: matrix must be square");
  const Matrix dense = m;
  return operator_norm([&dense](const Vector& v) -> Vector { return dense * v; }, dense.rows(), options);
}

/// v^T (A kron G) v without forming the Kronecker product. v is read as the
/// column-major vectorization of a q x p block V, so the form is tr(V^T G V A).
template <typename DerivedA, typename DerivedG, typename DerivedV>
double kron_quadform(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedG>& g,
                     const Eigen::MatrixBase<DerivedV>& v) {
  require(a.rows() == a.cols() && g.rows() == g.cols(), "kron_quadform: factors must be square");
  const Index p = a.rows();
  const Index q = g.rows();
  require(v.size() == p * q, "kron_quadform: vector length must equal p*q");
  const Vector flat = v;
  const Eigen::Map<const Matrix> block(flat.data(), q, p);
  const double out = (block.cwiseProduct(g * block * a)).sum();
  require_finite(out, "kron_quadform");
  return out;
}

/// (A kron G) v for symmetric A, as vec(G V A).
template <typename DerivedA, typename DerivedG, typename DerivedV>
Vector kron_apply(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedG>& g,
                  const Eigen::MatrixBase<DerivedV>& v) {
  require(a.rows() == a.cols() && g.rows() == g.cols(), "kron_apply: factors must be square");
  const Index p = a.rows();
  const Index q = g.rows();
  require(v.size() == p * q, "kron_apply: vector length must equal p*q");
  const Vector flat = v;
  const Eigen::Map<const Matrix> block(flat.data(), q, p);
  Vector out(p * q);
  Eigen::Map<Matrix>(out.data(), q, p).noalias() = (g * block) * a;
  return out;
}

/// Portable generator: std::mt19937_64 (bit-exact by the C++ standard) with
/// hand-written distributions, since the standard library's distributions
/// are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream keyed by (seed, keys...), mixed through splitmix64.
  static Rng keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via the Marsaglia polar method.
  double normal();
  /// Uniform integer in [0, n).
  Index below(Index n);

  Vector normal_vector(Index n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (Index i = static_cast<Index>(items.size()) - 1; i > 0; --i) {
      std::swap(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(below(i + 1))]);
    }
  }

  std::vector<Index> permutation(Index n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over bytes; stable across platforms.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(const std::string& text);

}  // namespace taylorcl
