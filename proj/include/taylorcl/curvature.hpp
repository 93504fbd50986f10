#pragma once

// Curvature representations stored at the end of a task: the exact Hessian,
// the diagonal Fisher (EWC), per-layer Kronecker-factored Fisher, and the
// synaptic-intelligence importance diagonal. Also estimators for how far a
// representation is from the true Hessian (delta) and for the Hessian
// Lipschitz constant (rho).

#include "taylorcl/linalg.hpp"
#include "taylorcl/mlp.hpp"
#include "taylorcl/objective.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace taylorcl {

struct FullHessian {
  Matrix matrix;
};

struct DiagonalFisher {
  Vector diagonal;
};

/// Block diagonal across layers, A_l kron G_l within layer l.
struct KroneckerFactors {
  std::vector<LayerSlice> layout;
  std::vector<Matrix> a;
  std::vector<Matrix> g;
};

struct SIDiagonal {
  Vector importance;
};

using HessianRep = std::variant<FullHessian, DiagonalFisher, KroneckerFactors, SIDiagonal>;

enum class CurvatureKind { full, diagonal_fisher, kronecker, si_diagonal };

std::string_view to_string(CurvatureKind kind);
std::optional<CurvatureKind> parse_curvature_kind(std::string_view name);

CurvatureKind kind_of(const HessianRep& rep);
Index dim(const HessianRep& rep);

/// Throws DimensionError if a representation breaks its invariants: Full
/// symmetric to 1e-10, diagonals non-negative, Kronecker factors symmetric
/// PSD with a layout that covers every coordinate exactly once.
void validate(const HessianRep& rep);

/// Exact Hessian at w_hat from HVP columns. With `psd_project` the negative
/// eigenvalues are clamped to zero (d <= 500).
HessianRep build_full(const Objective& loss, const Vector& w_hat, bool psd_project = false);

inline constexpr Index kMaxPsdProjectionDim = 500;

HessianRep build_diag_fisher(const MlpArch& arch, const Vector& w_hat, const Batch& data, FisherMode mode,
                             Rng& rng);

HessianRep build_kron(const MlpArch& arch, const Vector& w_hat, const Batch& data, FisherMode mode, Rng& rng);

/// Running path integral for synaptic intelligence. Owned by one training
/// loop; `omega` changes only through si_step.
struct SIAccumulator {
  Vector omega;
  Vector w_start;
  double xi = 1.0;
};

SIAccumulator si_start(const Vector& w_start, double xi);

/// omega += -grad .* delta_w
void si_step(SIAccumulator& acc, const Vector& grad, const Vector& delta_w);

/// importance_i = max(omega_i, 0) / ((w_end_i - w_start_i)^2 + xi)
HessianRep si_finalize(const SIAccumulator& acc, const Vector& w_end);

Vector apply(const HessianRep& rep, const Vector& v);
double quad_form(const HessianRep& rep, const Vector& v);

/// Materialized d x d matrix; intended for small d.
Matrix to_dense(const HessianRep& rep);

/// ||H_rep - Hessian(reference, w_hat)||_2 by power iteration on the
/// matrix-free difference operator. Requires d <= kMaxDenseHessianDim.
double estimate_delta(const HessianRep& rep, const Objective& reference, const Vector& w_hat,
                      const PowerIterationOptions& options = {});

/// ||Hessian(w) - Hessian(w')||_2, matrix-free.
double hessian_difference_norm(const Objective& loss, const Vector& w, const Vector& w_other,
                               const PowerIterationOptions& options = {});

struct RhoEstimate {
  double rho = 0.0;
  std::vector<double> running;  // running maximum after each probe
  Index skipped = 0;            // pairs closer than 1e-10
};

/// Empirical lower bound on the Hessian Lipschitz constant: the largest
/// ||H(w) - H(w')|| / ||w - w'|| over the probe pairs.
RhoEstimate estimate_rho(const Objective& loss, std::span<const std::pair<Vector, Vector>> probes,
                         const PowerIterationOptions& options = {});

}  // namespace taylorcl
