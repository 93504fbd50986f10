#include "taylorcl/curvature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace taylorcl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_symmetric_psd(const Matrix& m, const std::string& what) {
  require(m.rows() == m.cols(), what + ": factor not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, what + ": factor not symmetric");
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() >= -1e-9 * scale, what + ": factor not positive semidefinite");
}

}  // namespace

std::string_view to_string(CurvatureKind kind) {
  switch (kind) {
    case CurvatureKind::full: return "full";
    case CurvatureKind::diagonal_fisher: return "diagonal_fisher";
    case CurvatureKind::kronecker: return "kronecker";
    case CurvatureKind::si_diagonal: return "si_diagonal";
  }
  return "unknown";
}

std::optional<CurvatureKind> parse_curvature_kind(std::string_view name) {
  for (const auto kind : {CurvatureKind::full, CurvatureKind::diagonal_fisher, CurvatureKind::kronecker,
                          CurvatureKind::si_diagonal}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

CurvatureKind kind_of(const HessianRep& rep) {
  return std::visit(overloaded{[](const FullHessian&) { return CurvatureKind::full; },
                               [](const DiagonalFisher&) { return CurvatureKind::diagonal_fisher; },
                               [](const KroneckerFactors&) { return CurvatureKind::kronecker; },
                               [](const SIDiagonal&) { return CurvatureKind::si_diagonal; }},
                    rep);
}

Index dim(const HessianRep& rep) {
  return std::visit(overloaded{[](const FullHessian& r) { return r.matrix.rows(); },
                               [](const DiagonalFisher& r) { return r.diagonal.size(); },
                               [](const KroneckerFactors& r) {
                                 Index d = 0;
                                 for (const auto& s : r.layout) d += s.size();
                                 return d;
                               },
                               [](const SIDiagonal& r) { return r.importance.size(); }},
                    rep);
}

void validate(const HessianRep& rep) {
  std::visit(overloaded{[](const FullHessian& r) {
                          require(r.matrix.rows() == r.matrix.cols(), "FullHessian: not square");
                          require((r.matrix - r.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-10,
                                  "FullHessian: not symmetric");
                        },
                        [](const DiagonalFisher& r) {
                          require((r.diagonal.array() >= 0.0).all(), "DiagonalFisher: negative entry");
                        },
                        [](const KroneckerFactors& r) {
                          require(r.a.size() == r.layout.size() && r.g.size() == r.layout.size(),
                                  "KroneckerFactors: factor count does not match layout");
                          Index next = 0;
                          for (std::size_t l = 0; l < r.layout.size(); ++l) {
                            const auto& s = r.layout[l];
                            require(s.offset == next, "KroneckerFactors: layout has a gap or overlap");
                            require(r.a[l].rows() == s.cols() && r.g[l].rows() == s.rows(),
                                    "KroneckerFactors: factor size does not match layer");
                            check_symmetric_psd(r.a[l], "KroneckerFactors A");
                            check_symmetric_psd(r.g[l], "KroneckerFactors G");
                            next += s.size();
                          }
                        },
                        [](const SIDiagonal& r) {
                          require((r.importance.array() >= 0.0).all(), "SIDiagonal: negative entry");
                        }},
             rep);
}

HessianRep build_full(const Objective& loss, const Vector& w_hat, bool psd_project) {
  Matrix h = dense_hessian(loss, w_hat);
  if (psd_project) {
    require(h.rows() <= kMaxPsdProjectionDim, "build_full: PSD projection limited to d <= 500");
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    const Vector clamped = eig.eigenvalues().cwiseMax(0.0);
    h = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
    h = 0.5 * (h + h.transpose());
  }
  return FullHessian{std::move(h)};
}

HessianRep build_diag_fisher(const MlpArch& arch, const Vector& w_hat, const Batch& data, FisherMode mode,
                             Rng& rng) {
  return DiagonalFisher{fisher_diagonal(arch, w_hat, data, rng, mode)};
}

HessianRep build_kron(const MlpArch& arch, const Vector& w_hat, const Batch& data, FisherMode mode, Rng& rng) {
  auto stats = per_layer_stats(arch, w_hat, data, rng, mode);
  return KroneckerFactors{layer_layout(arch), std::move(stats.a), std::move(stats.g)};
}

SIAccumulator si_start(const Vector& w_start, double xi) {
  require(xi > 0.0, "SI damping xi must be positive");
  return {Vector::Zero(w_start.size()), w_start, xi};
}

void si_step(SIAccumulator& acc, const Vector& grad, const Vector& delta_w) {
  require(grad.size() == acc.omega.size() && delta_w.size() == acc.omega.size(), "si_step: dimension mismatch");
  acc.omega.noalias() -= grad.cwiseProduct(delta_w);
}

HessianRep si_finalize(const SIAccumulator& acc, const Vector& w_end) {
  require(acc.xi > 0.0, "SI damping xi must be positive");
  require(w_end.size() == acc.omega.size(), "si_finalize: dimension mismatch");
  const Vector moved = w_end - acc.w_start;
  Vector importance = acc.omega.cwiseMax(0.0).cwiseQuotient((moved.array().square() + acc.xi).matrix());
  return SIDiagonal{std::move(importance)};
}

Vector apply(const HessianRep& rep, const Vector& v) {
  require(v.size() == dim(rep), "apply: dimension mismatch");
  return std::visit(overloaded{[&](const FullHessian& r) -> Vector { return r.matrix * v; },
                               [&](const DiagonalFisher& r) -> Vector { return r.diagonal.cwiseProduct(v); },
                               [&](const KroneckerFactors& r) -> Vector {
                                 Vector out(v.size());
                                 for (std::size_t l = 0; l < r.layout.size(); ++l) {
                                   const auto& s = r.layout[l];
                                   out.segment(s.offset, s.size()) =
                                       kron_apply(r.a[l], r.g[l], v.segment(s.offset, s.size()));
                                 }
                                 return out;
                               },
                               [&](const SIDiagonal& r) -> Vector { return r.importance.cwiseProduct(v); }},
                    rep);
}

double quad_form(const HessianRep& rep, const Vector& v) {
  require(v.size() == dim(rep), "quad_form: dimension mismatch");
  return std::visit(
      overloaded{[&](const FullHessian& r) { return v.dot(r.matrix * v); },
                 [&](const DiagonalFisher& r) { return v.dot(r.diagonal.cwiseProduct(v)); },
                 [&](const KroneckerFactors& r) {
                   double total = 0.0;
                   for (std::size_t l = 0; l < r.layout.size(); ++l) {
                     const auto& s = r.layout[l];
                     total += kron_quadform(r.a[l], r.g[l], v.segment(s.offset, s.size()));
                   }
                   return total;
                 },
                 [&](const SIDiagonal& r) { return v.dot(r.importance.cwiseProduct(v)); }},
      rep);
}

Matrix to_dense(const HessianRep& rep) {
  const Index d = dim(rep);
  require(d <= kMaxDenseHessianDim, "to_dense: dimension too large");
  Matrix out(d, d);
  Vector e = Vector::Zero(d);
  for (Index j = 0; j < d; ++j) {
    e[j] = 1.0;
    out.col(j) = taylorcl::apply(rep, e);
    e[j] = 0.0;
  }
  return out;
}

double estimate_delta(const HessianRep& rep, const Objective& reference, const Vector& w_hat,
                      const PowerIterationOptions& options) {
  const Index d = dim(rep);
  require(d == reference.dim() && w_hat.size() == d, "estimate_delta: dimension mismatch");
  require(d <= kMaxDenseHessianDim, "estimate_delta: needs an exact Hessian reference (d <= 2500)");
  const auto diff = [&](const Vector& v) -> Vector { return taylorcl::apply(rep, v) - reference.hvp(w_hat, v); };
  try {
    return operator_norm(diff, d, options);
  } catch (const ConvergenceError& e) {
    // An exact representation leaves only rounding noise, and ||Av|| then
    // wanders at the noise floor without settling. Accept that floor.
    const double scale = operator_norm([&](const Vector& v) -> Vector { return reference.hvp(w_hat, v); }, d, options);
    if (e.last_estimate() <= 1e-10 * std::max(1.0, scale)) return e.last_estimate();
    throw;
  }
}

double hessian_difference_norm(const Objective& loss, const Vector& w, const Vector& w_other,
                               const PowerIterationOptions& options) {
  return operator_norm([&](const Vector& v) -> Vector { return loss.hvp(w, v) - loss.hvp(w_other, v); },
                       loss.dim(), options);
}

RhoEstimate estimate_rho(const Objective& loss, std::span<const std::pair<Vector, Vector>> probes,
                         const PowerIterationOptions& options) {
  require(loss.dim() <= kMaxDenseHessianDim, "estimate_rho: dimension too large (d <= 2500)");
  RhoEstimate out;
  for (const auto& [w, w_other] : probes) {
    require(w.size() == loss.dim() && w_other.size() == loss.dim(), "estimate_rho: dimension mismatch");
    const double distance = (w - w_other).norm();
    if (distance < 1e-10) {
      ++out.skipped;
    } else {
      out.rho = std::max(out.rho, hessian_difference_norm(loss, w, w_other, options) / distance);
    }
    out.running.push_back(out.rho);
  }
  return out;
}

}  // namespace taylorcl
