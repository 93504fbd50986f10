#include "taylorcl/proxy.hpp"

#include <stdexcept>

namespace taylorcl {

QuadraticProxy build_proxy(const Objective& loss, const Vector& w_hat, HessianRep curvature, ProxyFlags flags) {
  require(w_hat.size() == loss.dim(), "build_proxy: anchor dimension mismatch");
  require(dim(curvature) == w_hat.size(), "build_proxy: curvature dimension mismatch");
  auto at_anchor = loss.value_grad(w_hat);
  return {w_hat, at_anchor.loss, std::move(at_anchor.grad), std::move(curvature), flags};
}

QuadraticProxy build_proxy(const Objective& loss, const Vector& w_hat, const ProxyBuildOptions& options) {
  Rng rng = Rng::keyed(options.seed, {0xf15e5});
  switch (options.kind) {
    case CurvatureKind::full:
      return build_proxy(loss, w_hat, build_full(loss, w_hat, options.psd_project), options.flags);
    case CurvatureKind::diagonal_fisher:
    case CurvatureKind::kronecker: {
      const auto* mlp = dynamic_cast<const MlpObjective*>(&loss);
      if (mlp == nullptr) throw std::invalid_argument("Fisher curvature needs a neural-network loss");
      auto rep = options.kind == CurvatureKind::kronecker
                     ? build_kron(mlp->arch(), w_hat, mlp->batch(), options.fisher_mode, rng)
                     : build_diag_fisher(mlp->arch(), w_hat, mlp->batch(), options.fisher_mode, rng);
      return build_proxy(loss, w_hat, std::move(rep), options.flags);
    }
    case CurvatureKind::si_diagonal:
      break;
  }
  throw std::invalid_argument("SI curvature is accumulated during training, not built from data");
}

double proxy_value(const QuadraticProxy& proxy, const Vector& w) {
  require(w.size() == proxy.anchor.size(), "proxy_value: dimension mismatch");
  const Vector step = w - proxy.anchor;
  double out = 0.5 * quad_form(proxy.curvature, step);
  if (proxy.flags.include_grad) out += step.dot(proxy.grad_term);
  if (proxy.flags.include_const) out += proxy.const_term;
  return out;
}

Vector proxy_grad(const QuadraticProxy& proxy, const Vector& w) {
  require(w.size() == proxy.anchor.size(), "proxy_grad: dimension mismatch");
  Vector out = taylorcl::apply(proxy.curvature, w - proxy.anchor);
  if (proxy.flags.include_grad) out += proxy.grad_term;
  return out;
}

ObjectiveParts combined_objective(const ProxyStack& stack, const Objective& current, const Vector& w,
                                  double lambda, Normalization normalization) {
  require(lambda > 0.0, "combined_objective: lambda must be positive");
  require(w.size() == current.dim(), "combined_objective: dimension mismatch");
  auto task = current.value_grad(w);
  ObjectiveParts out;
  out.value = task.loss;
  out.grad = task.grad;
  for (const auto& proxy : stack) {
    out.value += lambda * proxy_value(proxy, w);
    out.grad.noalias() += lambda * proxy_grad(proxy, w);
  }
  if (normalization == Normalization::average) {
    const double scale = 1.0 / static_cast<double>(stack.size() + 1);
    out.value *= scale;
    out.grad *= scale;
  }
  out.task_loss = task.loss;
  out.task_grad = std::move(task.grad);
  require_finite(out.value, "combined_objective");
  return out;
}

}  // namespace taylorcl
