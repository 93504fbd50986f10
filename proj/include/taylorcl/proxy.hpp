#pragma once

// Second-order Taylor proxies of finished tasks and the regularized objective
// minimized while training the next task:
//
//   proxy_k(w) = L_k(w_k) + (w - w_k)^T grad_k + 1/2 (w - w_k)^T H_k (w - w_k)
//
// The constant and gradient terms are optional; the benchmark protocol drops
// both and the theory checks keep both.

#include "taylorcl/curvature.hpp"
#include "taylorcl/linalg.hpp"
#include "taylorcl/objective.hpp"

#include <vector>

namespace taylorcl {

struct ProxyFlags {
  bool include_const = false;
  bool include_grad = false;
};

struct QuadraticProxy {
  Vector anchor;
  double const_term = 0.0;
  Vector grad_term;
  HessianRep curvature;
  ProxyFlags flags;
};

/// One proxy per completed task, in task order.
using ProxyStack = std::vector<QuadraticProxy>;

/// Wraps a curvature already built at `w_hat`; evaluates the loss and its
/// gradient there for the constant and linear terms.
QuadraticProxy build_proxy(const Objective& loss, const Vector& w_hat, HessianRep curvature, ProxyFlags flags);

struct ProxyBuildOptions {
  CurvatureKind kind = CurvatureKind::full;
  ProxyFlags flags;
  FisherMode fisher_mode = FisherMode::sampled_label;
  bool psd_project = false;
  std::uint64_t seed = 0;  // drives label sampling for the Fisher variants
};

/// Builds the curvature of the requested kind and wraps it. The Fisher
/// variants need an MlpObjective. SI curvature comes from training and is
/// rejected here.
QuadraticProxy build_proxy(const Objective& loss, const Vector& w_hat, const ProxyBuildOptions& options);

double proxy_value(const QuadraticProxy& proxy, const Vector& w);
Vector proxy_grad(const QuadraticProxy& proxy, const Vector& w);

enum class Normalization {
  average,  // (L_{k+1} + lambda * sum proxies) / (k + 1)
  sum       // L_{k+1} + lambda * sum proxies
};

struct ObjectiveParts {
  double value = 0.0;
  Vector grad;
  double task_loss = 0.0;  // current-task loss alone
  Vector task_grad;
};

ObjectiveParts combined_objective(const ProxyStack& stack, const Objective& current, const Vector& w,
                                  double lambda, Normalization normalization = Normalization::average);

}  // namespace taylorcl
