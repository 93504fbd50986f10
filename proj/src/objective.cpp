#include "taylorcl/objective.hpp"

#include <stdexcept>
#include <string>

namespace taylorcl {

std::unique_ptr<Objective> Objective::minibatch(std::span<const Index>) const {
  throw std::logic_error("objective does not support minibatching");
}

QuadraticObjective::QuadraticObjective(Matrix a, Vector minimizer, double offset)
    : a_(std::move(a)), minimizer_(std::move(minimizer)), offset_(offset) {
  require(a_.rows() == a_.cols() && a_.rows() == minimizer_.size(),
          "QuadraticObjective: Hessian and minimizer dimensions disagree");
}

double QuadraticObjective::value(const Vector& w) const {
  require(w.size() == dim(), "QuadraticObjective: dimension mismatch");
  const Vector r = w - minimizer_;
  return 0.5 * r.dot(a_ * r) + offset_;
}

LossGrad QuadraticObjective::value_grad(const Vector& w) const {
  require(w.size() == dim(), "QuadraticObjective: dimension mismatch");
  const Vector r = w - minimizer_;
  Vector g = a_ * r;
  const double v = 0.5 * r.dot(g) + offset_;
  return {v, std::move(g)};
}

Vector QuadraticObjective::hvp(const Vector& w, const Vector& v) const {
  require(w.size() == dim() && v.size() == dim(), "QuadraticObjective: dimension mismatch");
  return a_ * v;
}

ScalarObjective::ScalarObjective(Fn value, Fn first, Fn second)
    : value_(std::move(value)), first_(std::move(first)), second_(std::move(second)) {}

double ScalarObjective::value(const Vector& w) const {
  require(w.size() == 1, "ScalarObjective: dimension mismatch");
  return value_(w[0]);
}

LossGrad ScalarObjective::value_grad(const Vector& w) const {
  require(w.size() == 1, "ScalarObjective: dimension mismatch");
  return {value_(w[0]), Vector::Constant(1, first_(w[0]))};
}

Vector ScalarObjective::hvp(const Vector& w, const Vector& v) const {
  require(w.size() == 1 && v.size() == 1, "ScalarObjective: dimension mismatch");
  return Vector::Constant(1, second_(w[0]) * v[0]);
}

MlpObjective::MlpObjective(MlpArch arch, Batch batch) : arch_(std::move(arch)), batch_(std::move(batch)) {
  validate_batch(arch_, batch_);
}

double MlpObjective::value(const Vector& w) const { return loss(arch_, w, batch_); }

LossGrad MlpObjective::value_grad(const Vector& w) const { return loss_grad(arch_, w, batch_); }

Vector MlpObjective::hvp(const Vector& w, const Vector& v) const { return taylorcl::hvp(arch_, w, batch_, v); }

Matrix MlpObjective::hessian_columns(const Vector& w) const { return taylorcl::hessian_columns(arch_, w, batch_); }

Matrix Objective::hessian_columns(const Vector& w) const {
  const Index d = dim();
  Matrix h(d, d);
  Vector e = Vector::Zero(d);
  for (Index j = 0; j < d; ++j) {
    e[j] = 1.0;
    h.col(j) = hvp(w, e);
    e[j] = 0.0;
  }
  return h;
}

std::unique_ptr<Objective> MlpObjective::minibatch(std::span<const Index> rows) const {
  return std::make_unique<MlpObjective>(arch_, batch_.subset(rows));
}

Matrix dense_hessian(const Objective& objective, const Vector& w, double* symmetry_defect) {
  const Index d = objective.dim();
  require(d <= kMaxDenseHessianDim, "dense Hessian requested for d = " + std::to_string(d) +
                                        " (limit " + std::to_string(kMaxDenseHessianDim) + ")");
  require(w.size() == d, "dense_hessian: dimension mismatch");
  const Matrix h = objective.hessian_columns(w);
  if (symmetry_defect != nullptr) *symmetry_defect = (h - h.transpose()).cwiseAbs().maxCoeff();
  Matrix sym = 0.5 * (h + h.transpose());
  require_finite(sym, "dense_hessian");
  return sym;
}

}  // namespace taylorcl
