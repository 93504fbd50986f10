#pragma once

// Differentiable per-task losses. Every consumer of a task loss (proxy
// construction, training, the theory checks) goes through this interface, so
// the same code runs on neural networks and on closed-form test functions.

#include "taylorcl/linalg.hpp"
#include "taylorcl/mlp.hpp"

#include <functional>
#include <memory>
#include <span>

namespace taylorcl {

class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual double value(const Vector& w) const = 0;
  virtual LossGrad value_grad(const Vector& w) const = 0;
  virtual Vector hvp(const Vector& w, const Vector& v) const = 0;
  /// Columns H e_j, unsymmetrized. The default takes dim() HVPs.
  virtual Matrix hessian_columns(const Vector& w) const;

  /// Number of examples behind an empirical loss; 0 for closed-form losses,
  /// which cannot be minibatched.
  virtual Index num_examples() const { return 0; }
  virtual std::unique_ptr<Objective> minibatch(std::span<const Index> rows) const;
};

/// 1/2 (w - m)^T A (w - m) + offset.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Matrix a, Vector minimizer, double offset = 0.0);

  Index dim() const override { return minimizer_.size(); }
  double value(const Vector& w) const override;
  LossGrad value_grad(const Vector& w) const override;
  Vector hvp(const Vector& w, const Vector& v) const override;

  const Matrix& hessian() const { return a_; }
  const Vector& minimizer() const { return minimizer_; }
  double offset() const { return offset_; }

 private:
  Matrix a_;
  Vector minimizer_;
  double offset_;
};

/// Closed-form loss of one parameter, given as callables for the value and
/// its first two derivatives.
class ScalarObjective final : public Objective {
 public:
  using Fn = std::function<double(double)>;
  ScalarObjective(Fn value, Fn first, Fn second);

  Index dim() const override { return 1; }
  double value(const Vector& w) const override;
  LossGrad value_grad(const Vector& w) const override;
  Vector hvp(const Vector& w, const Vector& v) const override;

 private:
  Fn value_;
  Fn first_;
  Fn second_;
};

/// Identically zero loss.
class ZeroObjective final : public Objective {
 public:
  explicit ZeroObjective(Index dim) : dim_(dim) {}
  Index dim() const override { return dim_; }
  double value(const Vector&) const override { return 0.0; }
  LossGrad value_grad(const Vector&) const override { return {0.0, Vector::Zero(dim_)}; }
  Vector hvp(const Vector&, const Vector&) const override { return Vector::Zero(dim_); }

 private:
  Index dim_;
};

/// Mean cross-entropy of an MLP over a fixed batch.
class MlpObjective final : public Objective {
 public:
  MlpObjective(MlpArch arch, Batch batch);

  Index dim() const override { return arch_.num_params(); }
  double value(const Vector& w) const override;
  LossGrad value_grad(const Vector& w) const override;
  Vector hvp(const Vector& w, const Vector& v) const override;
  Matrix hessian_columns(const Vector& w) const override;
  Index num_examples() const override { return batch_.size(); }
  std::unique_ptr<Objective> minibatch(std::span<const Index> rows) const override;

  const MlpArch& arch() const { return arch_; }
  const Batch& batch() const { return batch_; }

 private:
  MlpArch arch_;
  Batch batch_;
};

/// Largest dimension for which dense Hessians are assembled.
inline constexpr Index kMaxDenseHessianDim = 2500;

/// Dense Hessian from dim() Hessian-vector products, symmetrized as
/// (H + H^T) / 2. The pre-symmetrization defect max|H - H^T| is written to
/// `symmetry_defect` when given.
Matrix dense_hessian(const Objective& objective, const Vector& w, double* symmetry_defect = nullptr);

}  // namespace taylorcl
