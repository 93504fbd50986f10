#pragma once

// Fully connected classifier: hidden layers use ReLU or tanh, the output layer
// is linear and feeds a softmax cross-entropy loss averaged over the batch.
//
// Parameter layout. Layer l owns a contiguous block holding the column-major
// fan_out x (fan_in + 1) matrix [W_l | b_l]; blocks are stored layer after
// layer. Each block is therefore W_l (column-major) followed by b_l, and the
// column-major vectorization matches the (A kron G) ordering used by the
// Kronecker-factored curvature.

#include "taylorcl/linalg.hpp"

#include <span>
#include <vector>

namespace taylorcl {

enum class Activation { relu, tanh };

struct MlpArch {
  std::vector<Index> layer_sizes;  // input, hidden..., classes
  Activation hidden_activation = Activation::relu;

  Index num_layers() const { return static_cast<Index>(layer_sizes.size()) - 1; }
  Index input_dim() const { return layer_sizes.front(); }
  Index num_classes() const { return layer_sizes.back(); }
  Index num_params() const;
  void validate() const;
};

struct LayerSlice {
  Index offset = 0;
  Index fan_in = 0;
  Index fan_out = 0;

  Index rows() const { return fan_out; }
  Index cols() const { return fan_in + 1; }
  Index size() const { return fan_out * (fan_in + 1); }
};

std::vector<LayerSlice> layer_layout(const MlpArch& arch);

inline Eigen::Map<Matrix> layer_block(Vector& w, const LayerSlice& s) {
  return {w.data() + s.offset, s.rows(), s.cols()};
}
inline Eigen::Map<const Matrix> layer_block(const Vector& w, const LayerSlice& s) {
  return {w.data() + s.offset, s.rows(), s.cols()};
}

/// Labelled examples, one per row of `inputs`.
struct Batch {
  Matrix inputs;
  std::vector<int> labels;

  Index size() const { return inputs.rows(); }
  Batch subset(std::span<const Index> rows) const;
};

void validate_batch(const MlpArch& arch, const Batch& batch);

/// Weights ~ N(0, 1/fan_in), biases zero.
Vector init_params(const MlpArch& arch, Rng& rng);

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

Matrix logits(const MlpArch& arch, const Vector& w, const Matrix& inputs);
/// Argmax of the logits; ties go to the lowest class index.
std::vector<int> predict(const MlpArch& arch, const Vector& w, const Matrix& inputs);
double accuracy(const MlpArch& arch, const Vector& w, const Batch& batch);

double loss(const MlpArch& arch, const Vector& w, const Batch& batch);
LossGrad loss_grad(const MlpArch& arch, const Vector& w, const Batch& batch);
Vector per_example_losses(const MlpArch& arch, const Vector& w, const Batch& batch);
/// Row i is the gradient of example i's loss (n x d).
Matrix per_example_gradients(const MlpArch& arch, const Vector& w, const Batch& batch);

/// Exact Hessian-vector product of the mean loss, by forward-mode
/// differentiation of the backward pass.
Vector hvp(const MlpArch& arch, const Vector& w, const Batch& batch, const Vector& v);
/// Columns H e_j for every coordinate, before any symmetrization.
Matrix hessian_columns(const MlpArch& arch, const Vector& w, const Batch& batch);

enum class FisherMode {
  sampled_label,   // labels drawn from the model's softmax (true Fisher)
  empirical_label  // dataset labels (empirical Fisher)
};

std::vector<int> fisher_labels(const MlpArch& arch, const Vector& w, const Batch& batch, Rng& rng,
                               FisherMode mode);

/// Kronecker factor statistics per layer: a[l] is the mean of abar abar^T over
/// the layer input with a trailing 1, g[l] the mean of g g^T over the
/// per-example pre-activation gradients.
struct PerLayerStats {
  std::vector<Matrix> a;
  std::vector<Matrix> g;
};

PerLayerStats per_layer_stats(const MlpArch& arch, const Vector& w, const Batch& batch, Rng& rng,
                              FisherMode mode);

/// Mean of squared per-example gradients.
Vector fisher_diagonal(const MlpArch& arch, const Vector& w, const Batch& batch, Rng& rng, FisherMode mode);

/// Smallest |pre-activation| over hidden units; used to keep finite
/// differences away from ReLU kinks.
double min_abs_preactivation(const MlpArch& arch, const Vector& w, const Matrix& inputs);

}  // namespace taylorcl
