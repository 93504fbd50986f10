#include "taylorcl/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace taylorcl {

Index MlpArch::num_params() const {
  Index d = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) d += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  return d;
}

void MlpArch::validate() const {
  require(layer_sizes.size() >= 2, "MlpArch: need at least input and output sizes");
  for (const auto n : layer_sizes) require(n >= 1, "MlpArch: layer sizes must be positive");
}

std::vector<LayerSlice> layer_layout(const MlpArch& arch) {
  arch.validate();
  std::vector<LayerSlice> out;
  Index offset = 0;
  for (Index l = 0; l < arch.num_layers(); ++l) {
    LayerSlice s{offset, arch.layer_sizes[static_cast<std::size_t>(l)],
                 arch.layer_sizes[static_cast<std::size_t>(l + 1)]};
    offset += s.size();
    out.push_back(s);
  }
  return out;
}

Batch Batch::subset(std::span<const Index> rows) const {
  Batch out;
  out.inputs.resize(static_cast<Index>(rows.size()), inputs.cols());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.row(static_cast<Index>(i)) = inputs.row(rows[i]);
    out.labels[i] = labels[static_cast<std::size_t>(rows[i])];
  }
  return out;
}

void validate_batch(const MlpArch& arch, const Batch& batch) {
  require(batch.size() >= 1, "Batch: empty");
  require(batch.inputs.cols() == arch.input_dim(), "Batch: input width does not match architecture");
  require(static_cast<Index>(batch.labels.size()) == batch.size(), "Batch: label count mismatch");
  for (const int y : batch.labels) {
    require(y >= 0 && y < arch.num_classes(), "Batch: label out of range");
  }
}

namespace {

void check_params(const MlpArch& arch, const Vector& w) {
  require(w.size() == arch.num_params(), "parameter vector length " + std::to_string(w.size()) +
                                             " does not match architecture (" +
                                             std::to_string(arch.num_params()) + ")");
}

Matrix activate(const Matrix& z, Activation act) {
  if (act == Activation::relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

struct Forward {
  std::vector<LayerSlice> layout;
  const Matrix* inputs = nullptr;
  std::vector<Matrix> pre;     // pre-activation of each layer, n x fan_out
  std::vector<Matrix> hidden;  // hidden[l] is the input to layer l + 1

  const Matrix& layer_input(std::size_t l) const { return l == 0 ? *inputs : hidden[l - 1]; }
  Index layers() const { return static_cast<Index>(layout.size()); }
};

// Derivatives of the hidden activation at layer l. For tanh they are read off
// the stored outputs, which saves recomputing tanh.
Matrix activation_slope(const Forward& f, std::size_t l, Activation act) {
  if (act == Activation::relu) return (f.pre[l].array() > 0.0).cast<double>().matrix();
  return (1.0 - f.hidden[l].array().square()).matrix();
}

Matrix activation_curvature(const Forward& f, std::size_t l, Activation act) {
  if (act == Activation::relu) return Matrix::Zero(f.pre[l].rows(), f.pre[l].cols());
  const auto t = f.hidden[l].array();
  return (-2.0 * t * (1.0 - t.square())).matrix();
}

Forward forward(const MlpArch& arch, const Vector& w, const Matrix& inputs) {
  check_params(arch, w);
  require(inputs.cols() == arch.input_dim(), "forward: input width does not match architecture");
  Forward f;
  f.layout = layer_layout(arch);
  f.inputs = &inputs;
  for (std::size_t l = 0; l < f.layout.size(); ++l) {
    const auto& s = f.layout[l];
    const auto block = layer_block(w, s);
    Matrix z = f.layer_input(l) * block.leftCols(s.fan_in).transpose();
    z.rowwise() += block.col(s.fan_in).transpose();
    f.pre.push_back(std::move(z));
    if (l + 1 < f.layout.size()) f.hidden.push_back(activate(f.pre.back(), arch.hidden_activation));
  }
  return f;
}

Matrix softmax_rows(const Matrix& z) {
  Matrix p = z;
  for (Index i = 0; i < p.rows(); ++i) {
    const double m = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Vector example_losses(const Matrix& z, const std::vector<int>& labels) {
  Vector out(z.rows());
  for (Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    const double lse = m + std::log((z.row(i).array() - m).exp().sum());
    out[i] = lse - z(i, labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

// Gradient of sum_i scale * loss_i with respect to the output pre-activations.
Matrix output_delta(const Matrix& probs, const std::vector<int>& labels, double scale) {
  Matrix d = probs;
  for (Index i = 0; i < d.rows(); ++i) d(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  return d * scale;
}

// Back-propagates output deltas; returns the pre-activation delta of every layer.
std::vector<Matrix> backward(const MlpArch& arch, const Vector& w, const Forward& f, Matrix top) {
  const auto layers = static_cast<std::size_t>(f.layers());
  std::vector<Matrix> dz(layers);
  dz[layers - 1] = std::move(top);
  for (std::size_t l = layers - 1; l > 0; --l) {
    const auto& s = f.layout[l];
    const Matrix da = dz[l] * layer_block(w, s).leftCols(s.fan_in);
    dz[l - 1] = da.cwiseProduct(activation_slope(f, l - 1, arch.hidden_activation));
  }
  return dz;
}

Vector assemble_gradient(const MlpArch& arch, const Forward& f, const std::vector<Matrix>& dz) {
  Vector grad(arch.num_params());
  for (std::size_t l = 0; l < f.layout.size(); ++l) {
    const auto& s = f.layout[l];
    auto block = layer_block(grad, s);
    block.leftCols(s.fan_in).noalias() = dz[l].transpose() * f.layer_input(l);
    block.col(s.fan_in) = dz[l].colwise().sum().transpose();
  }
  return grad;
}

Matrix with_bias_column(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

}  // namespace

Vector init_params(const MlpArch& arch, Rng& rng) {
  Vector w = Vector::Zero(arch.num_params());
  for (const auto& s : layer_layout(arch)) {
    auto block = layer_block(w, s);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.fan_in));
    for (Index c = 0; c < s.fan_in; ++c)
      for (Index r = 0; r < s.fan_out; ++r) block(r, c) = scale * rng.normal();
  }
  return w;
}

Matrix logits(const MlpArch& arch, const Vector& w, const Matrix& inputs) {
  return forward(arch, w, inputs).pre.back();
}

std::vector<int> predict(const MlpArch& arch, const Vector& w, const Matrix& inputs) {
  const Matrix z = logits(arch, w, inputs);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Index i = 0; i < z.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < z.cols(); ++c)
      if (z(i, c) > z(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const MlpArch& arch, const Vector& w, const Batch& batch) {
  validate_batch(arch, batch);
  const auto predicted = predict(arch, w, batch.inputs);
  Index correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == batch.labels[i];
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

Vector per_example_losses(const MlpArch& arch, const Vector& w, const Batch& batch) {
  validate_batch(arch, batch);
  Vector out = example_losses(forward(arch, w, batch.inputs).pre.back(), batch.labels);
  require_finite(out, "per_example_losses");
  return out;
}

double loss(const MlpArch& arch, const Vector& w, const Batch& batch) {
  return per_example_losses(arch, w, batch).mean();
}

LossGrad loss_grad(const MlpArch& arch, const Vector& w, const Batch& batch) {
  validate_batch(arch, batch);
  const Forward f = forward(arch, w, batch.inputs);
  const double n = static_cast<double>(batch.size());
  LossGrad out;
  out.loss = example_losses(f.pre.back(), batch.labels).mean();
  const auto dz = backward(arch, w, f, output_delta(softmax_rows(f.pre.back()), batch.labels, 1.0 / n));
  out.grad = assemble_gradient(arch, f, dz);
  require_finite(out.loss, "loss_grad");
  require_finite(out.grad, "loss_grad");
  return out;
}

Matrix per_example_gradients(const MlpArch& arch, const Vector& w, const Batch& batch) {
  validate_batch(arch, batch);
  const Forward f = forward(arch, w, batch.inputs);
  const auto dz = backward(arch, w, f, output_delta(softmax_rows(f.pre.back()), batch.labels, 1.0));
  Matrix cols(arch.num_params(), batch.size());
  for (std::size_t l = 0; l < f.layout.size(); ++l) {
    const auto& s = f.layout[l];
    const Matrix abar = with_bias_column(f.layer_input(l));
    for (Index i = 0; i < batch.size(); ++i) {
      Eigen::Map<Matrix>(cols.col(i).data() + s.offset, s.rows(), s.cols()).noalias() =
          dz[l].row(i).transpose() * abar.row(i);
    }
  }
  require_finite(cols, "per_example_gradients");
  return cols.transpose();
}

namespace {

// Forward and backward state at w, shared by every Hessian-vector product
// taken at the same point.
class HvpContext {
 public:
  HvpContext(const MlpArch& arch, const Vector& w, const Batch& batch)
      : arch_(arch), w_(w), f_(forward(arch, w, batch.inputs)), n_(static_cast<double>(batch.size())) {
    probs_ = softmax_rows(f_.pre.back());
    dz_ = backward(arch, w, f_, output_delta(probs_, batch.labels, 1.0 / n_));
    for (std::size_t l = 0; l + 1 < static_cast<std::size_t>(f_.layers()); ++l) {
      slope_.push_back(activation_slope(f_, l, arch.hidden_activation));
      curve_.push_back(activation_curvature(f_, l, arch.hidden_activation));
    }
  }

  Vector apply(const Vector& v) const {
    const auto layers = static_cast<std::size_t>(f_.layers());
    // Forward pass of the directional derivative along v.
    std::vector<Matrix> rpre(layers);
    std::vector<Matrix> rhidden(layers - 1);
    for (std::size_t l = 0; l < layers; ++l) {
      const auto& s = f_.layout[l];
      const auto block = layer_block(w_, s);
      const auto dir = layer_block(v, s);
      Matrix rz = f_.layer_input(l) * dir.leftCols(s.fan_in).transpose();
      rz.rowwise() += dir.col(s.fan_in).transpose();
      if (l > 0) rz.noalias() += rhidden[l - 1] * block.leftCols(s.fan_in).transpose();
      rpre[l] = std::move(rz);
      if (l + 1 < layers) rhidden[l] = slope_[l].cwiseProduct(rpre[l]);
    }

    // Softmax Jacobian applied to the logit perturbation.
    Matrix rdz = probs_.cwiseProduct(rpre.back());
    const Vector dots = rdz.rowwise().sum();
    rdz -= probs_.cwiseProduct(dots.replicate(1, probs_.cols()));
    rdz /= n_;

    Vector out(arch_.num_params());
    for (std::size_t l = layers; l-- > 0;) {
      const auto& s = f_.layout[l];
      auto block = layer_block(out, s);
      block.leftCols(s.fan_in).noalias() = rdz.transpose() * f_.layer_input(l);
      if (l > 0) block.leftCols(s.fan_in).noalias() += dz_[l].transpose() * rhidden[l - 1];
      block.col(s.fan_in) = rdz.colwise().sum().transpose();
      if (l == 0) break;

      const auto weights = layer_block(w_, s).leftCols(s.fan_in);
      const auto dir = layer_block(v, s).leftCols(s.fan_in);
      const Matrix da = dz_[l] * weights;
      const Matrix rda = rdz * weights + dz_[l] * dir;
      rdz = rda.cwiseProduct(slope_[l - 1]) + da.cwiseProduct(curve_[l - 1]).cwiseProduct(rpre[l - 1]);
    }
    require_finite(out, "hvp");
    return out;
  }

 private:
  const MlpArch& arch_;
  const Vector& w_;
  Forward f_;
  double n_;
  Matrix probs_;
  std::vector<Matrix> dz_;
  std::vector<Matrix> slope_;
  std::vector<Matrix> curve_;
};

}  // namespace

Vector hvp(const MlpArch& arch, const Vector& w, const Batch& batch, const Vector& v) {
  validate_batch(arch, batch);
  check_params(arch, v);
  return HvpContext(arch, w, batch).apply(v);
}

Matrix hessian_columns(const MlpArch& arch, const Vector& w, const Batch& batch) {
  validate_batch(arch, batch);
  const HvpContext ctx(arch, w, batch);
  const Index d = arch.num_params();
  Matrix h(d, d);
  Vector e = Vector::Zero(d);
  for (Index j = 0; j < d; ++j) {
    e[j] = 1.0;
    h.col(j) = ctx.apply(e);
    e[j] = 0.0;
  }
  return h;
}

std::vector<int> fisher_labels(const MlpArch& arch, const Vector& w, const Batch& batch, Rng& rng,
                               FisherMode mode) {
  validate_batch(arch, batch);
  if (mode == FisherMode::empirical_label) return batch.labels;
  const Matrix probs = softmax_rows(logits(arch, w, batch.inputs));
  std::vector<int> out(static_cast<std::size_t>(batch.size()));
  for (Index i = 0; i < probs.rows(); ++i) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    Index pick = probs.cols() - 1;
    for (Index c = 0; c < probs.cols(); ++c) {
      cumulative += probs(i, c);
      if (u < cumulative) {
        pick = c;
        break;
      }
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(pick);
  }
  return out;
}

namespace {

struct ExampleDeltas {
  Forward forward;
  std::vector<Matrix> dz;
};

ExampleDeltas example_deltas(const MlpArch& arch, const Vector& w, const Batch& batch, Rng& rng,
                             FisherMode mode) {
  const auto labels = fisher_labels(arch, w, batch, rng, mode);
  ExampleDeltas out{forward(arch, w, batch.inputs), {}};
  out.dz = backward(arch, w, out.forward, output_delta(softmax_rows(out.forward.pre.back()), labels, 1.0));
  return out;
}

}  // namespace

PerLayerStats per_layer_stats(const MlpArch& arch, const Vector& w, const Batch& batch, Rng& rng,
                              FisherMode mode) {
  const auto deltas = example_deltas(arch, w, batch, rng, mode);
  const double n = static_cast<double>(batch.size());
  PerLayerStats stats;
  for (std::size_t l = 0; l < deltas.forward.layout.size(); ++l) {
    const Matrix abar = with_bias_column(deltas.forward.layer_input(l));
    Matrix a = abar.transpose() * abar / n;
    Matrix g = deltas.dz[l].transpose() * deltas.dz[l] / n;
    stats.a.push_back(0.5 * (a + a.transpose()));
    stats.g.push_back(0.5 * (g + g.transpose()));
  }
  return stats;
}

Vector fisher_diagonal(const MlpArch& arch, const Vector& w, const Batch& batch, Rng& rng, FisherMode mode) {
  const auto deltas = example_deltas(arch, w, batch, rng, mode);
  const double n = static_cast<double>(batch.size());
  Vector out(arch.num_params());
  for (std::size_t l = 0; l < deltas.forward.layout.size(); ++l) {
    const auto& s = deltas.forward.layout[l];
    const Matrix dz2 = deltas.dz[l].array().square().matrix();
    auto block = layer_block(out, s);
    block.leftCols(s.fan_in).noalias() =
        dz2.transpose() * deltas.forward.layer_input(l).array().square().matrix() / n;
    block.col(s.fan_in) = dz2.colwise().sum().transpose() / n;
  }
  require_finite(out, "fisher_diagonal");
  return out;
}

double min_abs_preactivation(const MlpArch& arch, const Vector& w, const Matrix& inputs) {
  const Forward f = forward(arch, w, inputs);
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < f.pre.size(); ++l) out = std::min(out, f.pre[l].cwiseAbs().minCoeff());
  return out;
}

}  // namespace taylorcl
