// Dense feedforward network engine: forward pass, reverse-mode gradients and
// the flat parameter layout shared by the sampler, the pool and the surrogate.
//
// Parameter layout is layer-major: for each transition l the weight matrix
// W_l (fan_out x fan_in, row-major) followed by the bias b_l (fan_out).
#pragma once

#include "nipa/common.hpp"

#include <numeric>
#include <utility>

namespace nipa {

enum class Activation { ReLU, Identity, Tanh };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "identity") return Activation::Identity;
  if (s == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation tag: " + s);
}

struct NetSpec {
  std::vector<int> widths;              // input, hidden..., output
  std::vector<Activation> activations;  // one per transition

  int transitions() const { return static_cast<int>(widths.size()) - 1; }
  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }

  void validate() const {
    if (widths.size() < 2)
      throw std::invalid_argument("NetSpec: need at least 2 layers");
    for (std::size_t i = 0; i < widths.size(); ++i)
      if (widths[i] <= 0)
        throw std::invalid_argument("NetSpec: width of layer " + std::to_string(i) +
                                    " must be positive, got " + std::to_string(widths[i]));
    if (activations.size() != widths.size() - 1)
      throw std::invalid_argument("NetSpec: expected " + std::to_string(widths.size() - 1) +
                                  " activations, got " + std::to_string(activations.size()));
  }

  Index param_dim() const {
    Index d = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
      d += static_cast<Index>(widths[l]) * widths[l + 1] + widths[l + 1];
    return d;
  }
};

/// Spec with the given hidden activation everywhere and an identity output.
inline NetSpec make_mlp_spec(std::vector<int> widths, Activation hidden,
                             Activation output = Activation::Identity) {
  NetSpec spec;
  spec.widths = std::move(widths);
  spec.activations.assign(spec.widths.size() - 1, hidden);
  if (!spec.activations.empty()) spec.activations.back() = output;
  spec.validate();
  return spec;
}

struct LayerOffsets {
  Index w_offset;
  Index b_offset;
  Index fan_in;
  Index fan_out;
};

inline std::vector<LayerOffsets> layer_offsets(const NetSpec& spec) {
  std::vector<LayerOffsets> out;
  out.reserve(spec.widths.size() - 1);
  Index off = 0;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const Index fan_in = spec.widths[l];
    const Index fan_out = spec.widths[l + 1];
    out.push_back({off, off + fan_in * fan_out, fan_in, fan_out});
    off += fan_in * fan_out + fan_out;
  }
  return out;
}

inline void check_param_dim(const NetSpec& spec, const Vector& params, const char* where) {
  if (params.size() != spec.param_dim())
    throw std::invalid_argument(std::string(where) + ": parameter vector has length " +
                                std::to_string(params.size()) + ", spec needs " +
                                std::to_string(spec.param_dim()));
}

struct ConstLayerView {
  Eigen::Map<const MatrixRM> W;
  Eigen::Map<const Vector> b;
};

/// Read-only weight/bias views into the flat parameter vector.
inline std::vector<ConstLayerView> unflatten(const NetSpec& spec, const Vector& params) {
  spec.validate();
  check_param_dim(spec, params, "unflatten");
  std::vector<ConstLayerView> views;
  views.reserve(spec.widths.size() - 1);
  for (const auto& off : layer_offsets(spec)) {
    views.push_back({Eigen::Map<const MatrixRM>(params.data() + off.w_offset, off.fan_out, off.fan_in),
                     Eigen::Map<const Vector>(params.data() + off.b_offset, off.fan_out)});
  }
  return views;
}

/// Packs per-layer weights/biases back into the flat layout. Inverse of unflatten.
inline Vector flatten(const NetSpec& spec, const std::vector<Matrix>& weights,
                      const std::vector<Vector>& biases) {
  spec.validate();
  const auto offs = layer_offsets(spec);
  if (weights.size() != offs.size() || biases.size() != offs.size())
    throw std::invalid_argument("flatten: expected " + std::to_string(offs.size()) +
                                " weight/bias pairs, got " + std::to_string(weights.size()) +
                                "/" + std::to_string(biases.size()));
  Vector params(spec.param_dim());
  for (std::size_t l = 0; l < offs.size(); ++l) {
    const auto& off = offs[l];
    if (weights[l].rows() != off.fan_out || weights[l].cols() != off.fan_in)
      throw std::invalid_argument("flatten: weight " + std::to_string(l) + " has shape " +
                                  std::to_string(weights[l].rows()) + "x" +
                                  std::to_string(weights[l].cols()) + ", expected " +
                                  std::to_string(off.fan_out) + "x" + std::to_string(off.fan_in));
    if (biases[l].size() != off.fan_out)
      throw std::invalid_argument("flatten: bias " + std::to_string(l) + " has length " +
                                  std::to_string(biases[l].size()) + ", expected " +
                                  std::to_string(off.fan_out));
    Eigen::Map<MatrixRM>(params.data() + off.w_offset, off.fan_out, off.fan_in) = weights[l];
    Eigen::Map<Vector>(params.data() + off.b_offset, off.fan_out) = biases[l];
  }
  return params;
}

inline void apply_activation(Activation a, Matrix& z) {
  switch (a) {
    case Activation::ReLU:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Tanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::Identity:
      break;
  }
}

// Derivative through the activation expressed via post-activation values;
// for ReLU the subgradient at 0 is taken as 0.
inline Matrix activation_grad_from_output(Activation a, const Matrix& act) {
  switch (a) {
    case Activation::ReLU:
      return (act.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh:
      return (1.0 - act.array().square()).matrix();
    case Activation::Identity:
      return Matrix::Ones(act.rows(), act.cols());
  }
  return Matrix::Ones(act.rows(), act.cols());
}

struct ForwardCache {
  std::vector<Matrix> acts;  // acts[0] = inputs, acts[l+1] = output of transition l
};

inline Matrix forward_cached(const NetSpec& spec, const Vector& params, const Matrix& inputs,
                             ForwardCache* cache) {
  spec.validate();
  check_param_dim(spec, params, "forward");
  if (inputs.cols() != spec.input_dim())
    throw std::invalid_argument("forward: inputs have " + std::to_string(inputs.cols()) +
                                " columns, layer 0 expects " + std::to_string(spec.input_dim()));
  const auto views = unflatten(spec, params);
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(inputs);
  }
  Matrix a = inputs;
  for (std::size_t l = 0; l < views.size(); ++l) {
    Matrix z = a * views[l].W.transpose();
    z.rowwise() += views[l].b.transpose();
    apply_activation(spec.activations[l], z);
    a = std::move(z);
    if (cache) cache->acts.push_back(a);
  }
  return a;
}

/// Batched forward pass; rows of `inputs` are observations.
inline Matrix forward(const NetSpec& spec, const Vector& params, const Matrix& inputs) {
  return forward_cached(spec, params, inputs, nullptr);
}

enum class LossTag { GaussianNll, BernoulliLogitNll, Mse };

struct NonFiniteLossError : std::runtime_error {
  Vector iterate;
  explicit NonFiniteLossError(std::string msg, Vector at)
      : std::runtime_error(std::move(msg)), iterate(std::move(at)) {}
};

struct LossResult {
  double loss;
  Vector grad;
};

/// Loss and its gradient w.r.t. the flat parameters.
///
/// GaussianNll:       sum (y - f)^2 / (2 noise_var)   (negative log-likelihood up
///                    to its additive constant)
/// BernoulliLogitNll: sum softplus(z) - y z over single-logit outputs
/// Mse:               mean squared error over all output entries
inline LossResult loss_and_grad(const NetSpec& spec, const Vector& params, const Matrix& inputs,
                                const Matrix& targets, LossTag tag, double noise_var = 1.0) {
  ForwardCache cache;
  const Matrix f = forward_cached(spec, params, inputs, &cache);
  if (f.rows() != targets.rows() || f.cols() != targets.cols())
    throw std::invalid_argument("loss_and_grad: output is " + std::to_string(f.rows()) + "x" +
                                std::to_string(f.cols()) + ", targets are " +
                                std::to_string(targets.rows()) + "x" +
                                std::to_string(targets.cols()));

  double loss = 0.0;
  Matrix dact;  // d loss / d output activations
  switch (tag) {
    case LossTag::GaussianNll: {
      if (noise_var <= 0.0) throw std::invalid_argument("loss_and_grad: noise_var must be positive");
      const Matrix r = f - targets;
      loss = r.squaredNorm() / (2.0 * noise_var);
      dact = r / noise_var;
      break;
    }
    case LossTag::BernoulliLogitNll: {
      if (f.cols() != 1)
        throw std::invalid_argument("loss_and_grad: bernoulli_logit_nll expects a single logit output");
      dact.resize(f.rows(), 1);
      for (Index i = 0; i < f.rows(); ++i) {
        const double z = f(i, 0);
        const double y = targets(i, 0);
        loss += stable_softplus(z) - y * z;
        dact(i, 0) = sigmoid(z) - y;
      }
      break;
    }
    case LossTag::Mse: {
      const Matrix r = f - targets;
      const double denom = static_cast<double>(r.rows()) * static_cast<double>(r.cols());
      loss = r.squaredNorm() / denom;
      dact = (2.0 / denom) * r;
      break;
    }
  }
  if (!std::isfinite(loss))
    throw NonFiniteLossError("loss_and_grad: non-finite loss " + std::to_string(loss), params);

  // Backprop through the cached activations.
  const auto views = unflatten(spec, params);
  const auto offs = layer_offsets(spec);
  Vector grad(spec.param_dim());
  Matrix delta;
  for (int l = spec.transitions() - 1; l >= 0; --l) {
    const Matrix dz =
        dact.cwiseProduct(activation_grad_from_output(spec.activations[l], cache.acts[l + 1]));
    Eigen::Map<MatrixRM>(grad.data() + offs[l].w_offset, offs[l].fan_out, offs[l].fan_in) =
        dz.transpose() * cache.acts[l];
    Eigen::Map<Vector>(grad.data() + offs[l].b_offset, offs[l].fan_out) = dz.colwise().sum();
    if (l > 0) dact = dz * views[l].W;
  }
  return {loss, std::move(grad)};
}

/// Uniform(-sqrt(6/(fan_in+fan_out)), +...) weight init, zero biases.
inline Vector glorot_uniform_init(const NetSpec& spec, Rng& rng) {
  spec.validate();
  Vector params = Vector::Zero(spec.param_dim());
  for (const auto& off : layer_offsets(spec)) {
    const double bound = std::sqrt(6.0 / static_cast<double>(off.fan_in + off.fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < off.fan_in * off.fan_out; ++i) params[off.w_offset + i] = dist(rng);
  }
  return params;
}

}  // namespace nipa
