#pragma once

// Minimal dense-network engine: batched forward/backward over fully
// connected layers, Adam with a decaying learning rate, soft target updates,
// and a flat binary checkpoint format.
//
// Batches are stored column-wise: an input matrix is (features x batch).
// All parameters of a network live in one contiguous vector so optimizers,
// target blending and checkpoints work on flat storage.

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "bibc/errors.hpp"
#include "bibc/numerics.hpp"

namespace bibc {

enum class Activation { identity, tanh, relu };

/// Smallest power of two >= n; the hidden-layer sizing rule for every network.
constexpr std::size_t hidden_width(std::size_t n) { return std::bit_ceil(std::max<std::size_t>(n, 1)); }

struct MlpSpec {
  std::vector<std::size_t> sizes;  // input, hidden..., output
  Activation hidden = Activation::tanh;
  Activation output = Activation::identity;
  // Optional second input concatenated below the activations entering
  // dense layer `side_layer` (0 = concatenated with the network input).
  std::size_t side_inputs = 0;
  std::size_t side_layer = 0;
};

class Mlp {
 public:
  struct InputGradient {
    RealMatrix input;
    RealMatrix side;
  };

  Mlp() = default;

  /// Weights and biases uniform in +-1/sqrt(fan_in); the last layer is
  /// further multiplied by `final_layer_scale`.
  Mlp(MlpSpec spec, SeededRng& rng, double final_layer_scale = 1.0) : spec_(std::move(spec)) {
    if (spec_.sizes.size() < 2) throw ParameterError("Mlp: need at least input and output sizes");
    for (std::size_t s : spec_.sizes)
      if (s == 0) throw ParameterError("Mlp: layer sizes must be positive");
    if (spec_.side_inputs > 0 && spec_.side_layer >= layer_count())
      throw ParameterError("Mlp: side input layer out of range");
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layer_count(); ++l) {
      Layer layer{fan_in(l), spec_.sizes[l + 1], offset, 0};
      layer.b_offset = offset + layer.in * layer.out;
      offset = layer.b_offset + layer.out;
      layers_.push_back(layer);
    }
    params_ = RealVector::Zero(static_cast<Eigen::Index>(offset));
    grads_ = RealVector::Zero(static_cast<Eigen::Index>(offset));
    for (std::size_t l = 0; l < layer_count(); ++l) {
      const Layer& layer = layers_[l];
      double limit = 1.0 / std::sqrt(static_cast<double>(layer.in));
      if (l + 1 == layer_count()) limit *= final_layer_scale;
      const std::size_t end = layer.b_offset + layer.out;
      for (std::size_t i = layer.w_offset; i < end; ++i)
        params_[static_cast<Eigen::Index>(i)] = rng.uniform(-limit, limit);
    }
  }

  const MlpSpec& spec() const { return spec_; }
  std::size_t layer_count() const { return spec_.sizes.size() - 1; }
  std::size_t input_dim() const { return spec_.sizes.front(); }
  std::size_t output_dim() const { return spec_.sizes.back(); }
  std::size_t side_dim() const { return spec_.side_inputs; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

  RealVector& params() { return params_; }
  const RealVector& params() const { return params_; }
  const RealVector& grads() const { return grads_; }
  RealVector& grads() { return grads_; }
  void zero_grad() { grads_.setZero(); }

  /// Pure evaluation; does not touch the backward cache.
  RealMatrix predict(const RealMatrix& x, const RealMatrix* side = nullptr) const {
    check_inputs(x, side);
    RealMatrix h = x;
    for (std::size_t l = 0; l < layer_count(); ++l) {
      const RealMatrix in = layer_input(l, h, side);
      h = activate(affine(l, in), l);
    }
    return h;
  }

  /// Evaluation that caches what backward() needs.
  const RealMatrix& forward(const RealMatrix& x, const RealMatrix* side = nullptr) {
    check_inputs(x, side);
    inputs_.assign(layer_count(), RealMatrix());
    outputs_.assign(layer_count(), RealMatrix());
    const RealMatrix* h = &x;
    for (std::size_t l = 0; l < layer_count(); ++l) {
      inputs_[l] = layer_input(l, *h, side);
      outputs_[l] = activate(affine(l, inputs_[l]), l);
      h = &outputs_[l];
    }
    cached_ = true;
    return outputs_.back();
  }

  /// Reverse pass for the most recent forward(). Parameter gradients of
  /// sum_j <d_out_j, y_j> are added into grads(); the gradient with respect
  /// to the input (and side input) is returned. Consumes the cache.
  InputGradient backward(const RealMatrix& d_out) {
    if (!cached_) throw StateError("Mlp::backward called without a preceding forward");
    if (d_out.rows() != static_cast<Eigen::Index>(output_dim()) ||
        d_out.cols() != outputs_.back().cols())
      throw ParameterError("Mlp::backward: gradient shape mismatch");
    InputGradient result;
    RealMatrix dy = d_out;
    for (std::size_t l = layer_count(); l-- > 0;) {
      RealMatrix dz = activation_grad(dy, outputs_[l], l);
      grad_w(l).noalias() += dz * inputs_[l].transpose();
      grad_b(l).noalias() += dz.rowwise().sum();
      RealMatrix din = weights(l).transpose() * dz;
      const Eigen::Index own = static_cast<Eigen::Index>(spec_.sizes[l]);
      if (spec_.side_inputs > 0 && l == spec_.side_layer) {
        result.side = din.bottomRows(static_cast<Eigen::Index>(spec_.side_inputs));
        dy = din.topRows(own);
      } else {
        dy = std::move(din);
      }
    }
    result.input = std::move(dy);
    cached_ = false;
    return result;
  }

 private:
  struct Layer {
    std::size_t in;
    std::size_t out;
    std::size_t w_offset;
    std::size_t b_offset;
  };

  std::size_t fan_in(std::size_t l) const {
    return spec_.sizes[l] + (spec_.side_inputs > 0 && l == spec_.side_layer ? spec_.side_inputs : 0);
  }

  Eigen::Map<const RealMatrix> weights(std::size_t l) const {
    const Layer& L = layers_[l];
    return {params_.data() + L.w_offset, static_cast<Eigen::Index>(L.out),
            static_cast<Eigen::Index>(L.in)};
  }
  Eigen::Map<const RealVector> bias(std::size_t l) const {
    const Layer& L = layers_[l];
    return {params_.data() + L.b_offset, static_cast<Eigen::Index>(L.out)};
  }
  Eigen::Map<RealMatrix> grad_w(std::size_t l) {
    const Layer& L = layers_[l];
    return {grads_.data() + L.w_offset, static_cast<Eigen::Index>(L.out),
            static_cast<Eigen::Index>(L.in)};
  }
  Eigen::Map<RealVector> grad_b(std::size_t l) {
    const Layer& L = layers_[l];
    return {grads_.data() + L.b_offset, static_cast<Eigen::Index>(L.out)};
  }

  void check_inputs(const RealMatrix& x, const RealMatrix* side) const {
    if (layers_.empty()) throw StateError("Mlp: network is not initialized");
    if (x.rows() != static_cast<Eigen::Index>(input_dim()))
      throw ParameterError("Mlp: input has " + std::to_string(x.rows()) + " rows, expected " +
                           std::to_string(input_dim()));
    if (spec_.side_inputs > 0) {
      if (side == nullptr || side->rows() != static_cast<Eigen::Index>(spec_.side_inputs) ||
          side->cols() != x.cols())
        throw ParameterError("Mlp: side input missing or mis-shaped");
    }
  }

  RealMatrix layer_input(std::size_t l, const RealMatrix& h, const RealMatrix* side) const {
    if (spec_.side_inputs == 0 || l != spec_.side_layer) return h;
    RealMatrix in(h.rows() + side->rows(), h.cols());
    in << h, *side;
    return in;
  }

  RealMatrix affine(std::size_t l, const RealMatrix& in) const {
    RealMatrix z = weights(l) * in;
    z.colwise() += bias(l);
    return z;
  }

  Activation activation_of(std::size_t l) const {
    return l + 1 == layer_count() ? spec_.output : spec_.hidden;
  }

  RealMatrix activate(RealMatrix z, std::size_t l) const {
    switch (activation_of(l)) {
      case Activation::tanh:
        return z.array().tanh().matrix();
      case Activation::relu:
        return z.cwiseMax(0.0);
      case Activation::identity:
        break;
    }
    return z;
  }

  RealMatrix activation_grad(const RealMatrix& dy, const RealMatrix& y, std::size_t l) const {
    switch (activation_of(l)) {
      case Activation::tanh:
        return (dy.array() * (1.0 - y.array().square())).matrix();
      case Activation::relu:
        return (dy.array() * (y.array() > 0.0).cast<double>()).matrix();
      case Activation::identity:
        break;
    }
    return dy;
  }

  MlpSpec spec_;
  std::vector<Layer> layers_;
  RealVector params_;
  RealVector grads_;
  std::vector<RealMatrix> inputs_;
  std::vector<RealMatrix> outputs_;
  bool cached_ = false;
};

// ---------------------------------------------------------------------------
// Optimization
// ---------------------------------------------------------------------------

enum class LrDecay {
  multiplicative,  // lr <- lr * (1 - decay)
  literal,         // lr <- decay * lr
};

struct AdamOptions {
  double lr = 1e-3;
  double decay = 1e-5;
  LrDecay mode = LrDecay::multiplicative;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, AdamOptions opts)
      : opts_(opts), lr_(opts.lr),
        m_(RealVector::Zero(static_cast<Eigen::Index>(n))),
        v_(RealVector::Zero(static_cast<Eigen::Index>(n))) {
    if (!(opts.lr > 0.0)) throw ParameterError("Adam: learning rate must be positive");
  }

  double lr() const { return lr_; }
  std::size_t steps() const { return t_; }

  void step(RealVector& params, const RealVector& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw ParameterError("Adam::step: shape mismatch");
    ++t_;
    const double b1 = opts_.beta1, b2 = opts_.beta2;
    m_ = b1 * m_ + (1.0 - b1) * grads;
    v_ = b2 * v_ + (1.0 - b2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + opts_.eps);
    lr_ = opts_.mode == LrDecay::multiplicative ? lr_ * (1.0 - opts_.decay) : lr_ * opts_.decay;
  }

 private:
  AdamOptions opts_;
  double lr_ = 0.0;
  RealVector m_;
  RealVector v_;
  std::size_t t_ = 0;
};

/// target <- tau * train + (1 - tau) * target, parameter-wise.
inline void soft_update(Mlp& target, const Mlp& train, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ParameterError("soft_update: tau must lie in (0, 1]");
  if (target.parameter_count() != train.parameter_count() ||
      target.spec().sizes != train.spec().sizes)
    throw ParameterError("soft_update: network shapes differ");
  target.params() = tau * train.params() + (1.0 - tau) * target.params();
}

/// Training network, its slowly-tracking target copy, and the optimizer.
struct NetPair {
  Mlp train;
  Mlp target;
  Adam adam;

  NetPair() = default;
  NetPair(Mlp net, AdamOptions opts)
      : train(net), target(std::move(net)), adam(train.parameter_count(), opts) {}

  void soft_update(double tau) { bibc::soft_update(target, train, tau); }
  void hard_sync() { target.params() = train.params(); }
  void apply_gradients() {
    adam.step(train.params(), train.grads());
    train.zero_grad();
  }
};

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------
//
// Layout, every field little-endian 64-bit:
//   u64 layer_count L
//   u64 sizes[L + 1]
//   u64 side_inputs, u64 side_layer
//   f64 params[P]      (per layer: weights column-major out x in, then bias)

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw ParameterError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const Mlp& net, std::ostream& os) {
  const auto& spec = net.spec();
  detail::put_u64(os, net.layer_count());
  for (std::size_t s : spec.sizes) detail::put_u64(os, s);
  detail::put_u64(os, spec.side_inputs);
  detail::put_u64(os, spec.side_layer);
  for (Eigen::Index i = 0; i < net.params().size(); ++i)
    detail::put_u64(os, std::bit_cast<std::uint64_t>(net.params()[i]));
}

/// Restores parameters into a network of identical shape.
inline void load_checkpoint(Mlp& net, std::istream& is) {
  const std::uint64_t layers = detail::get_u64(is);
  if (layers != net.layer_count()) throw ParameterError("checkpoint: layer count mismatch");
  for (std::size_t s : net.spec().sizes)
    if (detail::get_u64(is) != s) throw ParameterError("checkpoint: layer size mismatch");
  if (detail::get_u64(is) != net.spec().side_inputs ||
      detail::get_u64(is) != net.spec().side_layer)
    throw ParameterError("checkpoint: side input mismatch");
  for (Eigen::Index i = 0; i < net.params().size(); ++i)
    net.params()[i] = std::bit_cast<double>(detail::get_u64(is));
}

inline void save_checkpoint(const Mlp& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParameterError("checkpoint: cannot open " + path);
  save_checkpoint(net, os);
}

inline void load_checkpoint(Mlp& net, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParameterError("checkpoint: cannot open " + path);
  load_checkpoint(net, is);
}

}  // namespace bibc
