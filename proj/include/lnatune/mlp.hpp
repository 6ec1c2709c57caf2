#pragma once

#include "lnatune/types.hpp"

#include <cmath>
#include <random>
#include <string_view>
#include <vector>

namespace lnatune {

enum class Activation { Tanh, Identity };

std::string_view to_string(Activation a);
std::optional<Activation> activation_from_string(std::string_view s);

template <typename Scalar>
struct DenseLayer {
  MatrixX<Scalar> weights;  // fan_out x fan_in
  VectorX<Scalar> bias;     // fan_out

  Eigen::Index fan_in() const { return weights.cols(); }
  Eigen::Index fan_out() const { return weights.rows(); }
};

/// Fully connected network: hidden layers use `activation`, the output layer is linear.
/// Batches are N x width matrices, one sample per row.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = MatrixX<Scalar>;
  using Layers = std::vector<DenseLayer<Scalar>>;

  Mlp() = default;
  Mlp(Layers layers, Activation activation, Matrix skip = Matrix())
      : layers_(std::move(layers)), skip_(std::move(skip)), activation_(activation) {}

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  template <typename Rng>
  static Mlp glorot(const std::vector<int>& widths, Activation activation, Rng& rng) {
    Layers layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const int fan_in = widths[l], fan_out = widths[l + 1];
      const Scalar limit = std::sqrt(Scalar(6) / Scalar(fan_in + fan_out));
      std::uniform_real_distribution<Scalar> dist(-limit, limit);
      DenseLayer<Scalar> layer{Matrix(fan_out, fan_in), VectorX<Scalar>::Zero(fan_out)};
      // Fill row by row so the draw order matches the row-major file layout.
      for (int r = 0; r < fan_out; ++r)
        for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = dist(rng);
      layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers), activation);
  }

  const Layers& layers() const { return layers_; }
  Layers& layers() { return layers_; }
  /// Direct input-to-output weights (fan_out x fan_in); empty when the network has no bypass.
  const Matrix& skip() const { return skip_; }
  Matrix& skip() { return skip_; }
  bool has_skip() const { return skip_.size() > 0; }
  Activation activation() const { return activation_; }
  std::size_t hidden_layers() const { return layers_.empty() ? 0 : layers_.size() - 1; }
  Eigen::Index input_width() const { return layers_.front().fan_in(); }
  Eigen::Index output_width() const { return layers_.back().fan_out(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n + static_cast<std::size_t>(skip_.size());
  }

  template <typename Derived>
  Matrix forward(const Eigen::MatrixBase<Derived>& x) const {
    Matrix a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = a * layers_[l].weights.transpose();
      z.rowwise() += layers_[l].bias.transpose();
      a = (l + 1 < layers_.size()) ? activate(z) : std::move(z);
    }
    if (has_skip()) a.noalias() += x * skip_.transpose();
    return a;
  }

  /// Mean over samples of the summed squared output error.
  template <typename DX, typename DY>
  Scalar loss(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) const {
    return (forward(x) - y).squaredNorm() / Scalar(x.rows());
  }

  /// Gradient of loss(): same shapes as layers(), plus the bypass (empty without one).
  struct Gradient {
    Layers layers;
    Matrix skip;
  };

  template <typename DX, typename DY>
  Gradient gradient(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) const {
    const std::size_t depth = layers_.size();
    std::vector<Matrix> pre(depth), act(depth + 1);
    act[0] = x;
    for (std::size_t l = 0; l < depth; ++l) {
      pre[l] = act[l] * layers_[l].weights.transpose();
      pre[l].rowwise() += layers_[l].bias.transpose();
      act[l + 1] = (l + 1 < depth) ? activate(pre[l]) : pre[l];
    }
    if (has_skip()) act[depth].noalias() += act[0] * skip_.transpose();

    Gradient g;
    g.layers.resize(depth);
    Matrix delta = (act[depth] - y) * (Scalar(2) / Scalar(x.rows()));
    if (has_skip()) g.skip = delta.transpose() * act[0];
    for (std::size_t l = depth; l-- > 0;) {
      g.layers[l].weights = delta.transpose() * act[l];
      g.layers[l].bias = delta.colwise().sum().transpose();
      if (l > 0) delta = (delta * layers_[l].weights).cwiseProduct(activate_derivative(pre[l - 1]));
    }
    return g;
  }

  void step(const Gradient& g, Scalar learning_rate) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].weights -= learning_rate * g.layers[l].weights;
      layers_[l].bias -= learning_rate * g.layers[l].bias;
    }
    if (has_skip()) skip_ -= learning_rate * g.skip;
  }

  /// Visits every parameter in file order: per layer, weights row-major, then
  /// bias; the bypass comes last, row-major.
  template <typename F>
  void for_each_parameter(F&& f) {
    for (auto& layer : layers_) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) f(layer.weights(r, c));
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) f(layer.bias(r));
    }
    for (Eigen::Index r = 0; r < skip_.rows(); ++r)
      for (Eigen::Index c = 0; c < skip_.cols(); ++c) f(skip_(r, c));
  }

 private:
  Matrix activate(const Matrix& z) const {
    if (activation_ == Activation::Identity) return z;
    return z.array().tanh().matrix();
  }
  Matrix activate_derivative(const Matrix& z) const {
    if (activation_ == Activation::Identity) return Matrix::Ones(z.rows(), z.cols());
    return (Scalar(1) - z.array().tanh().square()).matrix();
  }

  Layers layers_;
  Matrix skip_;
  Activation activation_ = Activation::Tanh;
};

/// Adam moment estimates for one network (beta1 0.9, beta2 0.999).
template <typename Scalar>
class AdamState {
 public:
  explicit AdamState(const Mlp<Scalar>& net) {
    for (const auto& l : net.layers()) {
      m_.push_back({MatrixX<Scalar>::Zero(l.fan_out(), l.fan_in()), VectorX<Scalar>::Zero(l.fan_out())});
    }
    skip_m_ = MatrixX<Scalar>::Zero(net.skip().rows(), net.skip().cols());
    v_ = m_;
    skip_v_ = skip_m_;
  }

  void step(Mlp<Scalar>& net, const typename Mlp<Scalar>::Gradient& grads, Scalar learning_rate) {
    ++t_;
    const Scalar c1 = Scalar(1) - std::pow(kBeta1, Scalar(t_));
    const Scalar c2 = Scalar(1) - std::pow(kBeta2, Scalar(t_));
    auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
      m = kBeta1 * m + (Scalar(1) - kBeta1) * g;
      v = kBeta2 * v + (Scalar(1) - kBeta2) * g.cwiseAbs2();
      param.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
    };
    for (std::size_t l = 0; l < grads.layers.size(); ++l) {
      update(net.layers()[l].weights, grads.layers[l].weights, m_[l].weights, v_[l].weights);
      update(net.layers()[l].bias, grads.layers[l].bias, m_[l].bias, v_[l].bias);
    }
    if (net.has_skip()) update(net.skip(), grads.skip, skip_m_, skip_v_);
  }

 private:
  static constexpr Scalar kBeta1 = Scalar(0.9);
  static constexpr Scalar kBeta2 = Scalar(0.999);
  static constexpr Scalar kEps = Scalar(1e-8);
  typename Mlp<Scalar>::Layers m_, v_;
  MatrixX<Scalar> skip_m_, skip_v_;
  long t_ = 0;
};

}  // namespace lnatune
