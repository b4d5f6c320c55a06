#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "fmgspo/errors.hpp"
#include "fmgspo/seeding.hpp"
#include "fmgspo/types.hpp"

namespace fmgspo {

/// Two-layer graph convolution weights.
/// w0 maps F window features to H hidden units, w1 maps H hidden units to C classes.
/// There are no bias terms.
template <typename Scalar>
struct GamNetParams {
  Mat<Scalar> w0;  // F x H
  Mat<Scalar> w1;  // H x C

  Eigen::Index feature_len() const { return w0.rows(); }
  Eigen::Index hidden_width() const { return w0.cols(); }
  Eigen::Index class_count() const { return w1.cols(); }
};

/// Flat feed-forward baseline over the row-major flattened N x F window.
template <typename Scalar>
struct MlpParams {
  Mat<Scalar> w0;  // (N*F) x H
  Vec<Scalar> b0;  // H
  Mat<Scalar> w1;  // H x C
  Vec<Scalar> b1;  // C

  Eigen::Index input_len() const { return w0.rows(); }
  Eigen::Index hidden_width() const { return w0.cols(); }
  Eigen::Index class_count() const { return w1.cols(); }
};

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

/// Max-shifted softmax; shift invariant and safe for large logits.
template <typename Derived>
Vec<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Vec<Scalar> shifted = (logits.array() - logits.maxCoeff()).exp().matrix();
  return shifted / shifted.sum();
}

/// Zeroes sensor rows that are not selected.
template <typename Derived>
Mat<typename Derived::Scalar> apply_selection_mask(const Eigen::MatrixBase<Derived>& x, const SelectionVector& keep) {
  using Scalar = typename Derived::Scalar;
  if (static_cast<Eigen::Index>(keep.size()) != x.rows()) {
    throw ShapeError("selection length " + std::to_string(keep.size()) + " != sensor rows " +
                     std::to_string(x.rows()));
  }
  return keep.as_weights().template cast<Scalar>().asDiagonal() * x;
}

namespace detail {

template <typename Scalar, typename DX, typename DA>
void check_gamnet_shapes(const GamNetParams<Scalar>& p, const Eigen::MatrixBase<DX>& x,
                         const Eigen::MatrixBase<DA>& a_hat) {
  if (a_hat.rows() != a_hat.cols() || a_hat.rows() != x.rows()) {
    throw ShapeError("adjacency is " + std::to_string(a_hat.rows()) + "x" + std::to_string(a_hat.cols()) +
                     " but features have " + std::to_string(x.rows()) + " sensor rows");
  }
  if (p.w0.rows() != x.cols()) {
    throw ShapeError("w0 expects " + std::to_string(p.w0.rows()) + " features per sensor, got " +
                     std::to_string(x.cols()));
  }
  if (p.w1.rows() != p.w0.cols()) throw ShapeError("w0/w1 hidden widths disagree");
}

}  // namespace detail

/// Per-sensor class logits, Â relu(Â X W0) W1, shape N x C.
template <typename Scalar, typename DX, typename DA>
Mat<Scalar> gamnet_node_logits(const GamNetParams<Scalar>& p, const Eigen::MatrixBase<DX>& x,
                               const Eigen::MatrixBase<DA>& a_hat) {
  detail::check_gamnet_shapes(p, x, a_hat);
  const Mat<Scalar> hidden = relu(a_hat * x * p.w0);
  return a_hat * hidden * p.w1;
}

/// Window-level logits: the node logits averaged over sensors.
template <typename Scalar, typename DX, typename DA>
Vec<Scalar> gamnet_logits(const GamNetParams<Scalar>& p, const Eigen::MatrixBase<DX>& x,
                          const Eigen::MatrixBase<DA>& a_hat) {
  return gamnet_node_logits(p, x, a_hat).colwise().mean().transpose();
}

template <typename Scalar, typename DX, typename DA>
Vec<Scalar> gamnet_forward(const GamNetParams<Scalar>& p, const Eigen::MatrixBase<DX>& x,
                           const Eigen::MatrixBase<DA>& a_hat) {
  return softmax(gamnet_logits(p, x, a_hat));
}

template <typename Scalar, typename DX>
Vec<Scalar> mlp_logits(const MlpParams<Scalar>& p, const Eigen::MatrixBase<DX>& x) {
  if (x.size() != p.w0.rows()) {
    throw ShapeError("mlp expects " + std::to_string(p.w0.rows()) + " inputs, got " + std::to_string(x.size()));
  }
  if (p.b0.size() != p.w0.cols() || p.w1.rows() != p.w0.cols() || p.b1.size() != p.w1.cols()) {
    throw ShapeError("inconsistent mlp parameter shapes");
  }
  const Mat<Scalar> dense = x;
  const Vec<Scalar> flat = dense.template reshaped<Eigen::RowMajor>();
  const Vec<Scalar> hidden = relu(p.w0.transpose() * flat + p.b0);
  return p.w1.transpose() * hidden + p.b1;
}

template <typename Scalar, typename DX>
Vec<Scalar> mlp_forward(const MlpParams<Scalar>& p, const Eigen::MatrixBase<DX>& x) {
  return softmax(mlp_logits(p, x));
}

/// Uniform on [-b, b] with b = sqrt(6 / (fan_in + fan_out)).
template <typename Scalar>
Mat<Scalar> glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Mat<Scalar> w(fan_in, fan_out);
  for (Eigen::Index j = 0; j < fan_out; ++j) {
    for (Eigen::Index i = 0; i < fan_in; ++i) w(i, j) = static_cast<Scalar>(bound * (2.0 * uniform01(rng) - 1.0));
  }
  return w;
}

template <typename Scalar = double>
GamNetParams<Scalar> init_gamnet(Eigen::Index feature_len, Eigen::Index hidden, Eigen::Index classes,
                                 std::uint64_t seed) {
  if (feature_len < 1 || hidden < 1 || classes < 2) throw ShapeError("invalid GAM-Net shape");
  Rng rng(seed);
  GamNetParams<Scalar> p;
  p.w0 = glorot_uniform<Scalar>(feature_len, hidden, rng);
  p.w1 = glorot_uniform<Scalar>(hidden, classes, rng);
  return p;
}

template <typename Scalar = double>
MlpParams<Scalar> init_mlp(Eigen::Index input_len, Eigen::Index hidden, Eigen::Index classes, std::uint64_t seed) {
  if (input_len < 1 || hidden < 1 || classes < 2) throw ShapeError("invalid MLP shape");
  Rng rng(seed);
  MlpParams<Scalar> p;
  p.w0 = glorot_uniform<Scalar>(input_len, hidden, rng);
  p.b0 = Vec<Scalar>::Zero(hidden);
  p.w1 = glorot_uniform<Scalar>(hidden, classes, rng);
  p.b1 = Vec<Scalar>::Zero(classes);
  return p;
}

}  // namespace fmgspo
