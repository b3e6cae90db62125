#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ser3d/errors.hpp"
#include "ser3d/rng.hpp"
#include "ser3d/tensor.hpp"

// Layer primitives for the spectro-temporal models: 3D convolution
// (stride 1, zero same-padding), non-overlapping 3D max-pooling, dense,
// ReLU, inverted dropout and fused softmax + cross-entropy. Every
// primitive has a paired analytic gradient.

namespace ser3d {

template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// conv3d: input [L,T,S,Cin], kernels [K,kL,kT,kS,Cin], bias [K] -> [L,T,S,K]
// ---------------------------------------------------------------------------

namespace detail {

// Gather zero-padded kernel windows into a [L*T*S, kL*kT*kS*Cin] matrix so
// the convolution becomes one GEMM. Padding is floor((k-1)/2) at the low
// edge, matching stride-1 same-padding.
template <typename Scalar>
RowMat<Scalar> im2col(const Tensor<Scalar>& input, int kL, int kT, int kS) {
    const int L = input.extent(0), T = input.extent(1), S = input.extent(2), C = input.extent(3);
    const int padL = (kL - 1) / 2, padT = (kT - 1) / 2, padS = (kS - 1) / 2;
    const std::int64_t positions = static_cast<std::int64_t>(L) * T * S;
    const std::int64_t patch = static_cast<std::int64_t>(kL) * kT * kS * C;
    RowMat<Scalar> col = RowMat<Scalar>::Zero(positions, patch);
    const Scalar* in = input.data();
    for (int l = 0; l < L; ++l)
        for (int t = 0; t < T; ++t)
            for (int s = 0; s < S; ++s) {
                Scalar* row = col.data() + (static_cast<std::int64_t>(l) * T * S + static_cast<std::int64_t>(t) * S + s) * patch;
                for (int dl = 0; dl < kL; ++dl) {
                    const int il = l + dl - padL;
                    if (il < 0 || il >= L) continue;
                    for (int dt = 0; dt < kT; ++dt) {
                        const int it = t + dt - padT;
                        if (it < 0 || it >= T) continue;
                        const int s0 = std::max(0, padS - s);
                        const int s1 = std::min(kS, S + padS - s);
                        if (s0 >= s1) continue;
                        const Scalar* src = in + ((static_cast<std::int64_t>(il) * T + it) * S + (s + s0 - padS)) * C;
                        Scalar* dst = row + ((static_cast<std::int64_t>(dl) * kT + dt) * kS + s0) * C;
                        std::copy(src, src + static_cast<std::int64_t>(s1 - s0) * C, dst);
                    }
                }
            }
    return col;
}

// Scatter-add of im2col's transpose: accumulate patch gradients back onto
// the input grid.
template <typename Scalar>
Tensor<Scalar> col2im(const RowMat<Scalar>& dcol, const Shape& input_shape, int kL, int kT, int kS) {
    const int L = input_shape[0], T = input_shape[1], S = input_shape[2], C = input_shape[3];
    const int padL = (kL - 1) / 2, padT = (kT - 1) / 2, padS = (kS - 1) / 2;
    const std::int64_t patch = static_cast<std::int64_t>(kL) * kT * kS * C;
    Tensor<Scalar> d_input(input_shape, Scalar(0));
    Scalar* out = d_input.data();
    for (int l = 0; l < L; ++l)
        for (int t = 0; t < T; ++t)
            for (int s = 0; s < S; ++s) {
                const Scalar* row = dcol.data() + (static_cast<std::int64_t>(l) * T * S + static_cast<std::int64_t>(t) * S + s) * patch;
                for (int dl = 0; dl < kL; ++dl) {
                    const int il = l + dl - padL;
                    if (il < 0 || il >= L) continue;
                    for (int dt = 0; dt < kT; ++dt) {
                        const int it = t + dt - padT;
                        if (it < 0 || it >= T) continue;
                        const int s0 = std::max(0, padS - s);
                        const int s1 = std::min(kS, S + padS - s);
                        for (int ds = s0; ds < s1; ++ds) {
                            const Scalar* src = row + ((static_cast<std::int64_t>(dl) * kT + dt) * kS + ds) * C;
                            Scalar* dst = out + ((static_cast<std::int64_t>(il) * T + it) * S + (s + ds - padS)) * C;
                            for (int c = 0; c < C; ++c) dst[c] += src[c];
                        }
                    }
                }
            }
    return d_input;
}

}  // namespace detail

template <typename Scalar>
void check_conv3d_shapes(const Tensor<Scalar>& input, const Tensor<Scalar>& kernels, const Tensor<Scalar>& bias) {
    if (input.rank() != 4) throw DimensionError("conv3d: input must be rank 4 [L,T,S,Cin], got " + shape_str(input.shape()));
    if (kernels.rank() != 5) throw DimensionError("conv3d: kernels must be rank 5 [K,kL,kT,kS,Cin], got " + shape_str(kernels.shape()));
    if (bias.rank() != 1 || bias.extent(0) != kernels.extent(0))
        throw DimensionError("conv3d: bias must be [K]=" + std::to_string(kernels.extent(0)) + ", got " + shape_str(bias.shape()));
    if (kernels.extent(4) != input.extent(3))
        throw DimensionError("conv3d: kernel channels " + std::to_string(kernels.extent(4)) +
                             " vs input channels " + std::to_string(input.extent(3)));
    if (kernels.extent(1) > input.extent(0) || kernels.extent(2) > input.extent(1) || kernels.extent(3) > input.extent(2))
        throw DimensionError("conv3d: kernel " + shape_str(kernels.shape()) + " exceeds input " + shape_str(input.shape()));
}

template <typename Scalar>
Tensor<Scalar> conv3d(const Tensor<Scalar>& input, const Tensor<Scalar>& kernels, const Tensor<Scalar>& bias) {
    check_conv3d_shapes(input, kernels, bias);
    input.require_finite("conv3d input");
    const int K = kernels.extent(0), kL = kernels.extent(1), kT = kernels.extent(2), kS = kernels.extent(3);
    const int C = input.extent(3);
    const std::int64_t patch = static_cast<std::int64_t>(kL) * kT * kS * C;
    RowMat<Scalar> col = detail::im2col(input, kL, kT, kS);
    Eigen::Map<const RowMat<Scalar>> w(kernels.data(), K, patch);
    Tensor<Scalar> out({input.extent(0), input.extent(1), input.extent(2), K});
    Eigen::Map<RowMat<Scalar>> om(out.data(), col.rows(), K);
    om.noalias() = col * w.transpose();
    om.rowwise() += Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(bias.data(), K);
    return out;
}

template <typename Scalar>
struct Conv3dGrad {
    Tensor<Scalar> d_input;
    Tensor<Scalar> d_kernels;
    Tensor<Scalar> d_bias;
};

template <typename Scalar>
Conv3dGrad<Scalar> conv3d_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& kernels,
                                   const Tensor<Scalar>& d_out) {
    const int K = kernels.extent(0), kL = kernels.extent(1), kT = kernels.extent(2), kS = kernels.extent(3);
    const int C = input.extent(3);
    const std::int64_t patch = static_cast<std::int64_t>(kL) * kT * kS * C;
    const std::int64_t positions = static_cast<std::int64_t>(input.extent(0)) * input.extent(1) * input.extent(2);
    if (d_out.numel() != positions * K)
        throw DimensionError("conv3d_backward: upstream gradient shape " + shape_str(d_out.shape()));

    RowMat<Scalar> col = detail::im2col(input, kL, kT, kS);
    Eigen::Map<const RowMat<Scalar>> dom(d_out.data(), positions, K);
    Eigen::Map<const RowMat<Scalar>> w(kernels.data(), K, patch);

    Conv3dGrad<Scalar> g;
    g.d_kernels = Tensor<Scalar>(kernels.shape());
    Eigen::Map<RowMat<Scalar>>(g.d_kernels.data(), K, patch).noalias() = dom.transpose() * col;
    g.d_bias = Tensor<Scalar>({K});
    Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(g.d_bias.data(), K) = dom.colwise().sum().transpose();
    RowMat<Scalar> dcol(positions, patch);
    dcol.noalias() = dom * w;
    g.d_input = detail::col2im(dcol, input.shape(), kL, kT, kS);
    return g;
}

// ---------------------------------------------------------------------------
// maxpool3d: non-overlapping windows, floor semantics, remainder discarded
// ---------------------------------------------------------------------------

struct PoolWindow {
    int l = 1, t = 1, s = 1;
};

template <typename Scalar>
struct Pool3dResult {
    Tensor<Scalar> output;
    std::vector<std::int64_t> argmax;  // flat input offset per output cell
};

template <typename Scalar>
Pool3dResult<Scalar> maxpool3d(const Tensor<Scalar>& input, PoolWindow w) {
    if (input.rank() != 4) throw DimensionError("maxpool3d: input must be rank 4, got " + shape_str(input.shape()));
    if (w.l < 1 || w.t < 1 || w.s < 1) throw DimensionError("maxpool3d: window extents must be >= 1");
    const int L = input.extent(0), T = input.extent(1), S = input.extent(2), C = input.extent(3);
    if (w.l > L || w.t > T || w.s > S)
        throw DimensionError("maxpool3d: window (" + std::to_string(w.l) + "," + std::to_string(w.t) + "," +
                             std::to_string(w.s) + ") exceeds input " + shape_str(input.shape()));
    const int oL = L / w.l, oT = T / w.t, oS = S / w.s;
    Pool3dResult<Scalar> res;
    res.output = Tensor<Scalar>({oL, oT, oS, C});
    res.argmax.resize(static_cast<std::size_t>(res.output.numel()));
    const Scalar* in = input.data();
    std::int64_t oi = 0;
    for (int l = 0; l < oL; ++l)
        for (int t = 0; t < oT; ++t)
            for (int s = 0; s < oS; ++s)
                for (int c = 0; c < C; ++c, ++oi) {
                    Scalar best = -std::numeric_limits<Scalar>::infinity();
                    std::int64_t best_at = -1;
                    for (int dl = 0; dl < w.l; ++dl)
                        for (int dt = 0; dt < w.t; ++dt)
                            for (int ds = 0; ds < w.s; ++ds) {
                                const std::int64_t off =
                                    ((static_cast<std::int64_t>(l * w.l + dl) * T + (t * w.t + dt)) * S + (s * w.s + ds)) * C + c;
                                if (in[off] > best) {  // first occurrence wins ties
                                    best = in[off];
                                    best_at = off;
                                }
                            }
                    res.output[oi] = best;
                    res.argmax[static_cast<std::size_t>(oi)] = best_at;
                }
    return res;
}

template <typename Scalar>
Tensor<Scalar> maxpool3d_backward(const Pool3dResult<Scalar>& fwd, const Shape& input_shape,
                                  const Tensor<Scalar>& d_out) {
    if (d_out.numel() != fwd.output.numel())
        throw DimensionError("maxpool3d_backward: upstream gradient shape " + shape_str(d_out.shape()));
    Tensor<Scalar> d_input(input_shape, Scalar(0));
    for (std::int64_t i = 0; i < d_out.numel(); ++i)
        d_input[fwd.argmax[static_cast<std::size_t>(i)]] += d_out[i];
    return d_input;
}

// ---------------------------------------------------------------------------
// dense: W [M,N] row-major, x [N], b [M] -> W x + b
// ---------------------------------------------------------------------------

template <typename Scalar>
Tensor<Scalar> dense(const Tensor<Scalar>& input, const Tensor<Scalar>& weights, const Tensor<Scalar>& bias) {
    if (weights.rank() != 2 || weights.extent(1) != static_cast<int>(input.numel()))
        throw DimensionError("dense: weights " + shape_str(weights.shape()) + " vs input length " + std::to_string(input.numel()));
    const int M = weights.extent(0), N = weights.extent(1);
    if (bias.numel() != M) throw DimensionError("dense: bias length " + std::to_string(bias.numel()) + " vs " + std::to_string(M));
    Tensor<Scalar> out({M});
    Eigen::Map<const RowMat<Scalar>> wm(weights.data(), M, N);
    out.vec().noalias() = wm * input.vec();
    out.vec() += bias.vec();
    return out;
}

template <typename Scalar>
struct DenseGrad {
    Tensor<Scalar> d_input;
    Tensor<Scalar> d_weights;
    Tensor<Scalar> d_bias;
};

template <typename Scalar>
DenseGrad<Scalar> dense_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& weights,
                                 const Tensor<Scalar>& d_out) {
    const int M = weights.extent(0), N = weights.extent(1);
    if (d_out.numel() != M) throw DimensionError("dense_backward: upstream gradient length " + std::to_string(d_out.numel()));
    DenseGrad<Scalar> g;
    g.d_input = Tensor<Scalar>(input.shape());
    Eigen::Map<const RowMat<Scalar>> wm(weights.data(), M, N);
    g.d_input.vec().noalias() = wm.transpose() * d_out.vec();
    g.d_weights = Tensor<Scalar>(weights.shape());
    Eigen::Map<RowMat<Scalar>>(g.d_weights.data(), M, N).noalias() = d_out.vec() * input.vec().transpose();
    g.d_bias = d_out.reshaped({M});
    return g;
}

// ---------------------------------------------------------------------------
// relu
// ---------------------------------------------------------------------------

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& input) {
    Tensor<Scalar> out(input.shape());
    for (std::int64_t i = 0; i < input.numel(); ++i) out[i] = input[i] > Scalar(0) ? input[i] : Scalar(0);
    return out;
}

// Subgradient 0 at exactly x == 0.
template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& d_out) {
    require_same_shape(input, d_out, "relu_backward");
    Tensor<Scalar> d_input(input.shape());
    for (std::int64_t i = 0; i < input.numel(); ++i) d_input[i] = input[i] > Scalar(0) ? d_out[i] : Scalar(0);
    return d_input;
}

// ---------------------------------------------------------------------------
// softmax + cross-entropy, fused for the stable combined gradient
// ---------------------------------------------------------------------------

template <typename Scalar>
struct SoftmaxXent {
    Tensor<Scalar> probs;
    Scalar loss;
};

template <typename Scalar>
SoftmaxXent<Scalar> softmax_xent(const Tensor<Scalar>& logits, int target) {
    const std::int64_t K = logits.numel();
    if (K < 2) throw DimensionError("softmax_xent: need at least 2 classes");
    if (target < 0 || target >= K) throw DimensionError("softmax_xent: target " + std::to_string(target) + " out of range");
    logits.require_finite("softmax_xent logits");
    SoftmaxXent<Scalar> res;
    res.probs = Tensor<Scalar>(logits.shape());
    const Scalar mx = logits.vec().maxCoeff();
    Scalar denom = 0;
    for (std::int64_t i = 0; i < K; ++i) {
        res.probs[i] = std::exp(logits[i] - mx);
        denom += res.probs[i];
    }
    for (std::int64_t i = 0; i < K; ++i) res.probs[i] /= denom;
    res.loss = -std::log(std::max(res.probs[target], std::numeric_limits<Scalar>::min()));
    return res;
}

// d loss / d logits = probs - onehot(target), scaled by upstream d_loss.
template <typename Scalar>
Tensor<Scalar> softmax_xent_backward(const SoftmaxXent<Scalar>& fwd, int target, Scalar d_loss = Scalar(1)) {
    Tensor<Scalar> d_logits = fwd.probs;
    d_logits[target] -= Scalar(1);
    for (std::int64_t i = 0; i < d_logits.numel(); ++i) d_logits[i] *= d_loss;
    return d_logits;
}

// ---------------------------------------------------------------------------
// inverted dropout
// ---------------------------------------------------------------------------

template <typename Scalar>
struct DropoutResult {
    Tensor<Scalar> output;
    Tensor<Scalar> mask;  // 0 or 1/(1-p); reused by the gradient
};

template <typename Scalar>
DropoutResult<Scalar> dropout(const Tensor<Scalar>& input, double p, Rng& rng, bool training) {
    if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must be in [0,1), got " + std::to_string(p));
    DropoutResult<Scalar> res;
    res.mask = Tensor<Scalar>(input.shape(), Scalar(1));
    if (training && p > 0.0) {
        const Scalar keep_scale = Scalar(1.0 / (1.0 - p));
        for (std::int64_t i = 0; i < input.numel(); ++i)
            res.mask[i] = rng.uniform() < p ? Scalar(0) : keep_scale;
    }
    res.output = Tensor<Scalar>(input.shape());
    for (std::int64_t i = 0; i < input.numel(); ++i) res.output[i] = input[i] * res.mask[i];
    return res;
}

template <typename Scalar>
Tensor<Scalar> dropout_backward(const DropoutResult<Scalar>& fwd, const Tensor<Scalar>& d_out) {
    require_same_shape(fwd.mask, d_out, "dropout_backward");
    Tensor<Scalar> d_input(d_out.shape());
    for (std::int64_t i = 0; i < d_out.numel(); ++i) d_input[i] = d_out[i] * fwd.mask[i];
    return d_input;
}

}  // namespace ser3d
