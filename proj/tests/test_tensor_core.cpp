#include <doctest.h>

#include <cmath>

#include "ser3d/adam.hpp"
#include "ser3d/gradcheck.hpp"
#include "ser3d/layers.hpp"
#include "ser3d/rng.hpp"
#include "ser3d/tensor.hpp"

using namespace ser3d;

namespace {

// Independent direct-summation reference: six nested loops over the
// zero-padded window, written before (and apart from) the GEMM path.
Tensor<double> conv3d_oracle(const Tensor<double>& input, const Tensor<double>& kernels,
                             const Tensor<double>& bias) {
    const int L = input.extent(0), T = input.extent(1), S = input.extent(2), C = input.extent(3);
    const int K = kernels.extent(0), kL = kernels.extent(1), kT = kernels.extent(2), kS = kernels.extent(3);
    const int padL = (kL - 1) / 2, padT = (kT - 1) / 2, padS = (kS - 1) / 2;
    Tensor<double> out({L, T, S, K});
    for (int l = 0; l < L; ++l)
        for (int t = 0; t < T; ++t)
            for (int s = 0; s < S; ++s)
                for (int k = 0; k < K; ++k) {
                    double acc = bias[k];
                    for (int dl = 0; dl < kL; ++dl)
                        for (int dt = 0; dt < kT; ++dt)
                            for (int ds = 0; ds < kS; ++ds)
                                for (int c = 0; c < C; ++c) {
                                    const int il = l + dl - padL, it = t + dt - padT, is = s + ds - padS;
                                    if (il < 0 || il >= L || it < 0 || it >= T || is < 0 || is >= S) continue;
                                    acc += input.at({il, it, is, c}) * kernels.at({k, dl, dt, ds, c});
                                }
                    out.at({l, t, s, k}) = acc;
                }
    return out;
}

Tensor<double> random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
    Tensor<double> t(shape);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-scale, scale);
    return t;
}

}  // namespace

TEST_CASE("conv3d: all-zero input yields constant bias per channel") {
    Tensor<double> input({3, 3, 4, 2}, 0.0);
    Rng rng(7);
    Tensor<double> kernels = random_tensor({2, 2, 2, 3, 2}, rng);
    Tensor<double> bias({2}, {0.5, -1.25});
    Tensor<double> out = conv3d(input, kernels, bias);
    for (int l = 0; l < 3; ++l)
        for (int t = 0; t < 3; ++t)
            for (int s = 0; s < 4; ++s) {
                CHECK(out.at({l, t, s, 0}) == doctest::Approx(0.5));
                CHECK(out.at({l, t, s, 1}) == doctest::Approx(-1.25));
            }
}

TEST_CASE("conv3d: 1x1x1 unit kernel is the identity") {
    Rng rng(11);
    Tensor<double> input = random_tensor({4, 3, 5, 1}, rng);
    Tensor<double> kernels({1, 1, 1, 1, 1}, {1.0});
    Tensor<double> bias({1}, 0.0);
    Tensor<double> out = conv3d(input, kernels, bias);
    for (std::int64_t i = 0; i < input.numel(); ++i) CHECK(out[i] == doctest::Approx(input[i]));
}

TEST_CASE("conv3d: random 4x4x5x1 with 2x(2x2x3) kernels matches the direct oracle") {
    Rng rng(42);
    Tensor<double> input = random_tensor({4, 4, 5, 1}, rng);
    Tensor<double> kernels = random_tensor({2, 2, 2, 3, 1}, rng);
    Tensor<double> bias = random_tensor({2}, rng);
    Tensor<double> fast = conv3d(input, kernels, bias);
    Tensor<double> ref = conv3d_oracle(input, kernels, bias);
    for (std::int64_t i = 0; i < fast.numel(); ++i) CHECK(fast[i] == doctest::Approx(ref[i]).epsilon(1e-10));
}

TEST_CASE("conv3d: equals the oracle on random small shapes over 100 seeds") {
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(static_cast<std::uint64_t>(seed) + 1000);
        const int L = 1 + static_cast<int>(rng.below(6)), T = 1 + static_cast<int>(rng.below(6));
        const int S = 1 + static_cast<int>(rng.below(6)), C = 1 + static_cast<int>(rng.below(3));
        const int K = 1 + static_cast<int>(rng.below(3));
        const int kL = 1 + static_cast<int>(rng.below(static_cast<std::uint32_t>(L)));
        const int kT = 1 + static_cast<int>(rng.below(static_cast<std::uint32_t>(T)));
        const int kS = 1 + static_cast<int>(rng.below(static_cast<std::uint32_t>(S)));
        Tensor<double> input = random_tensor({L, T, S, C}, rng);
        Tensor<double> kernels = random_tensor({K, kL, kT, kS, C}, rng);
        Tensor<double> bias = random_tensor({K}, rng);
        Tensor<double> fast = conv3d(input, kernels, bias);
        Tensor<double> ref = conv3d_oracle(input, kernels, bias);
        double worst = 0.0;
        for (std::int64_t i = 0; i < fast.numel(); ++i) worst = std::max(worst, std::abs(fast[i] - ref[i]));
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("conv3d: shape mismatches are rejected") {
    Tensor<double> input({3, 3, 3, 2});
    Tensor<double> bias({1}, 0.0);
    CHECK_THROWS_AS(conv3d(input, Tensor<double>({1, 2, 2, 2, 3}), bias), DimensionError);  // channel mismatch
    CHECK_THROWS_AS(conv3d(input, Tensor<double>({1, 4, 2, 2, 2}), bias), DimensionError);  // kernel too large
    Tensor<double> nan_input({2, 2, 2, 1});
    nan_input[0] = std::nan("");
    CHECK_THROWS_AS(conv3d(nan_input, Tensor<double>({1, 1, 1, 1, 1}, {1.0}), bias), NumericError);
}

TEST_CASE("conv3d gradient matches finite differences") {
    Rng rng(3);
    Tensor<double> input = random_tensor({3, 3, 4, 2}, rng);
    Tensor<double> kernels = random_tensor({2, 2, 2, 3, 2}, rng);
    Tensor<double> bias = random_tensor({2}, rng);
    Tensor<double> upstream = random_tensor({3, 3, 4, 2}, rng);

    auto loss = [&](const std::vector<Tensor<double>>& in) {
        return conv3d(in[0], in[1], in[2]).vec().dot(upstream.vec());
    };
    Conv3dGrad<double> g = conv3d_backward(input, kernels, upstream);
    const double err = gradient_check(loss, {input, kernels, bias}, {g.d_input, g.d_kernels, g.d_bias});
    CHECK(err < 1e-4);
}

TEST_CASE("maxpool3d: unit window is the identity") {
    Rng rng(5);
    Tensor<double> input = random_tensor({3, 4, 5, 2}, rng);
    auto pooled = maxpool3d(input, {1, 1, 1});
    for (std::int64_t i = 0; i < input.numel(); ++i) CHECK(pooled.output[i] == input[i]);
}

TEST_CASE("maxpool3d: (2,2,2) applied twice to [10,10,256,4] gives [2,2,64,4]") {
    Tensor<float> input({10, 10, 256, 4}, 1.0f);
    auto once = maxpool3d(input, {2, 2, 2});
    CHECK(once.output.shape() == Shape{5, 5, 128, 4});
    auto twice = maxpool3d(once.output, {2, 2, 2});
    CHECK(twice.output.shape() == Shape{2, 2, 64, 4});
}

TEST_CASE("maxpool3d: constant field pools to the same constant") {
    Tensor<double> input({4, 4, 4, 3}, 2.5);
    auto pooled = maxpool3d(input, {2, 2, 2});
    for (std::int64_t i = 0; i < pooled.output.numel(); ++i) CHECK(pooled.output[i] == 2.5);
}

TEST_CASE("maxpool3d: every output cell equals the max of its window") {
    Rng rng(17);
    Tensor<double> input = random_tensor({4, 6, 6, 2}, rng);
    PoolWindow w{2, 3, 2};
    auto pooled = maxpool3d(input, w);
    for (int l = 0; l < pooled.output.extent(0); ++l)
        for (int t = 0; t < pooled.output.extent(1); ++t)
            for (int s = 0; s < pooled.output.extent(2); ++s)
                for (int c = 0; c < 2; ++c) {
                    double mx = -1e300;
                    for (int dl = 0; dl < w.l; ++dl)
                        for (int dt = 0; dt < w.t; ++dt)
                            for (int ds = 0; ds < w.s; ++ds)
                                mx = std::max(mx, input.at({l * w.l + dl, t * w.t + dt, s * w.s + ds, c}));
                    CHECK(pooled.output.at({l, t, s, c}) == mx);
                }
}

TEST_CASE("maxpool3d: window larger than input is rejected") {
    Tensor<double> input({2, 2, 2, 1});
    CHECK_THROWS_AS(maxpool3d(input, {3, 1, 1}), DimensionError);
}

TEST_CASE("maxpool3d gradient matches finite differences away from ties") {
    Rng rng(23);
    Tensor<double> input = random_tensor({4, 4, 4, 2}, rng);  // continuous draws, ties measure-zero
    Tensor<double> upstream = random_tensor({2, 2, 2, 2}, rng);
    auto pooled = maxpool3d(input, {2, 2, 2});
    Tensor<double> d_input = maxpool3d_backward(pooled, input.shape(), upstream);
    auto loss = [&](const std::vector<Tensor<double>>& in) {
        return maxpool3d(in[0], {2, 2, 2}).output.vec().dot(upstream.vec());
    };
    CHECK(gradient_check(loss, {input}, {d_input}) < 1e-4);
}

TEST_CASE("dense: identity weights pass the input through") {
    Tensor<double> w({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor<double> b({3}, 0.0);
    Tensor<double> x({3}, {1.5, -2.0, 0.25});
    Tensor<double> y = dense(x, w, b);
    for (int i = 0; i < 3; ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("dense: zero weights give the bias") {
    Tensor<double> w({2, 3}, 0.0);
    Tensor<double> b({2}, {0.75, -0.5});
    Tensor<double> y = dense(Tensor<double>({3}, {1, 2, 3}), w, b);
    CHECK(y[0] == 0.75);
    CHECK(y[1] == -0.5);
}

TEST_CASE("dense: random 3x4 matches a scalar dot-product oracle") {
    Rng rng(31);
    Tensor<double> w = random_tensor({3, 4}, rng);
    Tensor<double> b = random_tensor({3}, rng);
    Tensor<double> x = random_tensor({4}, rng);
    Tensor<double> y = dense(x, w, b);
    for (int m = 0; m < 3; ++m) {
        double acc = b[m];
        for (int n = 0; n < 4; ++n) acc += w.at({m, n}) * x[n];
        CHECK(y[m] == doctest::Approx(acc).epsilon(1e-12));
    }
    CHECK_THROWS_AS(dense(Tensor<double>({5}), w, b), DimensionError);
}

TEST_CASE("dense gradient matches finite differences") {
    Rng rng(37);
    Tensor<double> w = random_tensor({4, 6}, rng);
    Tensor<double> b = random_tensor({4}, rng);
    Tensor<double> x = random_tensor({6}, rng);
    Tensor<double> upstream = random_tensor({4}, rng);
    DenseGrad<double> g = dense_backward(x, w, upstream);
    auto loss = [&](const std::vector<Tensor<double>>& in) {
        return dense(in[0], in[1], in[2]).vec().dot(upstream.vec());
    };
    CHECK(gradient_check(loss, {x, w, b}, {g.d_input, g.d_weights, g.d_bias}) < 1e-4);
}

TEST_CASE("relu basics and the x=0 gradient convention") {
    Tensor<double> x({3}, {-1.0, 2.5, 0.0});
    Tensor<double> y = relu(x);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 2.5);
    CHECK(y[2] == 0.0);
    Tensor<double> d = relu_backward(x, Tensor<double>({3}, 1.0));
    CHECK(d[0] == 0.0);
    CHECK(d[1] == 1.0);
    CHECK(d[2] == 0.0);  // gradient 0 at exactly x == 0
}

TEST_CASE("softmax_xent: equal logits give uniform probabilities and loss ln K") {
    Tensor<double> logits({4}, 0.7);
    auto res = softmax_xent(logits, 2);
    for (int k = 0; k < 4; ++k) CHECK(res.probs[k] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(res.loss == doctest::Approx(std::log(4.0)).epsilon(1e-9));
}

TEST_CASE("softmax_xent: extreme logits do not overflow") {
    Tensor<double> logits({2}, {1000.0, 0.0});
    auto res = softmax_xent(logits, 0);
    CHECK(res.probs[0] == doctest::Approx(1.0));
    CHECK(res.probs[1] == doctest::Approx(0.0));
    CHECK(std::isfinite(res.loss));
}

TEST_CASE("softmax_xent: probabilities sum to 1 and target range is checked") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor<double> logits = random_tensor({5}, rng, 10.0);
        auto res = softmax_xent(logits, 1);
        double sum = 0.0;
        for (int k = 0; k < 5; ++k) {
            CHECK(res.probs[k] >= 0.0);
            sum += res.probs[k];
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
    CHECK_THROWS_AS(softmax_xent(Tensor<double>({3}), 3), DimensionError);
}

TEST_CASE("softmax_xent gradient matches finite differences") {
    Rng rng(43);
    Tensor<double> logits = random_tensor({4}, rng, 2.0);
    auto fwd = softmax_xent(logits, 1);
    Tensor<double> analytic = softmax_xent_backward(fwd, 1);
    auto loss = [](const std::vector<Tensor<double>>& in) { return softmax_xent(in[0], 1).loss; };
    CHECK(gradient_check(loss, {logits}, {analytic}) < 1e-4);
}

TEST_CASE("dropout: p=0 and inference mode are identities") {
    Rng rng(51);
    Tensor<double> x({100}, 1.0);
    auto a = dropout(x, 0.0, rng, true);
    auto b = dropout(x, 0.5, rng, false);
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        CHECK(a.output[i] == 1.0);
        CHECK(b.output[i] == 1.0);
    }
    CHECK_THROWS_AS(dropout(x, 1.0, rng, true), ConfigError);
    CHECK_THROWS_AS(dropout(x, -0.1, rng, true), ConfigError);
}

TEST_CASE("dropout: zeroed fraction at p=0.5 over 1e5 elements is 0.5 +- 0.01") {
    Rng rng(53);
    Tensor<double> x({100000}, 1.0);
    auto res = dropout(x, 0.5, rng, true);
    std::int64_t zeros = 0;
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        if (res.output[i] == 0.0)
            ++zeros;
        else
            CHECK(res.output[i] == doctest::Approx(2.0));  // survivors scaled by 1/(1-p)
    }
    const double frac = static_cast<double>(zeros) / 1e5;
    CHECK(frac > 0.49);
    CHECK(frac < 0.51);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    std::vector<Tensor<double>> params{Tensor<double>({3}, {1.0, -2.0, 0.5})};
    std::vector<Tensor<double>> grads{Tensor<double>({3}, 0.0)};
    auto st = AdamState<double>::init(params);
    adam_step(params, grads, st);
    CHECK(params[0][0] == 1.0);
    CHECK(params[0][1] == -2.0);
    CHECK(st.step_count == 1);
}

TEST_CASE("adam: first step on a constant gradient moves by ~lr") {
    // With bias correction, step 1 gives lr * g / (|g| + eps) ~ lr * sign(g).
    std::vector<Tensor<double>> params{Tensor<double>({2}, {0.0, 0.0})};
    std::vector<Tensor<double>> grads{Tensor<double>({2}, {0.2, -5.0})};
    auto st = AdamState<double>::init(params, 3e-3);
    adam_step(params, grads, st);
    CHECK(params[0][0] == doctest::Approx(-3e-3).epsilon(1e-4));
    CHECK(params[0][1] == doctest::Approx(3e-3).epsilon(1e-4));
}

TEST_CASE("adam: identical runs with the same seed are bit-identical") {
    auto run = [] {
        Rng rng(99);
        std::vector<Tensor<double>> params{random_tensor({8}, rng)};
        auto st = AdamState<double>::init(params);
        for (int step = 0; step < 25; ++step) {
            std::vector<Tensor<double>> grads{random_tensor({8}, rng)};
            adam_step(params, grads, st);
        }
        return params[0];
    };
    Tensor<double> a = run(), b = run();
    for (std::int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("adam: non-finite gradient is rejected with the parameter named") {
    std::vector<Tensor<double>> params{Tensor<double>({2}, 0.0)};
    std::vector<Tensor<double>> grads{Tensor<double>({2}, 0.0)};
    grads[0][1] = std::numeric_limits<double>::infinity();
    auto st = AdamState<double>::init(params);
    CHECK_THROWS_AS(adam_step(params, grads, st), NumericError);
}
