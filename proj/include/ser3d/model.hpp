#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "ser3d/adam.hpp"
#include "ser3d/dsp.hpp"
#include "ser3d/errors.hpp"
#include "ser3d/layers.hpp"
#include "ser3d/rng.hpp"
#include "ser3d/tensor.hpp"

// The two proposed architectures. Both share a homogeneous 3D conv stack
// (four kernels per layer, one kernel resolution throughout, ReLU, no
// pooling after the first layer, (2,2,2) pooling otherwise). The DNN head
// flattens everything into two 512-unit FC layers and a 4-way softmax.
// The ELM front half keeps the long-term axis unpooled ((1,2,2) pooling)
// and runs shared FC layers per long-term step, yielding per-step softmax
// outputs for the downstream functional/ELM stage.

namespace ser3d {

enum class Head : int { DNN = 0, ELM = 1 };

struct ArchConfig {
    int n_conv_layers = 3;
    int kernel_l = 2, kernel_t = 2, kernel_s = 128;
    int kernels_per_layer = 4;
    int fc_width = 512;
    int fc_layers = 2;
    Head head = Head::DNN;
    double dropout_p = 0.5;
    int n_classes = 4;
    // Paper volumes are 10 x 10 x 256; gradient checks shrink these.
    int input_l = kLongSteps, input_t = kShortSteps, input_s = kSpectralBins;

    void validate() const {
        if (n_conv_layers < 1) throw ConfigError("ArchConfig: need at least one conv layer");
        if (input_l < 1 || input_t < 1 || input_s < 1) throw ConfigError("ArchConfig: input extents must be positive");
        if (kernel_l < 1 || kernel_t < 1 || kernel_s < 1) throw ConfigError("ArchConfig: kernel extents must be positive");
        if (kernels_per_layer < 1 || fc_width < 1 || fc_layers < 1) throw ConfigError("ArchConfig: widths must be positive");
        if (n_classes < 2) throw ConfigError("ArchConfig: need at least 2 classes");
        if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("ArchConfig: dropout_p must be in [0,1)");
    }

    PoolWindow pool_window() const {
        return head == Head::DNN ? PoolWindow{2, 2, 2} : PoolWindow{1, 2, 2};
    }

    bool operator==(const ArchConfig&) const = default;
};

// Spatial extents and channel count after each conv(+pool) stage.
struct StageShape {
    int l, t, s, c;
};

inline std::vector<StageShape> conv_stage_shapes(const ArchConfig& cfg) {
    cfg.validate();
    std::vector<StageShape> shapes;
    StageShape cur{cfg.input_l, cfg.input_t, cfg.input_s, 1};
    const PoolWindow pw = cfg.pool_window();
    for (int i = 0; i < cfg.n_conv_layers; ++i) {
        cur.c = cfg.kernels_per_layer;  // conv preserves spatial extents (same-padding)
        if (i >= 1) {
            cur.l /= pw.l;
            cur.t /= pw.t;
            cur.s /= pw.s;
            if (cur.l < 1 || cur.t < 1 || cur.s < 1)
                throw ConfigError("ArchConfig: pooling collapses extents to zero at conv layer " + std::to_string(i + 1));
        }
        shapes.push_back(cur);
    }
    return shapes;
}

// Flattened FC input length: the whole volume for the DNN head, one
// long-term step for the ELM head.
inline int fc_input_length(const ArchConfig& cfg) {
    const StageShape last = conv_stage_shapes(cfg).back();
    return cfg.head == Head::DNN ? last.l * last.t * last.s * last.c : last.t * last.s * last.c;
}

inline std::int64_t count_params(const ArchConfig& cfg) {
    cfg.validate();
    std::int64_t total = 0;
    int cin = 1;
    for (int i = 0; i < cfg.n_conv_layers; ++i) {
        total += static_cast<std::int64_t>(cfg.kernels_per_layer) *
                 (static_cast<std::int64_t>(cfg.kernel_l) * cfg.kernel_t * cfg.kernel_s * cin + 1);
        cin = cfg.kernels_per_layer;
    }
    int in = fc_input_length(cfg);
    for (int j = 0; j < cfg.fc_layers; ++j) {
        total += static_cast<std::int64_t>(cfg.fc_width) * (in + 1);
        in = cfg.fc_width;
    }
    total += static_cast<std::int64_t>(cfg.n_classes) * (cfg.fc_width + 1);
    return total;
}

template <typename Scalar>
struct ModelParams {
    ArchConfig config;
    std::vector<Tensor<Scalar>> conv_kernels;  // [K,kL,kT,kS,Cin] per layer
    std::vector<Tensor<Scalar>> conv_bias;     // [K] per layer
    std::vector<Tensor<Scalar>> fc_weights;    // [out,in] per layer
    std::vector<Tensor<Scalar>> fc_bias;
    Tensor<Scalar> out_weights;                // [n_classes, fc_width]
    Tensor<Scalar> out_bias;                   // [n_classes]
    std::uint64_t seed = 0;
    int epochs_run = 0;
    double best_val_ua = 0.0;

    std::vector<Tensor<Scalar>> flatten() const {
        std::vector<Tensor<Scalar>> out;
        for (std::size_t i = 0; i < conv_kernels.size(); ++i) {
            out.push_back(conv_kernels[i]);
            out.push_back(conv_bias[i]);
        }
        for (std::size_t i = 0; i < fc_weights.size(); ++i) {
            out.push_back(fc_weights[i]);
            out.push_back(fc_bias[i]);
        }
        out.push_back(out_weights);
        out.push_back(out_bias);
        return out;
    }

    void unflatten(const std::vector<Tensor<Scalar>>& flat) {
        std::size_t i = 0;
        for (std::size_t l = 0; l < conv_kernels.size(); ++l) {
            conv_kernels[l] = flat[i++];
            conv_bias[l] = flat[i++];
        }
        for (std::size_t l = 0; l < fc_weights.size(); ++l) {
            fc_weights[l] = flat[i++];
            fc_bias[l] = flat[i++];
        }
        out_weights = flat[i++];
        out_bias = flat[i++];
    }

    std::int64_t n_params() const {
        std::int64_t n = 0;
        for (const auto& t : flatten()) n += t.numel();
        return n;
    }
};

namespace detail {

// Glorot-uniform over a seeded generator; biases zero.
template <typename Scalar>
Tensor<Scalar> glorot_uniform(const Shape& shape, std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
    Tensor<Scalar> t(shape);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<Scalar>(rng.uniform(-limit, limit));
    return t;
}

}  // namespace detail

template <typename Scalar>
ModelParams<Scalar> build_model(const ArchConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    conv_stage_shapes(cfg);  // throws on impossible pooling
    ModelParams<Scalar> m;
    m.config = cfg;
    m.seed = seed;
    Rng rng(seed);
    int cin = 1;
    for (int i = 0; i < cfg.n_conv_layers; ++i) {
        const std::int64_t fan_in = static_cast<std::int64_t>(cfg.kernel_l) * cfg.kernel_t * cfg.kernel_s * cin;
        const std::int64_t fan_out = static_cast<std::int64_t>(cfg.kernel_l) * cfg.kernel_t * cfg.kernel_s * cfg.kernels_per_layer;
        m.conv_kernels.push_back(detail::glorot_uniform<Scalar>(
            {cfg.kernels_per_layer, cfg.kernel_l, cfg.kernel_t, cfg.kernel_s, cin}, fan_in, fan_out, rng));
        m.conv_bias.emplace_back(Shape{cfg.kernels_per_layer}, Scalar(0));
        cin = cfg.kernels_per_layer;
    }
    int in = fc_input_length(cfg);
    for (int j = 0; j < cfg.fc_layers; ++j) {
        m.fc_weights.push_back(detail::glorot_uniform<Scalar>({cfg.fc_width, in}, in, cfg.fc_width, rng));
        m.fc_bias.emplace_back(Shape{cfg.fc_width}, Scalar(0));
        in = cfg.fc_width;
    }
    m.out_weights = detail::glorot_uniform<Scalar>({cfg.n_classes, cfg.fc_width}, cfg.fc_width, cfg.n_classes, rng);
    m.out_bias = Tensor<Scalar>({cfg.n_classes}, Scalar(0));
    return m;
}

// ---------------------------------------------------------------------------
// Forward/backward
// ---------------------------------------------------------------------------

template <typename Scalar>
struct FcTrace {
    Tensor<Scalar> input;
    Tensor<Scalar> pre_act;
    DropoutResult<Scalar> drop;
};

template <typename Scalar>
struct StepTrace {
    std::vector<FcTrace<Scalar>> fc;
    Tensor<Scalar> top_features;  // post-ReLU output of the last FC layer
    SoftmaxXent<Scalar> out;
};

// Everything backward needs from one forward pass.
template <typename Scalar>
struct ForwardTrace {
    std::vector<Tensor<Scalar>> conv_inputs;
    std::vector<Tensor<Scalar>> conv_pre_act;
    std::vector<Tensor<Scalar>> conv_post_act;
    std::vector<std::optional<Pool3dResult<Scalar>>> pools;
    Tensor<Scalar> conv_out;           // stack output after last pool
    std::vector<StepTrace<Scalar>> steps;  // one for DNN, kLongSteps for ELM
    Tensor<Scalar> probs;              // [n_classes] or [steps, n_classes]
    Scalar loss = Scalar(0);
};

namespace detail {

template <typename Scalar>
void fc_head_forward(const ModelParams<Scalar>& m, const Tensor<Scalar>& flat_input, int target,
                     Rng* dropout_rng, StepTrace<Scalar>& st) {
    Tensor<Scalar> x = flat_input;
    const bool training = dropout_rng != nullptr;
    for (std::size_t j = 0; j < m.fc_weights.size(); ++j) {
        FcTrace<Scalar> tr;
        tr.input = x;
        tr.pre_act = dense(x, m.fc_weights[j], m.fc_bias[j]);
        Tensor<Scalar> act = relu(tr.pre_act);
        if (training) {
            tr.drop = dropout(act, m.config.dropout_p, *dropout_rng, true);
        } else {
            tr.drop.output = act;
            tr.drop.mask = Tensor<Scalar>(act.shape(), Scalar(1));
        }
        x = tr.drop.output;
        st.fc.push_back(std::move(tr));
    }
    st.top_features = x;
    st.out = softmax_xent(dense(x, m.out_weights, m.out_bias), target);
}

// Returns d(total loss)/d(flat_input); accumulates FC/output parameter
// gradients scaled by loss_scale.
template <typename Scalar>
Tensor<Scalar> fc_head_backward(const ModelParams<Scalar>& m, const StepTrace<Scalar>& st, int target,
                                Scalar loss_scale, std::vector<Tensor<Scalar>>& d_fc_w,
                                std::vector<Tensor<Scalar>>& d_fc_b, Tensor<Scalar>& d_out_w,
                                Tensor<Scalar>& d_out_b) {
    Tensor<Scalar> d_logits = softmax_xent_backward(st.out, target, loss_scale);
    DenseGrad<Scalar> dg = dense_backward(st.top_features, m.out_weights, d_logits);
    d_out_w.vec() += dg.d_weights.vec();
    d_out_b.vec() += dg.d_bias.vec();
    Tensor<Scalar> d_x = dg.d_input;
    for (std::size_t j = m.fc_weights.size(); j-- > 0;) {
        const FcTrace<Scalar>& tr = st.fc[j];
        Tensor<Scalar> d_act = dropout_backward(tr.drop, d_x);
        Tensor<Scalar> d_pre = relu_backward(tr.pre_act, d_act);
        DenseGrad<Scalar> g = dense_backward(tr.input, m.fc_weights[j], d_pre);
        d_fc_w[j].vec() += g.d_weights.vec();
        d_fc_b[j].vec() += g.d_bias.vec();
        d_x = g.d_input;
    }
    return d_x;
}

// Contiguous long-term slice [t,s,c] of a [L,T,S,C] volume.
template <typename Scalar>
Tensor<Scalar> slice_step(const Tensor<Scalar>& volume, int l) {
    const int T = volume.extent(1), S = volume.extent(2), C = volume.extent(3);
    const std::int64_t len = static_cast<std::int64_t>(T) * S * C;
    Tensor<Scalar> out({static_cast<int>(len)});
    std::copy(volume.data() + l * len, volume.data() + (l + 1) * len, out.data());
    return out;
}

}  // namespace detail

// One utterance forward pass. `target` drives the loss; pass a dropout rng
// for training mode, nullptr for inference.
template <typename Scalar>
ForwardTrace<Scalar> model_forward(const ModelParams<Scalar>& m, const Tensor<Scalar>& volume, int target,
                                   Rng* dropout_rng) {
    const ArchConfig& cfg = m.config;
    if (volume.rank() != 3 || volume.extent(0) != cfg.input_l || volume.extent(1) != cfg.input_t ||
        volume.extent(2) != cfg.input_s)
        throw DimensionError("model_forward: expected a [" + std::to_string(cfg.input_l) + "," +
                             std::to_string(cfg.input_t) + "," + std::to_string(cfg.input_s) +
                             "] feature volume, got " + shape_str(volume.shape()));
    const PoolWindow pw = cfg.pool_window();
    ForwardTrace<Scalar> tr;
    Tensor<Scalar> x = volume.reshaped({cfg.input_l, cfg.input_t, cfg.input_s, 1});
    for (int i = 0; i < cfg.n_conv_layers; ++i) {
        tr.conv_inputs.push_back(x);
        Tensor<Scalar> z = conv3d(x, m.conv_kernels[static_cast<std::size_t>(i)], m.conv_bias[static_cast<std::size_t>(i)]);
        tr.conv_pre_act.push_back(z);
        Tensor<Scalar> a = relu(z);
        tr.conv_post_act.push_back(a);
        if (i >= 1) {
            auto pooled = maxpool3d(a, pw);
            x = pooled.output;
            tr.pools.push_back(std::move(pooled));
        } else {
            x = a;
            tr.pools.push_back(std::nullopt);
        }
    }
    tr.conv_out = x;

    if (cfg.head == Head::DNN) {
        StepTrace<Scalar> st;
        detail::fc_head_forward(m, x.reshaped({static_cast<int>(x.numel())}), target, dropout_rng, st);
        tr.probs = st.out.probs;
        tr.loss = st.out.loss;
        tr.steps.push_back(std::move(st));
    } else {
        const int n_steps = x.extent(0);
        tr.probs = Tensor<Scalar>({n_steps, cfg.n_classes});
        Scalar loss_sum = 0;
        for (int l = 0; l < n_steps; ++l) {
            StepTrace<Scalar> st;
            detail::fc_head_forward(m, detail::slice_step(x, l), target, dropout_rng, st);
            for (int k = 0; k < cfg.n_classes; ++k) tr.probs.at({l, k}) = st.out.probs[k];
            loss_sum += st.out.loss;
            tr.steps.push_back(std::move(st));
        }
        // Utterance label broadcast to all steps, losses averaged.
        tr.loss = loss_sum / Scalar(n_steps);
    }
    return tr;
}

// Gradient of tr.loss w.r.t. every parameter, accumulated into `grads`
// (flatten() layout) scaled by loss_scale.
template <typename Scalar>
void model_backward(const ModelParams<Scalar>& m, const ForwardTrace<Scalar>& tr, int target,
                    std::vector<Tensor<Scalar>>& grads, Scalar loss_scale = Scalar(1)) {
    const ArchConfig& cfg = m.config;
    const std::size_t n_conv = m.conv_kernels.size();
    std::vector<Tensor<Scalar>> d_fc_w, d_fc_b;
    for (std::size_t j = 0; j < m.fc_weights.size(); ++j) {
        d_fc_w.emplace_back(m.fc_weights[j].shape(), Scalar(0));
        d_fc_b.emplace_back(m.fc_bias[j].shape(), Scalar(0));
    }
    Tensor<Scalar> d_out_w(m.out_weights.shape(), Scalar(0));
    Tensor<Scalar> d_out_b(m.out_bias.shape(), Scalar(0));

    Tensor<Scalar> d_conv_out(tr.conv_out.shape(), Scalar(0));
    if (cfg.head == Head::DNN) {
        Tensor<Scalar> d_flat =
            detail::fc_head_backward(m, tr.steps[0], target, loss_scale, d_fc_w, d_fc_b, d_out_w, d_out_b);
        d_conv_out = d_flat.reshaped(tr.conv_out.shape());
    } else {
        const int n_steps = tr.conv_out.extent(0);
        const Scalar step_scale = loss_scale / Scalar(n_steps);
        const std::int64_t step_len = tr.conv_out.numel() / n_steps;
        for (int l = 0; l < n_steps; ++l) {
            Tensor<Scalar> d_step = detail::fc_head_backward(m, tr.steps[static_cast<std::size_t>(l)], target,
                                                             step_scale, d_fc_w, d_fc_b, d_out_w, d_out_b);
            for (std::int64_t i = 0; i < step_len; ++i) d_conv_out[l * step_len + i] += d_step[i];
        }
    }

    // Conv stack, reversed.
    Tensor<Scalar> d_x = d_conv_out;
    std::vector<Tensor<Scalar>> d_conv_k(n_conv), d_conv_b(n_conv);
    for (std::size_t i = n_conv; i-- > 0;) {
        if (tr.pools[i].has_value())
            d_x = maxpool3d_backward(*tr.pools[i], tr.conv_post_act[i].shape(), d_x);
        Tensor<Scalar> d_pre = relu_backward(tr.conv_pre_act[i], d_x);
        Conv3dGrad<Scalar> g = conv3d_backward(tr.conv_inputs[i], m.conv_kernels[i], d_pre);
        d_conv_k[i] = std::move(g.d_kernels);
        d_conv_b[i] = std::move(g.d_bias);
        d_x = std::move(g.d_input);
    }

    std::size_t gi = 0;
    for (std::size_t i = 0; i < n_conv; ++i) {
        grads[gi++].vec() += d_conv_k[i].vec();
        grads[gi++].vec() += d_conv_b[i].vec();
    }
    for (std::size_t j = 0; j < m.fc_weights.size(); ++j) {
        grads[gi++].vec() += d_fc_w[j].vec();
        grads[gi++].vec() += d_fc_b[j].vec();
    }
    grads[gi++].vec() += d_out_w.vec();
    grads[gi++].vec() += d_out_b.vec();
}

// Inference: dropout disabled. DNN head returns [n_classes]; ELM front
// half returns per-step probabilities [10, n_classes].
template <typename Scalar>
Tensor<Scalar> predict(const ModelParams<Scalar>& m, const Tensor<Scalar>& volume) {
    return model_forward(m, volume, 0, nullptr).probs;
}

// Single class decision from predict() output; ELM per-step probabilities
// are mean-pooled over steps before the argmax (used for validation UA
// while training the front half; the full pipeline replaces this with the
// functional/ELM stage).
template <typename Scalar>
int predict_class(const ModelParams<Scalar>& m, const Tensor<Scalar>& volume) {
    Tensor<Scalar> probs = predict(m, volume);
    const int K = m.config.n_classes;
    int best = 0;
    if (probs.rank() == 1) {
        for (int k = 1; k < K; ++k)
            if (probs[k] > probs[best]) best = k;
    } else {
        std::vector<Scalar> mean(static_cast<std::size_t>(K), Scalar(0));
        for (int l = 0; l < probs.extent(0); ++l)
            for (int k = 0; k < K; ++k) mean[static_cast<std::size_t>(k)] += probs.at({l, k});
        for (int k = 1; k < K; ++k)
            if (mean[static_cast<std::size_t>(k)] > mean[static_cast<std::size_t>(best)]) best = k;
    }
    return best;
}

// Post-ReLU activations of the last FC layer (before softmax), dropout off.
template <typename Scalar>
Tensor<Scalar> top_fc_features(const ModelParams<Scalar>& m, const Tensor<Scalar>& volume) {
    ForwardTrace<Scalar> tr = model_forward(m, volume, 0, nullptr);
    if (m.config.head == Head::DNN) return tr.steps[0].top_features;
    // ELM front half: mean over steps.
    Tensor<Scalar> mean(tr.steps[0].top_features.shape(), Scalar(0));
    for (const auto& st : tr.steps) mean.vec() += st.top_features.vec();
    mean.vec() /= Scalar(tr.steps.size());
    return mean;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainOptions {
    int batch_size = 128;
    int max_epochs = 20;
    int patience = 5;  // epochs without validation-UA improvement
    double learning_rate = 3e-3;
    std::uint64_t seed = 0;
    bool verbose = false;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_ua = 0.0;
};

template <typename Scalar>
struct LabeledVolumes {
    std::vector<Tensor<Scalar>> volumes;  // [10,10,256] each
    std::vector<int> labels;
};

template <typename Scalar>
double validation_ua(const ModelParams<Scalar>& m, const LabeledVolumes<Scalar>& val) {
    const int K = m.config.n_classes;
    std::vector<std::int64_t> correct(static_cast<std::size_t>(K), 0), total(static_cast<std::size_t>(K), 0);
    for (std::size_t i = 0; i < val.volumes.size(); ++i) {
        const int truth = val.labels[i];
        total[static_cast<std::size_t>(truth)] += 1;
        if (predict_class(m, val.volumes[i]) == truth) correct[static_cast<std::size_t>(truth)] += 1;
    }
    double sum = 0.0;
    int present = 0;
    for (int k = 0; k < K; ++k)
        if (total[static_cast<std::size_t>(k)] > 0) {
            sum += static_cast<double>(correct[static_cast<std::size_t>(k)]) / static_cast<double>(total[static_cast<std::size_t>(k)]);
            ++present;
        }
    return present > 0 ? sum / present : 0.0;
}

// Seeded mini-batch SGD with Adam; best-validation-UA snapshot restored
// on return. Stops at max_epochs or after `patience` epochs without
// validation improvement.
template <typename Scalar>
std::vector<EpochStats> train_model(ModelParams<Scalar>& m, const LabeledVolumes<Scalar>& train_set,
                                    const LabeledVolumes<Scalar>& val_set, const TrainOptions& opt) {
    if (train_set.volumes.empty()) throw DataError("train_model: empty training set");
    if (train_set.volumes.size() != train_set.labels.size())
        throw DataError("train_model: features/labels length mismatch");

    std::vector<Tensor<Scalar>> params = m.flatten();
    AdamState<Scalar> adam = AdamState<Scalar>::init(params, opt.learning_rate);
    Rng rng(opt.seed);
    Rng dropout_rng = rng.fork(0x9e3779b9);

    std::vector<EpochStats> history;
    std::vector<Tensor<Scalar>> best_params = params;
    double best_ua = -1.0;
    int best_epoch = -1;

    std::vector<std::size_t> order(train_set.volumes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < opt.max_epochs; ++epoch) {
        Rng epoch_rng = rng.fork(static_cast<std::uint64_t>(epoch) + 1);
        epoch_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t n_seen = 0;
        const std::size_t n_batches = (order.size() + opt.batch_size - 1) / static_cast<std::size_t>(opt.batch_size);
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t begin = b * static_cast<std::size_t>(opt.batch_size);
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(opt.batch_size));
            std::vector<Tensor<Scalar>> grads;
            grads.reserve(params.size());
            for (const auto& p : params) grads.emplace_back(p.shape(), Scalar(0));
            const Scalar inv_batch = Scalar(1) / Scalar(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                const std::size_t idx = order[i];
                ForwardTrace<Scalar> tr = model_forward(m, train_set.volumes[idx], train_set.labels[idx], &dropout_rng);
                if (!std::isfinite(static_cast<double>(tr.loss)))
                    throw NumericError("train_model: non-finite loss at epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(b) + ", sample " + std::to_string(idx));
                loss_sum += static_cast<double>(tr.loss);
                ++n_seen;
                model_backward(m, tr, train_set.labels[idx], grads, inv_batch);
            }
            adam_step(params, grads, adam);
            m.unflatten(params);
        }
        EpochStats st;
        st.epoch = epoch;
        st.train_loss = loss_sum / static_cast<double>(n_seen);
        st.val_ua = val_set.volumes.empty() ? 0.0 : validation_ua(m, val_set);
        history.push_back(st);
        if (st.val_ua > best_ua) {
            best_ua = st.val_ua;
            best_epoch = epoch;
            best_params = params;
        }
        if (opt.verbose)
            std::fprintf(stderr, "epoch %d train_loss %.4f val_ua %.4f\n", epoch, st.train_loss, st.val_ua);
        if (epoch - best_epoch >= opt.patience) break;
    }

    m.unflatten(best_params);
    m.epochs_run = static_cast<int>(history.size());
    m.best_val_ua = best_ua < 0.0 ? 0.0 : best_ua;
    return history;
}

}  // namespace ser3d
