#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "tracehide/common.hpp"
#include "tracehide/corpus.hpp"
#include "tracehide/rng.hpp"

namespace tracehide {

inline constexpr double sgd_momentum = 0.9;
inline constexpr double prob_floor = 1e-12;  // clamp before logs

struct ModelConfig {
    int vocab_size = 0;
    int num_classes = 0;
    int embed_dim = 32;
    int hidden_dim = 64;
    std::uint64_t seed = 0;

    // reserved id one past the vocabulary; excluded from loss and pooling
    int pad_token() const { return vocab_size; }
};

inline void validate(const ModelConfig& cfg) {
    if (cfg.vocab_size < 1 || cfg.num_classes < 1 || cfg.embed_dim < 1 ||
        cfg.hidden_dim < 1)
        throw config_error("ModelConfig: all dimensions must be >= 1");
}

// Parameter blocks in declaration order; this order is the contract for
// initialization, updates, serialization and finite differencing.
struct ParamBlocks {
    std::vector<double> embed;     // (V+1) x embed_dim
    std::vector<double> w_update;  // hidden x (embed+hidden)
    std::vector<double> b_update;  // hidden
    std::vector<double> w_reset;   // hidden x (embed+hidden)
    std::vector<double> b_reset;   // hidden
    std::vector<double> w_cand;    // hidden x (embed+hidden)
    std::vector<double> b_cand;    // hidden
    std::vector<double> w_out;     // classes x hidden
    std::vector<double> b_out;     // classes

    template <typename Fn>
    void for_each_block(Fn&& fn) {
        fn("embed", embed);
        fn("w_update", w_update);
        fn("b_update", b_update);
        fn("w_reset", w_reset);
        fn("b_reset", b_reset);
        fn("w_cand", w_cand);
        fn("b_cand", b_cand);
        fn("w_out", w_out);
        fn("b_out", b_out);
    }

    template <typename Fn>
    void for_each_block(Fn&& fn) const {
        const_cast<ParamBlocks*>(this)->for_each_block(
            [&](const char* name, std::vector<double>& v) {
                fn(name, static_cast<const std::vector<double>&>(v));
            });
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for_each_block([&](const char*, const std::vector<double>& v) { n += v.size(); });
        return n;
    }
};

// Embedding -> single gated recurrent layer -> affine -> softmax.
// Serves as teacher (frozen), student, retrain oracle and the randomly
// initialized incompetent teacher.
struct SequenceClassifier {
    ModelConfig cfg;
    ParamBlocks params;
};

using Gradients = ParamBlocks;

inline Gradients zero_like(const SequenceClassifier& model) {
    Gradients g;
    g.embed.assign(model.params.embed.size(), 0.0);
    g.w_update.assign(model.params.w_update.size(), 0.0);
    g.b_update.assign(model.params.b_update.size(), 0.0);
    g.w_reset.assign(model.params.w_reset.size(), 0.0);
    g.b_reset.assign(model.params.b_reset.size(), 0.0);
    g.w_cand.assign(model.params.w_cand.size(), 0.0);
    g.b_cand.assign(model.params.b_cand.size(), 0.0);
    g.w_out.assign(model.params.w_out.size(), 0.0);
    g.b_out.assign(model.params.b_out.size(), 0.0);
    return g;
}

// uniform(-k, k) with k = 1/sqrt(fan_in), drawn in declaration order
inline SequenceClassifier init_model(const ModelConfig& cfg) {
    validate(cfg);
    SequenceClassifier model;
    model.cfg = cfg;
    const int de = cfg.embed_dim;
    const int dh = cfg.hidden_dim;
    const int concat = de + dh;

    auto& p = model.params;
    p.embed.resize(static_cast<std::size_t>(cfg.vocab_size + 1) * de);
    p.w_update.resize(static_cast<std::size_t>(dh) * concat);
    p.b_update.resize(static_cast<std::size_t>(dh));
    p.w_reset.resize(static_cast<std::size_t>(dh) * concat);
    p.b_reset.resize(static_cast<std::size_t>(dh));
    p.w_cand.resize(static_cast<std::size_t>(dh) * concat);
    p.b_cand.resize(static_cast<std::size_t>(dh));
    p.w_out.resize(static_cast<std::size_t>(cfg.num_classes) * dh);
    p.b_out.resize(static_cast<std::size_t>(cfg.num_classes));

    Rng rng(cfg.seed);
    auto fill = [&](std::vector<double>& block, int fan_in) {
        const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& w : block) w = rng.uniform(-k, k);
    };
    fill(p.embed, de);
    fill(p.w_update, concat);
    fill(p.b_update, concat);
    fill(p.w_reset, concat);
    fill(p.b_reset, concat);
    fill(p.w_cand, concat);
    fill(p.b_cand, concat);
    fill(p.w_out, dh);
    fill(p.b_out, dh);
    return model;
}

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out = W u + b, W row-major rows x cols
inline void affine(const double* w, const double* b, const double* u, double* out,
                   int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        double acc = b[i];
        const double* row = w + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) acc += row[j] * u[j];
        out[i] = acc;
    }
}

// accumulate du += W^T v
inline void add_transposed(const double* w, const double* v, double* du, int rows,
                           int cols) {
    for (int i = 0; i < rows; ++i) {
        const double vi = v[i];
        const double* row = w + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) du[j] += row[j] * vi;
    }
}

// dW += v (outer) u, db += v
inline void add_outer(double* dw, double* db, const double* v, const double* u,
                      int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        const double vi = v[i];
        double* row = dw + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) row[j] += vi * u[j];
        db[i] += vi;
    }
}

// Per-step activations kept for backpropagation through the recurrence.
struct ForwardTrace {
    std::vector<int> tokens;
    std::vector<double> z, r, cand, h;  // each steps x hidden, row per step
    std::vector<double> logits;
    std::vector<double> probs;
};

inline void forward_trace(const SequenceClassifier& model, const std::vector<int>& tokens,
                          ForwardTrace& trace) {
    const auto& cfg = model.cfg;
    const auto& p = model.params;
    if (tokens.empty()) throw input_error("forward: empty token sequence");
    for (int tok : tokens) {
        if (tok < 0 || tok >= cfg.vocab_size)
            throw input_error("forward: token id out of range");
    }
    const int de = cfg.embed_dim;
    const int dh = cfg.hidden_dim;
    const int concat = de + dh;
    const std::size_t steps = tokens.size();

    trace.tokens = tokens;
    trace.z.assign(steps * dh, 0.0);
    trace.r.assign(steps * dh, 0.0);
    trace.cand.assign(steps * dh, 0.0);
    trace.h.assign(steps * dh, 0.0);

    std::vector<double> u(static_cast<std::size_t>(concat));
    std::vector<double> a(static_cast<std::size_t>(dh));
    std::vector<double> h_prev(static_cast<std::size_t>(dh), 0.0);

    for (std::size_t t = 0; t < steps; ++t) {
        const double* x = p.embed.data() + static_cast<std::size_t>(tokens[t]) * de;
        double* z = trace.z.data() + t * dh;
        double* r = trace.r.data() + t * dh;
        double* cand = trace.cand.data() + t * dh;
        double* h = trace.h.data() + t * dh;

        std::memcpy(u.data(), x, sizeof(double) * de);
        std::memcpy(u.data() + de, h_prev.data(), sizeof(double) * dh);

        affine(p.w_update.data(), p.b_update.data(), u.data(), a.data(), dh, concat);
        for (int i = 0; i < dh; ++i) z[i] = sigmoid(a[i]);
        affine(p.w_reset.data(), p.b_reset.data(), u.data(), a.data(), dh, concat);
        for (int i = 0; i < dh; ++i) r[i] = sigmoid(a[i]);

        for (int i = 0; i < dh; ++i) u[de + i] = r[i] * h_prev[i];
        affine(p.w_cand.data(), p.b_cand.data(), u.data(), a.data(), dh, concat);
        for (int i = 0; i < dh; ++i) cand[i] = std::tanh(a[i]);

        for (int i = 0; i < dh; ++i) h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * cand[i];
        std::memcpy(h_prev.data(), h, sizeof(double) * dh);
    }

    trace.logits.assign(static_cast<std::size_t>(cfg.num_classes), 0.0);
    affine(p.w_out.data(), p.b_out.data(), h_prev.data(), trace.logits.data(),
           cfg.num_classes, dh);

    // softmax, stabilized by max subtraction
    double mx = trace.logits[0];
    for (double v : trace.logits) mx = std::max(mx, v);
    trace.probs.assign(trace.logits.size(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < trace.logits.size(); ++i) {
        trace.probs[i] = std::exp(trace.logits[i] - mx);
        sum += trace.probs[i];
    }
    for (double& v : trace.probs) v /= sum;
}

}  // namespace detail

// class-probability vector over C, entries >= 0 summing to 1
inline std::vector<double> forward(const SequenceClassifier& model,
                                   const std::vector<int>& tokens) {
    detail::ForwardTrace trace;
    detail::forward_trace(model, tokens, trace);
    return trace.probs;
}

inline double cross_entropy(int label, const std::vector<double>& probs) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
        throw input_error("cross_entropy: label out of range");
    return -std::log(std::max(probs[static_cast<std::size_t>(label)], prob_floor));
}

// D_KL(p || q) in nats, q clamped away from zero, 0 ln 0 = 0
inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw input_error("kl_divergence: length mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        kl += p[i] * (std::log(p[i]) - std::log(std::max(q[i], prob_floor)));
    }
    return kl;
}

// One sample's contribution to a batch loss: any weighted mix of a
// cross-entropy term against the true label and a KL term against a
// fixed reference distribution. Covers training and every unlearning
// method's per-batch objective.
struct SampleLoss {
    const std::vector<int>* tokens = nullptr;
    int label = 0;
    double ce_weight = 0.0;
    double kl_weight = 0.0;
    const std::vector<double>* kl_ref = nullptr;
};

// forward-only batch loss: mean over samples of the weighted terms
inline double batch_loss(const SequenceClassifier& model,
                         const std::vector<SampleLoss>& batch) {
    if (batch.empty()) throw input_error("batch_loss: empty batch");
    double total = 0.0;
    detail::ForwardTrace trace;
    for (const SampleLoss& s : batch) {
        detail::forward_trace(model, *s.tokens, trace);
        double loss = 0.0;
        if (s.ce_weight != 0.0) loss += s.ce_weight * cross_entropy(s.label, trace.probs);
        if (s.kl_weight != 0.0) {
            if (s.kl_ref == nullptr) throw config_error("batch_loss: KL term without reference");
            loss += s.kl_weight * kl_divergence(trace.probs, *s.kl_ref);
        }
        total += loss;
    }
    return total / static_cast<double>(batch.size());
}

// Exact reverse-mode gradients of the batch loss with respect to every
// parameter block. Accumulation order is fixed (sequential over the
// batch) to keep results bit-deterministic.
inline double backward(const SequenceClassifier& model, const std::vector<SampleLoss>& batch,
                       Gradients& grads) {
    if (batch.empty()) throw input_error("backward: empty batch");
    const auto& cfg = model.cfg;
    const auto& p = model.params;
    const int de = cfg.embed_dim;
    const int dh = cfg.hidden_dim;
    const int concat = de + dh;
    const double scale = 1.0 / static_cast<double>(batch.size());

    grads = zero_like(model);
    double total = 0.0;

    detail::ForwardTrace trace;
    std::vector<double> dlogits(static_cast<std::size_t>(cfg.num_classes));
    std::vector<double> dh_vec(static_cast<std::size_t>(dh));
    std::vector<double> dh_prev(static_cast<std::size_t>(dh));
    std::vector<double> da(static_cast<std::size_t>(dh));
    std::vector<double> du(static_cast<std::size_t>(concat));
    std::vector<double> u(static_cast<std::size_t>(concat));
    std::vector<double> zeros(static_cast<std::size_t>(dh), 0.0);

    for (const SampleLoss& s : batch) {
        detail::forward_trace(model, *s.tokens, trace);
        const auto& probs = trace.probs;

        double sample_loss = 0.0;
        std::fill(dlogits.begin(), dlogits.end(), 0.0);
        if (s.ce_weight != 0.0) {
            sample_loss += s.ce_weight * cross_entropy(s.label, probs);
            for (int c = 0; c < cfg.num_classes; ++c) {
                double g = probs[static_cast<std::size_t>(c)];
                if (c == s.label) g -= 1.0;
                dlogits[static_cast<std::size_t>(c)] += s.ce_weight * g;
            }
        }
        if (s.kl_weight != 0.0) {
            if (s.kl_ref == nullptr) throw config_error("backward: KL term without reference");
            const auto& q = *s.kl_ref;
            const double kl = kl_divergence(probs, q);
            sample_loss += s.kl_weight * kl;
            for (int c = 0; c < cfg.num_classes; ++c) {
                const std::size_t ci = static_cast<std::size_t>(c);
                const double pc = probs[ci];
                if (pc <= 0.0) continue;
                const double log_ratio =
                    std::log(pc) - std::log(std::max(q[ci], prob_floor));
                dlogits[ci] += s.kl_weight * pc * (log_ratio - kl);
            }
        }
        total += sample_loss;
        for (double& g : dlogits) g *= scale;

        const std::size_t steps = s.tokens->size();
        const double* h_last = trace.h.data() + (steps - 1) * dh;
        detail::add_outer(grads.w_out.data(), grads.b_out.data(), dlogits.data(), h_last,
                          cfg.num_classes, dh);
        std::fill(dh_vec.begin(), dh_vec.end(), 0.0);
        detail::add_transposed(p.w_out.data(), dlogits.data(), dh_vec.data(),
                               cfg.num_classes, dh);

        for (std::size_t t = steps; t-- > 0;) {
            const double* z = trace.z.data() + t * dh;
            const double* r = trace.r.data() + t * dh;
            const double* cand = trace.cand.data() + t * dh;
            const double* h_prev = t > 0 ? trace.h.data() + (t - 1) * dh : zeros.data();
            const int tok = (*s.tokens)[t];
            const double* x = p.embed.data() + static_cast<std::size_t>(tok) * de;
            double* dx = grads.embed.data() + static_cast<std::size_t>(tok) * de;

            std::fill(dh_prev.begin(), dh_prev.end(), 0.0);

            // h = (1 - z) h_prev + z cand
            for (int i = 0; i < dh; ++i) dh_prev[i] += dh_vec[i] * (1.0 - z[i]);

            // candidate branch: a_c = W_c [x; r h_prev] + b_c
            for (int i = 0; i < dh; ++i) {
                const double dcand = dh_vec[i] * z[i];
                da[i] = dcand * (1.0 - cand[i] * cand[i]);
            }
            std::memcpy(u.data(), x, sizeof(double) * de);
            for (int i = 0; i < dh; ++i) u[de + i] = r[i] * h_prev[i];
            detail::add_outer(grads.w_cand.data(), grads.b_cand.data(), da.data(), u.data(),
                              dh, concat);
            std::fill(du.begin(), du.end(), 0.0);
            detail::add_transposed(p.w_cand.data(), da.data(), du.data(), dh, concat);
            for (int j = 0; j < de; ++j) dx[j] += du[j];
            // d(r h_prev) splits into dr and dh_prev
            for (int i = 0; i < dh; ++i) {
                const double drh = du[de + i];
                dh_prev[i] += drh * r[i];
                da[i] = drh * h_prev[i] * r[i] * (1.0 - r[i]);  // da_r
            }

            // reset branch: a_r = W_r [x; h_prev] + b_r
            std::memcpy(u.data() + de, h_prev, sizeof(double) * dh);
            detail::add_outer(grads.w_reset.data(), grads.b_reset.data(), da.data(),
                              u.data(), dh, concat);
            std::fill(du.begin(), du.end(), 0.0);
            detail::add_transposed(p.w_reset.data(), da.data(), du.data(), dh, concat);
            for (int j = 0; j < de; ++j) dx[j] += du[j];
            for (int i = 0; i < dh; ++i) dh_prev[i] += du[de + i];

            // update branch: a_z = W_z [x; h_prev] + b_z
            for (int i = 0; i < dh; ++i) {
                const double dz = dh_vec[i] * (cand[i] - h_prev[i]);
                da[i] = dz * z[i] * (1.0 - z[i]);
            }
            detail::add_outer(grads.w_update.data(), grads.b_update.data(), da.data(),
                              u.data(), dh, concat);
            std::fill(du.begin(), du.end(), 0.0);
            detail::add_transposed(p.w_update.data(), da.data(), du.data(), dh, concat);
            for (int j = 0; j < de; ++j) dx[j] += du[j];
            for (int i = 0; i < dh; ++i) dh_prev[i] += du[de + i];

            std::swap(dh_vec, dh_prev);
        }
    }

    const double loss = total / static_cast<double>(batch.size());
    if (!std::isfinite(loss)) throw numeric_error("backward: non-finite loss");
    return loss;
}

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 1;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double clip_norm = 5.0;  // global-norm gradient clip
};

struct SgdState {
    Gradients velocity;
};

inline SgdState make_sgd_state(const SequenceClassifier& model) {
    return SgdState{zero_like(model)};
}

// momentum update with global-norm clipping applied to the raw gradients
inline void sgd_step(SequenceClassifier& model, Gradients& grads, SgdState& state,
                     const TrainConfig& cfg) {
    if (!(cfg.learning_rate >= 0.0)) throw config_error("sgd_step: learning_rate must be >= 0");
    double norm_sq = 0.0;
    grads.for_each_block([&](const char*, const std::vector<double>& g) {
        for (double v : g) norm_sq += v * v;
    });
    if (!std::isfinite(norm_sq)) throw numeric_error("sgd_step: non-finite gradient");
    const double norm = std::sqrt(norm_sq);
    if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) {
        const double shrink = cfg.clip_norm / norm;
        grads.for_each_block([&](const char*, std::vector<double>& g) {
            for (double& v : g) v *= shrink;
        });
    }

    auto step_block = [&](std::vector<double>& theta, std::vector<double>& vel,
                          const std::vector<double>& g) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            vel[i] = sgd_momentum * vel[i] + g[i];
            theta[i] -= cfg.learning_rate * vel[i];
        }
    };
    step_block(model.params.embed, state.velocity.embed, grads.embed);
    step_block(model.params.w_update, state.velocity.w_update, grads.w_update);
    step_block(model.params.b_update, state.velocity.b_update, grads.b_update);
    step_block(model.params.w_reset, state.velocity.w_reset, grads.w_reset);
    step_block(model.params.b_reset, state.velocity.b_reset, grads.b_reset);
    step_block(model.params.w_cand, state.velocity.w_cand, grads.w_cand);
    step_block(model.params.b_cand, state.velocity.b_cand, grads.b_cand);
    step_block(model.params.w_out, state.velocity.w_out, grads.w_out);
    step_block(model.params.b_out, state.velocity.b_out, grads.b_out);
}

struct TrainResult {
    double wall_clock_seconds = 0.0;
    std::vector<double> epoch_losses;  // mean CE per epoch
};

// Seeded shuffled mini-batches, plain CE loss, fixed epoch budget;
// single-threaded and bit-deterministic given (seed, data, config).
inline TrainResult train(SequenceClassifier& model, const Corpus& corpus,
                         const std::vector<std::size_t>& indices, const TrainConfig& cfg) {
    if (indices.empty()) throw input_error("train: empty training view");
    if (cfg.epochs < 1) throw config_error("train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw config_error("train: batch_size must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw config_error("train: learning_rate must be > 0");

    const auto start = std::chrono::steady_clock::now();
    Rng rng(derive_seed(cfg.seed, stage::train));
    SgdState state = make_sgd_state(model);
    Gradients grads;
    std::vector<std::size_t> order = indices;
    TrainResult result;
    result.epoch_losses.reserve(static_cast<std::size_t>(cfg.epochs));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), pos + cfg.batch_size);
            std::vector<SampleLoss> batch;
            batch.reserve(end - pos);
            for (std::size_t k = pos; k < end; ++k) {
                const Trajectory& traj = corpus.trajectories[order[k]];
                batch.push_back(SampleLoss{&traj.tokens, traj.user, 1.0, 0.0, nullptr});
            }
            epoch_loss += backward(model, batch, grads);
            sgd_step(model, grads, state, cfg);
            ++batches;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
    }

    result.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

// ---- checkpoint ------------------------------------------------------------
//
// Versioned binary: magic, dimensions, seed, then the flat parameter
// blocks in declaration order as raw 64-bit floats. Round-trips bit-exact.

inline constexpr char checkpoint_magic[9] = "THCKPT01";

inline void save_model(const SequenceClassifier& model, std::ostream& out) {
    out.write(checkpoint_magic, 8);
    auto write_i64 = [&](std::int64_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    write_i64(model.cfg.vocab_size);
    write_i64(model.cfg.num_classes);
    write_i64(model.cfg.embed_dim);
    write_i64(model.cfg.hidden_dim);
    write_i64(static_cast<std::int64_t>(model.cfg.seed));
    model.params.for_each_block([&](const char*, const std::vector<double>& block) {
        write_i64(static_cast<std::int64_t>(block.size()));
        out.write(reinterpret_cast<const char*>(block.data()),
                  static_cast<std::streamsize>(block.size() * sizeof(double)));
    });
    if (!out) throw parse_error("save_model: write failed");
}

inline SequenceClassifier load_model(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, checkpoint_magic, 8) != 0)
        throw parse_error("load_model: bad magic");
    auto read_i64 = [&]() {
        std::int64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) throw parse_error("load_model: truncated header");
        return v;
    };
    ModelConfig cfg;
    cfg.vocab_size = static_cast<int>(read_i64());
    cfg.num_classes = static_cast<int>(read_i64());
    cfg.embed_dim = static_cast<int>(read_i64());
    cfg.hidden_dim = static_cast<int>(read_i64());
    cfg.seed = static_cast<std::uint64_t>(read_i64());
    validate(cfg);

    SequenceClassifier model = init_model(cfg);
    model.params.for_each_block([&](const char* name, std::vector<double>& block) {
        const std::int64_t n = read_i64();
        if (n != static_cast<std::int64_t>(block.size()))
            throw parse_error(std::string("load_model: size mismatch in block ") + name);
        in.read(reinterpret_cast<char*>(block.data()),
                static_cast<std::streamsize>(block.size() * sizeof(double)));
        if (!in) throw parse_error("load_model: truncated parameters");
    });
    return model;
}

inline void save_model_file(const SequenceClassifier& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("cannot open " + path + " for writing");
    save_model(model, out);
}

inline SequenceClassifier load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("cannot open " + path);
    return load_model(in);
}

}  // namespace tracehide
