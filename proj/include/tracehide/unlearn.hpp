#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tracehide/common.hpp"
#include "tracehide/corpus.hpp"
#include "tracehide/importance.hpp"
#include "tracehide/model.hpp"
#include "tracehide/rng.hpp"

namespace tracehide {

enum class Method { tracehiding, retrain, finetune, neggrad, neggrad_plus, scrub, bad_t };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::tracehiding: return "tracehiding";
        case Method::retrain: return "retrain";
        case Method::finetune: return "finetune";
        case Method::neggrad: return "neggrad";
        case Method::neggrad_plus: return "neggrad_plus";
        case Method::scrub: return "scrub";
        case Method::bad_t: return "bad_t";
    }
    throw config_error("unknown unlearning method");
}

inline Method method_from_string(const std::string& name) {
    for (Method m : {Method::tracehiding, Method::retrain, Method::finetune,
                     Method::neggrad, Method::neggrad_plus, Method::scrub, Method::bad_t}) {
        if (name == to_string(m)) return m;
    }
    throw config_error("unknown unlearning method: " + name);
}

struct UnlearnConfig {
    Method method = Method::tracehiding;
    ScoreSpec score;  // tracehiding only
    double c1 = 1.0;  // retain KL coefficient
    double c2 = 1.0;  // retain CE coefficient
    int epochs = 1;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;
    int retain_batch_size = 32;
    int forget_batch_size = 32;
    double clip_norm = 5.0;
};

inline void validate(const UnlearnConfig& cfg) {
    if (cfg.c1 < 0.0 || cfg.c2 < 0.0) throw config_error("UnlearnConfig: c1, c2 must be >= 0");
    if (cfg.epochs < 1) throw config_error("UnlearnConfig: epochs must be >= 1");
    if (!(cfg.learning_rate >= 0.0))
        throw config_error("UnlearnConfig: learning_rate must be >= 0");
    if (cfg.retain_batch_size < 1 || cfg.forget_batch_size < 1)
        throw config_error("UnlearnConfig: batch sizes must be >= 1");
}

// per-sample strength of the forgetting term: e^{xi_norm} - 1
inline double forget_weight(double xi_norm) { return std::expm1(xi_norm); }

// Frozen teacher plus a student that starts as an identical copy of it.
struct TeacherStudent {
    const SequenceClassifier* teacher = nullptr;
    SequenceClassifier student;
};

inline TeacherStudent make_teacher_student(const SequenceClassifier& teacher) {
    return TeacherStudent{&teacher, teacher};
}

struct EpochLoss {
    double retain = 0.0;
    double forget = 0.0;
};

struct UnlearnResult {
    SequenceClassifier student;
    double wall_clock_seconds = 0.0;
    std::vector<EpochLoss> per_epoch_losses;
};

namespace detail {

// One interleaved data stream: which samples, how their CE/KL terms are
// weighted, which frozen model the KL term references, and an optional
// per-sample multiplier on both coefficients.
struct StreamSpec {
    std::vector<std::size_t> indices;
    double ce_coeff = 0.0;
    double kl_coeff = 0.0;
    const SequenceClassifier* kl_model = nullptr;
    const std::unordered_map<std::size_t, double>* multiplier = nullptr;
    int batch_size = 32;
};

// Alternating retain/forget mini-batch loop, retain first; each stream is
// shuffled by its own seeded generator so an empty stream leaves the other
// stream's order untouched. A batch whose every effective weight is zero
// is skipped outright -- it contributes neither gradient nor momentum
// decay, keeping zero-weight runs bit-identical to runs without those
// batches.
inline UnlearnResult interleaved_run(const SequenceClassifier& start, const Corpus& corpus,
                                     const StreamSpec& retain, const StreamSpec& forget,
                                     const UnlearnConfig& cfg) {
    validate(cfg);
    const auto t0 = std::chrono::steady_clock::now();

    UnlearnResult result;
    result.student = start;

    TrainConfig step_cfg;
    step_cfg.learning_rate = cfg.learning_rate;
    step_cfg.clip_norm = cfg.clip_norm;
    SgdState state = make_sgd_state(result.student);
    Gradients grads;

    Rng rng_retain(derive_seed(cfg.seed, stage::unlearn, 0));
    Rng rng_forget(derive_seed(cfg.seed, stage::unlearn, 1));

    std::vector<std::size_t> retain_order = retain.indices;
    std::vector<std::size_t> forget_order = forget.indices;

    auto batch_count = [](std::size_t n, int bs) {
        return n == 0 ? std::size_t{0} : (n + static_cast<std::size_t>(bs) - 1) /
                                             static_cast<std::size_t>(bs);
    };

    std::vector<std::vector<double>> refs;  // KL reference rows for one batch

    auto run_batch = [&](const StreamSpec& stream, const std::vector<std::size_t>& order,
                         std::size_t batch_index) {
        const std::size_t begin = batch_index * static_cast<std::size_t>(stream.batch_size);
        const std::size_t end =
            std::min(order.size(), begin + static_cast<std::size_t>(stream.batch_size));
        std::vector<SampleLoss> batch;
        batch.reserve(end - begin);
        refs.clear();
        refs.reserve(end - begin);
        bool any_weight = false;
        for (std::size_t k = begin; k < end; ++k) {
            const std::size_t idx = order[k];
            const Trajectory& traj = corpus.trajectories[idx];
            double mult = 1.0;
            if (stream.multiplier != nullptr) {
                auto it = stream.multiplier->find(idx);
                if (it == stream.multiplier->end())
                    throw config_error("unlearn: sample " + std::to_string(idx) +
                                       " has no importance score");
                mult = it->second;
            }
            SampleLoss s;
            s.tokens = &traj.tokens;
            s.label = traj.user;
            s.ce_weight = mult * stream.ce_coeff;
            s.kl_weight = mult * stream.kl_coeff;
            if (s.kl_weight != 0.0) {
                refs.push_back(forward(*stream.kl_model, traj.tokens));
                s.kl_ref = &refs.back();
            }
            if (s.ce_weight != 0.0 || s.kl_weight != 0.0) any_weight = true;
            batch.push_back(s);
        }
        if (!any_weight) return 0.0;  // exact no-op, skip the step
        const double loss = backward(result.student, batch, grads);
        sgd_step(result.student, grads, state, step_cfg);
        return loss;
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng_retain.shuffle(retain_order);
        rng_forget.shuffle(forget_order);
        const std::size_t n_retain = batch_count(retain_order.size(), retain.batch_size);
        const std::size_t n_forget = batch_count(forget_order.size(), forget.batch_size);

        EpochLoss losses;
        for (std::size_t b = 0; b < std::max(n_retain, n_forget); ++b) {
            if (b < n_retain) losses.retain += run_batch(retain, retain_order, b);
            if (b < n_forget) losses.forget += run_batch(forget, forget_order, b);
        }
        if (n_retain > 0) losses.retain /= static_cast<double>(n_retain);
        if (n_forget > 0) losses.forget /= static_cast<double>(n_forget);
        result.per_epoch_losses.push_back(losses);
    }

    result.wall_clock_seconds = std::max(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1e-9);
    return result;
}

inline void require(bool ok, const char* msg) {
    if (!ok) throw config_error(msg);
}

}  // namespace detail

// Importance-weighted teacher-student unlearning. Retain batches pull the
// student toward the frozen teacher (KL) and the true labels (CE); forget
// batches push it away from the teacher with per-sample strength
// (e^{xi_norm} - 1).
inline UnlearnResult tracehiding(const TeacherStudent& ts, const Corpus& corpus,
                                 const std::vector<std::size_t>& retain,
                                 const std::vector<std::size_t>& forget,
                                 const ImportanceVector& scores, const UnlearnConfig& cfg) {
    validate(cfg);
    std::unordered_map<std::size_t, double> weight;
    weight.reserve(scores.indices.size());
    for (std::size_t i = 0; i < scores.indices.size(); ++i)
        weight[scores.indices[i]] = forget_weight(scores.normalized[i]);
    for (std::size_t idx : forget) {
        if (!weight.count(idx))
            throw config_error("tracehiding: forget sample " + std::to_string(idx) +
                               " missing from the importance vector");
    }

    detail::StreamSpec retain_stream;
    retain_stream.indices = retain;
    retain_stream.kl_coeff = cfg.c1;
    retain_stream.ce_coeff = cfg.c2;
    retain_stream.kl_model = ts.teacher;
    retain_stream.batch_size = cfg.retain_batch_size;

    detail::StreamSpec forget_stream;
    forget_stream.indices = forget;
    forget_stream.kl_coeff = -1.0;
    forget_stream.kl_model = ts.teacher;
    forget_stream.multiplier = &weight;
    forget_stream.batch_size = cfg.forget_batch_size;

    return detail::interleaved_run(ts.student, corpus, retain_stream, forget_stream, cfg);
}

// Constant-weight ablation of the TraceHiding loss: retain keeps
// KL + CE, forget uses an unweighted -KL.
inline UnlearnResult scrub(const TeacherStudent& ts, const Corpus& corpus,
                           const std::vector<std::size_t>& retain,
                           const std::vector<std::size_t>& forget,
                           const UnlearnConfig& cfg) {
    detail::require(!retain.empty(), "scrub: retain set must be non-empty");
    detail::require(!forget.empty(), "scrub: forget set must be non-empty");

    detail::StreamSpec retain_stream;
    retain_stream.indices = retain;
    retain_stream.kl_coeff = 1.0;
    retain_stream.ce_coeff = 1.0;
    retain_stream.kl_model = ts.teacher;
    retain_stream.batch_size = cfg.retain_batch_size;

    detail::StreamSpec forget_stream;
    forget_stream.indices = forget;
    forget_stream.kl_coeff = -1.0;
    forget_stream.kl_model = ts.teacher;
    forget_stream.batch_size = cfg.forget_batch_size;

    return detail::interleaved_run(ts.student, corpus, retain_stream, forget_stream, cfg);
}

// plain CE descent on the remaining data, starting from the teacher copy
inline UnlearnResult finetune(const TeacherStudent& ts, const Corpus& corpus,
                              const std::vector<std::size_t>& retain,
                              const UnlearnConfig& cfg) {
    detail::require(!retain.empty(), "finetune: retain set must be non-empty");
    detail::StreamSpec retain_stream;
    retain_stream.indices = retain;
    retain_stream.ce_coeff = 1.0;
    retain_stream.batch_size = cfg.retain_batch_size;
    return detail::interleaved_run(ts.student, corpus, retain_stream, {}, cfg);
}

// gradient ascent on the forget set only
inline UnlearnResult neggrad(const TeacherStudent& ts, const Corpus& corpus,
                             const std::vector<std::size_t>& forget,
                             const UnlearnConfig& cfg) {
    detail::require(!forget.empty(), "neggrad: forget set must be non-empty");
    detail::StreamSpec forget_stream;
    forget_stream.indices = forget;
    forget_stream.ce_coeff = -1.0;
    forget_stream.batch_size = cfg.forget_batch_size;
    return detail::interleaved_run(ts.student, corpus, {}, forget_stream, cfg);
}

// ascent on forget CE alternating with descent on retain CE
inline UnlearnResult neggrad_plus(const TeacherStudent& ts, const Corpus& corpus,
                                  const std::vector<std::size_t>& retain,
                                  const std::vector<std::size_t>& forget,
                                  const UnlearnConfig& cfg) {
    detail::require(!retain.empty(), "neggrad_plus: retain set must be non-empty");
    detail::require(!forget.empty(), "neggrad_plus: forget set must be non-empty");

    detail::StreamSpec retain_stream;
    retain_stream.indices = retain;
    retain_stream.ce_coeff = 1.0;
    retain_stream.batch_size = cfg.retain_batch_size;

    detail::StreamSpec forget_stream;
    forget_stream.indices = forget;
    forget_stream.ce_coeff = -1.0;
    forget_stream.batch_size = cfg.forget_batch_size;

    return detail::interleaved_run(ts.student, corpus, retain_stream, forget_stream, cfg);
}

// Competent/incompetent-teacher distillation: the student matches the
// frozen teacher on retain batches and a frozen randomly initialized
// model on forget batches.
inline UnlearnResult bad_t(const TeacherStudent& ts, const Corpus& corpus,
                           const std::vector<std::size_t>& retain,
                           const std::vector<std::size_t>& forget,
                           const UnlearnConfig& cfg) {
    detail::require(!retain.empty(), "bad_t: retain set must be non-empty");
    detail::require(!forget.empty(), "bad_t: forget set must be non-empty");

    ModelConfig bad_cfg = ts.teacher->cfg;
    bad_cfg.seed = derive_seed(cfg.seed, stage::bad_teacher);
    const SequenceClassifier incompetent = init_model(bad_cfg);

    detail::StreamSpec retain_stream;
    retain_stream.indices = retain;
    retain_stream.kl_coeff = 1.0;
    retain_stream.kl_model = ts.teacher;
    retain_stream.batch_size = cfg.retain_batch_size;

    detail::StreamSpec forget_stream;
    forget_stream.indices = forget;
    forget_stream.kl_coeff = 1.0;
    forget_stream.kl_model = &incompetent;
    forget_stream.batch_size = cfg.forget_batch_size;

    return detail::interleaved_run(ts.student, corpus, retain_stream, forget_stream, cfg);
}

// Gold standard: fresh initialization trained on the remaining data only.
inline UnlearnResult retrain(const ModelConfig& init_cfg, const Corpus& corpus,
                             const std::vector<std::size_t>& retain,
                             const TrainConfig& train_cfg) {
    detail::require(!retain.empty(), "retrain: retain set must be non-empty");
    UnlearnResult result;
    result.student = init_model(init_cfg);
    const TrainResult tr = train(result.student, corpus, retain, train_cfg);
    result.wall_clock_seconds = std::max(tr.wall_clock_seconds, 1e-9);
    result.per_epoch_losses.reserve(tr.epoch_losses.size());
    for (double l : tr.epoch_losses) result.per_epoch_losses.push_back(EpochLoss{l, 0.0});
    return result;
}

}  // namespace tracehide
