#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "tracehide/common.hpp"
#include "tracehide/corpus.hpp"

namespace tracehide {

// guards divisions by entropies that can be exactly zero
inline constexpr double entropy_epsilon = 1e-9;

enum class ScoreKind {
    token_frequency_inverse,
    coverage,
    entropy,
    length,
    unified_trajectory,
    user_uniqueness,
    user_entropy,
    unified_user,
};

struct ScoreSpec {
    ScoreKind kind = ScoreKind::entropy;
    // unified trajectory weights (coverage, entropy, length), on the simplex
    double alpha = 1.0 / 3.0;
    double beta = 1.0 / 3.0;
    double gamma = 1.0 / 3.0;
    // unified user weights (uniqueness, entropy), on the simplex
    double eta = 0.5;
    double lambda = 0.5;
};

inline const char* to_string(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::token_frequency_inverse: return "token_frequency_inverse";
        case ScoreKind::coverage: return "coverage";
        case ScoreKind::entropy: return "entropy";
        case ScoreKind::length: return "length";
        case ScoreKind::unified_trajectory: return "unified_trajectory";
        case ScoreKind::user_uniqueness: return "user_uniqueness";
        case ScoreKind::user_entropy: return "user_entropy";
        case ScoreKind::unified_user: return "unified_user";
    }
    throw config_error("unknown score kind");
}

inline ScoreKind score_kind_from_string(const std::string& name) {
    for (ScoreKind k : {ScoreKind::token_frequency_inverse, ScoreKind::coverage,
                        ScoreKind::entropy, ScoreKind::length,
                        ScoreKind::unified_trajectory, ScoreKind::user_uniqueness,
                        ScoreKind::user_entropy, ScoreKind::unified_user}) {
        if (name == to_string(k)) return k;
    }
    throw config_error("unknown score kind: " + name);
}

// Per-train-trajectory scores for one kind; `indices[i]` is the corpus
// index the i-th score belongs to. Normalization statistics are frozen
// over the train set, so forget samples reuse them unchanged.
struct ImportanceVector {
    ScoreSpec spec;
    std::vector<std::size_t> indices;
    std::vector<double> raw;
    std::vector<double> normalized;
    double raw_min = 0.0;
    double raw_max = 0.0;
};

// ---- token level -----------------------------------------------------

// f(b): number of train trajectories containing token b at least once
// (trajectory membership, not occurrence count)
inline std::vector<std::int64_t> token_frequency(const Corpus& corpus) {
    if (corpus.trajectories.empty()) throw input_error("token_frequency: empty corpus");
    const auto train = train_view(corpus);
    std::vector<std::int64_t> freq(static_cast<std::size_t>(corpus.vocab_size), 0);
    std::vector<std::size_t> last_seen(static_cast<std::size_t>(corpus.vocab_size),
                                       std::numeric_limits<std::size_t>::max());
    std::size_t stamp = 0;
    for (std::size_t idx : train) {
        for (int tok : corpus.trajectories[idx].tokens) {
            auto b = static_cast<std::size_t>(tok);
            if (last_seen[b] != stamp) {
                last_seen[b] = stamp;
                ++freq[b];
            }
        }
        ++stamp;
    }
    return freq;
}

// ---- trajectory level ---------------------------------------------------

inline double coverage_importance(const Trajectory& traj, int vocab_size) {
    if (vocab_size < 1) throw input_error("coverage_importance: vocab_size must be >= 1");
    std::unordered_set<int> distinct(traj.tokens.begin(), traj.tokens.end());
    return static_cast<double>(distinct.size()) / static_cast<double>(vocab_size);
}

// Shannon entropy in bits over the empirical bigram distribution.
// A single-token trajectory has no bigrams and entropy 0.
inline double bigram_entropy(const Trajectory& traj) {
    if (traj.tokens.empty()) throw input_error("bigram_entropy: empty trajectory");
    const std::size_t n = traj.tokens.size();
    if (n < 2) return 0.0;
    std::unordered_map<std::uint64_t, std::size_t> counts;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::uint64_t key =
            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(traj.tokens[i])) << 32) |
            static_cast<std::uint32_t>(traj.tokens[i + 1]);
        ++counts[key];
    }
    const double total = static_cast<double>(n - 1);
    double h = 0.0;
    for (const auto& [key, count] : counts) {
        const double p = static_cast<double>(count) / total;
        h -= p * std::log2(p);
    }
    return h < 0.0 ? 0.0 : h;
}

inline double entropy_importance(const Trajectory& traj) {
    return 1.0 / (bigram_entropy(traj) + entropy_epsilon);
}

inline double length_importance(const Trajectory& traj) {
    return static_cast<double>(traj.tokens.size());
}

// mean of 1/f(b) over the token sequence
inline double token_frequency_importance(const Trajectory& traj,
                                          const std::vector<std::int64_t>& freq) {
    double sum = 0.0;
    for (int tok : traj.tokens) {
        const auto b = static_cast<std::size_t>(tok);
        if (b >= freq.size() || freq[b] <= 0)
            throw input_error("token_frequency_importance: token missing from frequency table");
        sum += 1.0 / static_cast<double>(freq[b]);
    }
    return sum / static_cast<double>(traj.tokens.size());
}

// ---- normalization --------------------------------------------------------

// min-max to [0,1]; a constant array maps to 0.5 everywhere so the
// downstream loss weight stays nonzero
inline std::vector<double> minmax_normalize(const std::vector<double>& raw) {
    if (raw.empty()) throw input_error("minmax_normalize: empty input");
    double lo = raw[0], hi = raw[0];
    for (double v : raw) {
        if (!std::isfinite(v)) throw input_error("minmax_normalize: non-finite input");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> out(raw.size());
    if (hi == lo) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - lo) / span;
    return out;
}

inline void check_simplex(std::initializer_list<double> weights, const char* what) {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0))
            throw config_error(std::string(what) + ": weights must be non-negative");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw config_error(std::string(what) + ": weights must sum to 1");
}

inline double unified_trajectory_score(double norm_coverage, double norm_entropy,
                                       double norm_length, double alpha, double beta,
                                       double gamma) {
    check_simplex({alpha, beta, gamma}, "unified_trajectory_score");
    return alpha * norm_coverage + beta * norm_entropy + gamma * norm_length;
}

// ---- user level --------------------------------------------------------

// Token sets per user over the train trajectories.
inline std::vector<std::set<int>> user_token_sets(const Corpus& corpus) {
    std::vector<std::set<int>> sets(static_cast<std::size_t>(corpus.num_users));
    const auto train = train_view(corpus);
    for (std::size_t idx : train) {
        const Trajectory& traj = corpus.trajectories[idx];
        sets[static_cast<std::size_t>(traj.user)].insert(traj.tokens.begin(),
                                                         traj.tokens.end());
    }
    return sets;
}

// |B_c \ B_{-c}|: tokens seen in user c's train trajectories and nobody else's
inline double user_uniqueness(const Corpus& corpus, int user) {
    if (user < 0 || user >= corpus.num_users)
        throw input_error("user_uniqueness: user out of range");
    const auto sets = user_token_sets(corpus);
    std::unordered_map<int, int> owners;  // token -> number of users holding it
    for (const auto& s : sets) {
        for (int tok : s) ++owners[tok];
    }
    std::size_t unique = 0;
    for (int tok : sets[static_cast<std::size_t>(user)]) {
        if (owners[tok] == 1) ++unique;
    }
    return static_cast<double>(unique);
}

// per-user sum of trajectory bigram entropies over the train set
inline std::vector<double> user_aggregated_entropies(const Corpus& corpus) {
    std::vector<double> agg(static_cast<std::size_t>(corpus.num_users), 0.0);
    const auto train = train_view(corpus);
    for (std::size_t idx : train) {
        const Trajectory& traj = corpus.trajectories[idx];
        agg[static_cast<std::size_t>(traj.user)] += bigram_entropy(traj);
    }
    return agg;
}

inline double user_entropy_importance(const Corpus& corpus, int user) {
    if (user < 0 || user >= corpus.num_users)
        throw input_error("user_entropy_importance: user out of range");
    return 1.0 / (user_aggregated_entropies(corpus)[static_cast<std::size_t>(user)] +
                  entropy_epsilon);
}

// weights for the entropy-targeted deletion sampler
inline std::vector<double> user_entropy_weights(const Corpus& corpus) {
    auto agg = user_aggregated_entropies(corpus);
    for (double& a : agg) a = 1.0 / (a + entropy_epsilon);
    return agg;
}

inline double unified_user_score(double norm_uniqueness, double norm_entropy,
                                 double eta, double lambda) {
    check_simplex({eta, lambda}, "unified_user_score");
    return eta * norm_uniqueness + lambda * norm_entropy;
}

// ---- moments and unified-weight optimization ----------------------------

struct MomentStats {
    double variance = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = -3.0;
};

// Population (biased) moments; Fisher's excess kurtosis. A constant
// series gets skewness 0 and excess kurtosis -3.
inline MomentStats moments(const std::vector<double>& xs) {
    if (xs.size() < 2) throw input_error("moments: need at least 2 samples");
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    MomentStats stats;
    stats.variance = m2;
    if (m2 < 1e-30) {
        stats.skewness = 0.0;
        stats.excess_kurtosis = -3.0;
    } else {
        stats.skewness = m3 / std::pow(m2, 1.5);
        stats.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return stats;
}

struct UnifiedWeights {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 1.0;
    double objective = std::numeric_limits<double>::infinity();
};

// Grid search over the weight simplex (step 0.01) minimizing
//   objective = (-variance + |skewness| + excess_kurtosis) / 3.
// Candidates whose combined score collapses to a constant are excluded:
// a zero-variance mixture defeats the spread the objective rewards, and
// its moment ratios are undefined. Ties break toward the smallest
// (alpha, beta); a candidate must beat the incumbent by more than
// rounding dust to displace it, so algebraically flat objectives keep
// the lexicographic winner.
inline UnifiedWeights optimize_unified_weights(const std::vector<double>& norm_coverage,
                                               const std::vector<double>& norm_entropy,
                                               const std::vector<double>& norm_length) {
    const std::size_t n = norm_coverage.size();
    if (n < 4) throw input_error("optimize_unified_weights: need at least 4 rows");
    if (norm_entropy.size() != n || norm_length.size() != n)
        throw input_error("optimize_unified_weights: column lengths differ");

    constexpr double tie_epsilon = 1e-12;
    UnifiedWeights best;
    std::vector<double> combined(n);
    for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j <= 100 - i; ++j) {
            const double alpha = i / 100.0;
            const double beta = j / 100.0;
            const double gamma = (100 - i - j) / 100.0;
            for (std::size_t row = 0; row < n; ++row) {
                combined[row] = alpha * norm_coverage[row] + beta * norm_entropy[row] +
                                gamma * norm_length[row];
            }
            const MomentStats m = moments(combined);
            if (m.variance < 1e-30) continue;
            const double objective =
                (-m.variance + std::fabs(m.skewness) + m.excess_kurtosis) / 3.0;
            if (objective < best.objective - tie_epsilon) {
                best = UnifiedWeights{alpha, beta, gamma, objective};
            }
        }
    }
    return best;
}

// the three normalized trajectory-level columns over the train set
inline std::array<std::vector<double>, 3> score_matrix(const Corpus& corpus) {
    if (!corpus.has_split()) throw input_error("score_matrix: corpus has no split");
    std::vector<double> cov, ent, len;
    cov.reserve(corpus.train_idx.size());
    ent.reserve(corpus.train_idx.size());
    len.reserve(corpus.train_idx.size());
    for (std::size_t idx : corpus.train_idx) {
        const Trajectory& traj = corpus.trajectories[idx];
        cov.push_back(coverage_importance(traj, corpus.vocab_size));
        ent.push_back(entropy_importance(traj));
        len.push_back(length_importance(traj));
    }
    return {minmax_normalize(cov), minmax_normalize(ent), minmax_normalize(len)};
}

// ---- per-trajectory assignment -------------------------------------------

// Raw scores per train trajectory (user-level kinds broadcast the user's
// score to all of that user's trajectories), then min-max normalized over
// the train set.
inline ImportanceVector assign_scores(const Corpus& corpus, const ScoreSpec& spec) {
    if (!corpus.has_split()) throw input_error("assign_scores: corpus has no split");
    ImportanceVector out;
    out.spec = spec;
    out.indices = corpus.train_idx;
    const std::size_t n = corpus.train_idx.size();
    out.raw.resize(n);

    auto broadcast = [&](const std::vector<double>& per_user) {
        for (std::size_t i = 0; i < n; ++i) {
            const int u = corpus.trajectories[corpus.train_idx[i]].user;
            out.raw[i] = per_user[static_cast<std::size_t>(u)];
        }
    };

    switch (spec.kind) {
        case ScoreKind::token_frequency_inverse: {
            const auto freq = token_frequency(corpus);
            for (std::size_t i = 0; i < n; ++i)
                out.raw[i] = token_frequency_importance(
                    corpus.trajectories[corpus.train_idx[i]], freq);
            break;
        }
        case ScoreKind::coverage:
            for (std::size_t i = 0; i < n; ++i)
                out.raw[i] = coverage_importance(corpus.trajectories[corpus.train_idx[i]],
                                                 corpus.vocab_size);
            break;
        case ScoreKind::entropy:
            for (std::size_t i = 0; i < n; ++i)
                out.raw[i] = entropy_importance(corpus.trajectories[corpus.train_idx[i]]);
            break;
        case ScoreKind::length:
            for (std::size_t i = 0; i < n; ++i)
                out.raw[i] = length_importance(corpus.trajectories[corpus.train_idx[i]]);
            break;
        case ScoreKind::unified_trajectory: {
            check_simplex({spec.alpha, spec.beta, spec.gamma}, "assign_scores");
            const auto cols = score_matrix(corpus);
            for (std::size_t i = 0; i < n; ++i)
                out.raw[i] = spec.alpha * cols[0][i] + spec.beta * cols[1][i] +
                             spec.gamma * cols[2][i];
            break;
        }
        case ScoreKind::user_uniqueness: {
            const auto sets = user_token_sets(corpus);
            std::unordered_map<int, int> owners;
            for (const auto& s : sets)
                for (int tok : s) ++owners[tok];
            std::vector<double> uniq(sets.size(), 0.0);
            for (std::size_t u = 0; u < sets.size(); ++u) {
                std::size_t count = 0;
                for (int tok : sets[u])
                    if (owners[tok] == 1) ++count;
                uniq[u] = static_cast<double>(count);
            }
            broadcast(uniq);
            break;
        }
        case ScoreKind::user_entropy: {
            auto weights = user_entropy_weights(corpus);
            broadcast(weights);
            break;
        }
        case ScoreKind::unified_user: {
            check_simplex({spec.eta, spec.lambda}, "assign_scores");
            const auto sets = user_token_sets(corpus);
            std::unordered_map<int, int> owners;
            for (const auto& s : sets)
                for (int tok : s) ++owners[tok];
            std::vector<double> uniq(sets.size(), 0.0);
            for (std::size_t u = 0; u < sets.size(); ++u) {
                std::size_t count = 0;
                for (int tok : sets[u])
                    if (owners[tok] == 1) ++count;
                uniq[u] = static_cast<double>(count);
            }
            const auto ent = user_entropy_weights(corpus);
            const auto uniq_norm = minmax_normalize(uniq);
            const auto ent_norm = minmax_normalize(ent);
            std::vector<double> unified(sets.size());
            for (std::size_t u = 0; u < sets.size(); ++u)
                unified[u] = spec.eta * uniq_norm[u] + spec.lambda * ent_norm[u];
            broadcast(unified);
            break;
        }
    }

    out.raw_min = *std::min_element(out.raw.begin(), out.raw.end());
    out.raw_max = *std::max_element(out.raw.begin(), out.raw.end());
    out.normalized = minmax_normalize(out.raw);
    return out;
}

// ---- score file ------------------------------------------------------------
//
// Header record names the kind and weights; then one record per train
// trajectory: {"index": <corpus index>, "raw": <real>, "norm": <real>}.

inline void save_scores(const ImportanceVector& scores, std::ostream& out) {
    nlohmann::ordered_json header;
    header["kind"] = to_string(scores.spec.kind);
    if (scores.spec.kind == ScoreKind::unified_trajectory) {
        header["alpha"] = scores.spec.alpha;
        header["beta"] = scores.spec.beta;
        header["gamma"] = scores.spec.gamma;
    }
    if (scores.spec.kind == ScoreKind::unified_user) {
        header["eta"] = scores.spec.eta;
        header["lambda"] = scores.spec.lambda;
    }
    header["raw_min"] = scores.raw_min;
    header["raw_max"] = scores.raw_max;
    out << header.dump() << "\n";
    for (std::size_t i = 0; i < scores.indices.size(); ++i) {
        nlohmann::ordered_json rec;
        rec["index"] = scores.indices[i];
        rec["raw"] = scores.raw[i];
        rec["norm"] = scores.normalized[i];
        out << rec.dump() << "\n";
    }
}

inline ImportanceVector load_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path);
    ImportanceVector scores;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!have_header) {
            if (!rec.contains("kind"))
                throw parse_error(path + ": first record must name the score kind");
            scores.spec.kind = score_kind_from_string(rec["kind"].get<std::string>());
            if (rec.contains("alpha")) scores.spec.alpha = rec["alpha"].get<double>();
            if (rec.contains("beta")) scores.spec.beta = rec["beta"].get<double>();
            if (rec.contains("gamma")) scores.spec.gamma = rec["gamma"].get<double>();
            if (rec.contains("eta")) scores.spec.eta = rec["eta"].get<double>();
            if (rec.contains("lambda")) scores.spec.lambda = rec["lambda"].get<double>();
            if (rec.contains("raw_min")) scores.raw_min = rec["raw_min"].get<double>();
            if (rec.contains("raw_max")) scores.raw_max = rec["raw_max"].get<double>();
            have_header = true;
            continue;
        }
        scores.indices.push_back(rec["index"].get<std::size_t>());
        scores.raw.push_back(rec["raw"].get<double>());
        scores.normalized.push_back(rec["norm"].get<double>());
    }
    if (!have_header || scores.indices.empty())
        throw parse_error(path + ": empty score file");
    return scores;
}

}  // namespace tracehide
