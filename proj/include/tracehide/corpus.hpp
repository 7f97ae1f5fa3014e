#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracehide/common.hpp"
#include "tracehide/rng.hpp"

namespace tracehide {

struct Trajectory {
    int user = 0;
    std::vector<int> tokens;

    std::size_t length() const { return tokens.size(); }
};

// The full labelled collection plus the train/test split. Immutable once
// loaded and split; samplers and scoring only ever read it.
struct Corpus {
    std::vector<Trajectory> trajectories;
    int num_users = 0;
    int vocab_size = 0;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;

    bool has_split() const { return !train_idx.empty(); }
};

// train indices, or every index when no split has been made yet
inline std::vector<std::size_t> train_view(const Corpus& corpus) {
    if (corpus.has_split()) return corpus.train_idx;
    std::vector<std::size_t> all(corpus.trajectories.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
}

enum class SamplingStrategy { uniform, targeted };

inline const char* to_string(SamplingStrategy s) {
    return s == SamplingStrategy::uniform ? "uniform" : "targeted";
}

struct DeletionRequest {
    std::vector<int> users;  // sorted, distinct
    double fraction = 0.0;
    SamplingStrategy strategy = SamplingStrategy::uniform;
    std::uint64_t seed = 0;
};

// D_u / D_r split of the train indices.
struct Partition {
    std::vector<std::size_t> forget;
    std::vector<std::size_t> retain;
};

// ceil(fraction * count) with a tiny backoff so products that land an
// epsilon above an integer do not round up spuriously
inline std::size_t ceil_fraction(double fraction, std::size_t count) {
    return static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(count) - 1e-9));
}

// ---- line-delimited corpus format ------------------------------------
//
// One record per trajectory: {"user": <int>, "tokens": [<int>, ...]}
// An optional leading header record {"num_users": <int>, "vocab_size": <int>}
// pins the dimensions; without it they are inferred as 1 + max id.

inline Corpus load_tokenized(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path);

    Corpus corpus;
    int declared_users = -1;
    int declared_vocab = -1;
    int max_user = -1;
    int max_token = -1;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        auto fail = [&](const std::string& msg) {
            return parse_error(path + ":" + std::to_string(line_no) + ": " + msg);
        };
        if (rec.contains("num_users")) {
            if (line_no != 1 || !rec.contains("vocab_size"))
                throw fail("header record must be first and carry vocab_size");
            declared_users = rec["num_users"].get<int>();
            declared_vocab = rec["vocab_size"].get<int>();
            if (declared_users <= 0 || declared_vocab <= 0)
                throw fail("header dimensions must be positive");
            continue;
        }
        if (!rec.contains("user") || !rec.contains("tokens") || !rec["tokens"].is_array())
            throw fail("record needs integer \"user\" and array \"tokens\"");
        Trajectory traj;
        traj.user = rec["user"].get<int>();
        if (traj.user < 0) throw fail("user must be non-negative");
        if (declared_users >= 0 && traj.user >= declared_users)
            throw fail("user id exceeds declared num_users");
        for (const auto& t : rec["tokens"]) {
            const int tok = t.get<int>();
            if (tok < 0) throw fail("token must be non-negative");
            if (declared_vocab >= 0 && tok >= declared_vocab)
                throw fail("token exceeds declared vocab_size");
            max_token = std::max(max_token, tok);
            traj.tokens.push_back(tok);
        }
        if (traj.tokens.empty()) throw fail("trajectory must have length >= 1");
        max_user = std::max(max_user, traj.user);
        corpus.trajectories.push_back(std::move(traj));
    }
    if (corpus.trajectories.empty()) throw parse_error(path + ": empty corpus");
    corpus.num_users = declared_users >= 0 ? declared_users : max_user + 1;
    corpus.vocab_size = declared_vocab >= 0 ? declared_vocab : max_token + 1;
    return corpus;
}

inline void save_tokenized(const Corpus& corpus, std::ostream& out) {
    nlohmann::ordered_json header;
    header["num_users"] = corpus.num_users;
    header["vocab_size"] = corpus.vocab_size;
    out << header.dump() << "\n";
    for (const Trajectory& traj : corpus.trajectories) {
        nlohmann::ordered_json rec;
        rec["user"] = traj.user;
        rec["tokens"] = traj.tokens;
        out << rec.dump() << "\n";
    }
}

inline void save_indices(const std::vector<std::size_t>& indices, std::ostream& out) {
    for (std::size_t i : indices) out << i << "\n";
}

inline std::vector<std::size_t> load_indices(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path);
    std::vector<std::size_t> indices;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            indices.push_back(static_cast<std::size_t>(std::stoull(line)));
        } catch (const std::exception&) {
            throw parse_error(path + ":" + std::to_string(line_no) + ": not an index");
        }
    }
    return indices;
}

// ---- synthetic corpus -------------------------------------------------
//
// Desk-scale generator: every user moves inside a contiguous "home band"
// of tokens with a user-specific stride and noise level, so linking a
// trajectory back to its user is learnable while bands still overlap.

inline Corpus synth_corpus(int num_users, int traj_per_user, int vocab_size,
                           double mean_len, std::uint64_t seed) {
    if (num_users <= 0 || traj_per_user <= 0 || vocab_size <= 0)
        throw input_error("synth_corpus: counts must be positive");
    if (mean_len < 2.0) throw input_error("synth_corpus: mean_len must be >= 2");

    const int band_width =
        std::clamp(2 * vocab_size / num_users, 4, vocab_size);

    Corpus corpus;
    corpus.num_users = num_users;
    corpus.vocab_size = vocab_size;
    corpus.trajectories.reserve(
        static_cast<std::size_t>(num_users) * static_cast<std::size_t>(traj_per_user));

    for (int c = 0; c < num_users; ++c) {
        Rng rng(derive_seed(seed, stage::synth, static_cast<std::uint64_t>(c)));
        const int band_start = static_cast<int>(
            (static_cast<std::int64_t>(c) * vocab_size) / num_users);
        const int stride = 1 + c % 3;
        const double noise =
            0.02 + 0.10 * (num_users > 1 ? static_cast<double>(c) / (num_users - 1) : 0.0);

        for (int j = 0; j < traj_per_user; ++j) {
            const std::size_t len =
                std::max<std::uint64_t>(2, rng.geometric(mean_len));
            Trajectory traj;
            traj.user = c;
            traj.tokens.reserve(len);
            int pos = static_cast<int>(rng.below(static_cast<std::uint64_t>(band_width)));
            for (std::size_t i = 0; i < len; ++i) {
                int tok;
                if (i > 0 && rng.next_double() < noise) {
                    tok = static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab_size)));
                } else {
                    if (i > 0) {
                        if (rng.next_double() < 0.15)
                            pos = static_cast<int>(
                                rng.below(static_cast<std::uint64_t>(band_width)));
                        else
                            pos = (pos + stride) % band_width;
                    }
                    tok = (band_start + pos) % vocab_size;
                }
                traj.tokens.push_back(tok);
            }
            corpus.trajectories.push_back(std::move(traj));
        }
    }
    return corpus;
}

// ---- train/test split --------------------------------------------------

// Stratified by user: ceil(test_fraction * n_c) trajectories per user go
// to test, but every user keeps at least one train trajectory. Returns
// the number of single-trajectory users that contributed nothing to test.
inline std::size_t split_train_test(Corpus& corpus, double test_fraction,
                                    std::uint64_t seed) {
    if (!(test_fraction > 0.0) || !(test_fraction < 0.5))
        throw input_error("split_train_test: test_fraction must be in (0, 0.5)");

    std::vector<std::vector<std::size_t>> by_user(
        static_cast<std::size_t>(corpus.num_users));
    for (std::size_t i = 0; i < corpus.trajectories.size(); ++i) {
        const int u = corpus.trajectories[i].user;
        if (u < 0 || u >= corpus.num_users)
            throw input_error("split_train_test: user id out of range");
        by_user[static_cast<std::size_t>(u)].push_back(i);
    }

    Rng rng(derive_seed(seed, stage::split));
    corpus.train_idx.clear();
    corpus.test_idx.clear();
    std::size_t kept_whole = 0;
    for (int c = 0; c < corpus.num_users; ++c) {
        auto& idx = by_user[static_cast<std::size_t>(c)];
        if (idx.empty())
            throw input_error("split_train_test: user " + std::to_string(c) +
                              " has no trajectories");
        rng.shuffle(idx);
        std::size_t n_test = ceil_fraction(test_fraction, idx.size());
        if (n_test >= idx.size()) n_test = idx.size() - 1;
        if (n_test == 0 && idx.size() == 1) ++kept_whole;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (k < n_test)
                corpus.test_idx.push_back(idx[k]);
            else
                corpus.train_idx.push_back(idx[k]);
        }
    }
    std::sort(corpus.train_idx.begin(), corpus.train_idx.end());
    std::sort(corpus.test_idx.begin(), corpus.test_idx.end());
    return kept_whole;
}

// ---- deletion-request sampling ------------------------------------------

inline void check_fraction(double fraction, int num_users) {
    if (!(fraction > 0.0) || !(fraction < 1.0))
        throw input_error("deletion fraction must be in (0, 1)");
    if (ceil_fraction(fraction, static_cast<std::size_t>(num_users)) >=
        static_cast<std::size_t>(num_users))
        throw input_error("over-deletion: request would remove every user");
}

inline DeletionRequest sample_uniform_users(const Corpus& corpus, double fraction,
                                            std::uint64_t seed) {
    check_fraction(fraction, corpus.num_users);
    const std::size_t k =
        ceil_fraction(fraction, static_cast<std::size_t>(corpus.num_users));

    std::vector<int> pool(static_cast<std::size_t>(corpus.num_users));
    for (int c = 0; c < corpus.num_users; ++c) pool[static_cast<std::size_t>(c)] = c;

    Rng rng(derive_seed(seed, stage::sampling));
    // partial Fisher-Yates: the first k slots end up a uniform sample
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }

    DeletionRequest req;
    req.users.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(req.users.begin(), req.users.end());
    req.fraction = fraction;
    req.strategy = SamplingStrategy::uniform;
    req.seed = seed;
    return req;
}

// Sequential weighted draw without replacement; weights renormalize after
// each pick. The caller supplies one non-negative weight per user (for the
// entropy-targeted strategy: the user's inverse aggregated bigram entropy).
inline DeletionRequest sample_targeted_users(const Corpus& corpus, double fraction,
                                             std::uint64_t seed,
                                             std::vector<double> user_weights) {
    check_fraction(fraction, corpus.num_users);
    if (user_weights.size() != static_cast<std::size_t>(corpus.num_users))
        throw input_error("sample_targeted_users: one weight per user required");
    const std::size_t k =
        ceil_fraction(fraction, static_cast<std::size_t>(corpus.num_users));

    constexpr double epsilon = 1e-9;
    for (double& w : user_weights) {
        if (!std::isfinite(w) || w < 0.0) w = 1.0 / epsilon;
    }

    Rng rng(derive_seed(seed, stage::sampling));
    DeletionRequest req;
    req.fraction = fraction;
    req.strategy = SamplingStrategy::targeted;
    req.seed = seed;
    for (std::size_t draw = 0; draw < k; ++draw) {
        const std::size_t pick = rng.weighted(user_weights);
        req.users.push_back(static_cast<int>(pick));
        user_weights[pick] = 0.0;  // removed from the pool
    }
    std::sort(req.users.begin(), req.users.end());
    return req;
}

// ---- D_u / D_r partition --------------------------------------------------

inline Partition make_partition(const Corpus& corpus, const DeletionRequest& request) {
    std::set<int> requested(request.users.begin(), request.users.end());
    for (int u : request.users) {
        if (u < 0 || u >= corpus.num_users)
            throw input_error("make_partition: requested user out of range");
    }
    Partition part;
    for (std::size_t idx : train_view(corpus)) {
        if (requested.count(corpus.trajectories[idx].user))
            part.forget.push_back(idx);
        else
            part.retain.push_back(idx);
    }
    return part;
}

}  // namespace tracehide
