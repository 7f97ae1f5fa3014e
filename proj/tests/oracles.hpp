// Independent brute-force reference implementations used only by tests.
// These deliberately avoid the library's code paths: plain scans, naive
// set algebra, O(n^2) pair counting, textbook formulas.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "tracehide/corpus.hpp"
#include "tracehide/hexgrid.hpp"

namespace oracles {

// nearest hexagon center by exhaustive scan of a neighborhood around a
// coarse axial estimate
inline tracehide::HexCell nearest_center_cell(double lon, double lat, double radius) {
    const double sqrt3 = 1.7320508075688772;
    const auto r_guess = static_cast<std::int64_t>(std::llround(lat / (1.5 * radius)));
    const auto q_guess = static_cast<std::int64_t>(
        std::llround(lon / (sqrt3 * radius) - static_cast<double>(r_guess) / 2.0));
    tracehide::HexCell best{q_guess, r_guess};
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::int64_t dq = -3; dq <= 3; ++dq) {
        for (std::int64_t dr = -3; dr <= 3; ++dr) {
            const tracehide::HexCell cell{q_guess + dq, r_guess + dr};
            const double cx =
                radius * sqrt3 * (static_cast<double>(cell.q) + static_cast<double>(cell.r) / 2.0);
            const double cy = radius * 1.5 * static_cast<double>(cell.r);
            const double dist = std::hypot(lon - cx, lat - cy);
            if (dist < best_dist) {
                best_dist = dist;
                best = cell;
            }
        }
    }
    return best;
}

inline std::vector<std::size_t> all_or_train(const tracehide::Corpus& corpus) {
    return tracehide::train_view(corpus);
}

// f(b) by scanning every trajectory for membership, token by token
inline std::vector<std::int64_t> token_frequency(const tracehide::Corpus& corpus) {
    std::vector<std::int64_t> freq(static_cast<std::size_t>(corpus.vocab_size), 0);
    for (int b = 0; b < corpus.vocab_size; ++b) {
        for (std::size_t idx : all_or_train(corpus)) {
            const auto& tokens = corpus.trajectories[idx].tokens;
            if (std::find(tokens.begin(), tokens.end(), b) != tokens.end())
                ++freq[static_cast<std::size_t>(b)];
        }
    }
    return freq;
}

inline std::size_t distinct_count(const std::vector<int>& tokens) {
    std::vector<int> copy = tokens;
    std::sort(copy.begin(), copy.end());
    copy.erase(std::unique(copy.begin(), copy.end()), copy.end());
    return copy.size();
}

// Shannon entropy in bits over consecutive pairs, via an ordered map
inline double bigram_entropy(const std::vector<int>& tokens) {
    if (tokens.size() < 2) return 0.0;
    std::map<std::pair<int, int>, int> counts;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
        ++counts[{tokens[i], tokens[i + 1]}];
    int total = 0;
    for (const auto& [bg, c] : counts) total += c;
    double h = 0.0;
    for (const auto& [bg, c] : counts) {
        const double p = static_cast<double>(c) / total;
        h -= p * std::log2(p);
    }
    return h;
}

// |B_c \ B_{-c}| with naive set construction
inline std::size_t user_uniqueness(const tracehide::Corpus& corpus, int user) {
    std::set<int> mine, others;
    for (std::size_t idx : all_or_train(corpus)) {
        const auto& traj = corpus.trajectories[idx];
        auto& target = traj.user == user ? mine : others;
        target.insert(traj.tokens.begin(), traj.tokens.end());
    }
    std::size_t unique = 0;
    for (int tok : mine) {
        if (!others.count(tok)) ++unique;
    }
    return unique;
}

inline double user_aggregated_entropy(const tracehide::Corpus& corpus, int user) {
    double sum = 0.0;
    for (std::size_t idx : all_or_train(corpus)) {
        const auto& traj = corpus.trajectories[idx];
        if (traj.user == user) sum += bigram_entropy(traj.tokens);
    }
    return sum;
}

// O(n^2) pairwise AUC with half credit for ties; members expected lower
inline double mia_auc(const std::vector<double>& member_stats,
                      const std::vector<double>& nonmember_stats) {
    double wins = 0.0;
    for (double m : member_stats) {
        for (double t : nonmember_stats) {
            if (m < t)
                wins += 1.0;
            else if (m == t)
                wins += 0.5;
        }
    }
    return wins / (static_cast<double>(member_stats.size()) *
                   static_cast<double>(nonmember_stats.size()));
}

// independent moments + objective + exhaustive grid search at step 0.01
struct GridResult {
    double alpha = 0.0, beta = 0.0, gamma = 1.0;
    double objective = std::numeric_limits<double>::infinity();
};

inline double grid_objective(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : xs) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 < 1e-30) return std::numeric_limits<double>::infinity();
    const double skew = m3 / std::sqrt(m2 * m2 * m2);
    const double kurt = m4 / (m2 * m2) - 3.0;
    return (-m2 + std::fabs(skew) + kurt) / 3.0;
}

inline GridResult grid_search(const std::vector<double>& cov, const std::vector<double>& ent,
                              const std::vector<double>& len) {
    GridResult best;
    std::vector<double> mix(cov.size());
    for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j + i <= 100; ++j) {
            const double a = i / 100.0, b = j / 100.0, g = (100 - i - j) / 100.0;
            for (std::size_t k = 0; k < cov.size(); ++k)
                mix[k] = a * cov[k] + b * ent[k] + g * len[k];
            const double obj = grid_objective(mix);
            // same tie rule as the implementation: a candidate must win by
            // more than rounding dust
            if (obj < best.objective - 1e-12) best = GridResult{a, b, g, obj};
        }
    }
    return best;
}

}  // namespace oracles
