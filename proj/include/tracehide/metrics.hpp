#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "tracehide/common.hpp"
#include "tracehide/corpus.hpp"
#include "tracehide/model.hpp"

namespace tracehide {

// multiclass top-1 accuracy as a percentage; argmax ties go to the
// lowest class id
inline double accuracy(const SequenceClassifier& model, const Corpus& corpus,
                       const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw input_error("accuracy: metric undefined on an empty set");
    std::size_t correct = 0;
    for (std::size_t idx : indices) {
        const Trajectory& traj = corpus.trajectories[idx];
        const auto probs = forward(model, traj.tokens);
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.size(); ++c) {
            if (probs[c] > probs[best]) best = c;
        }
        if (static_cast<int>(best) == traj.user) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(indices.size());
}

struct AccuracyTriple {
    double ua = 0.0;  // 100 - accuracy on the forget set
    double ra = 0.0;  // accuracy on the retain set
    double ta = 0.0;  // accuracy on the test set
};

inline AccuracyTriple ua_ra_ta(const SequenceClassifier& model, const Corpus& corpus,
                               const Partition& part) {
    AccuracyTriple out;
    out.ua = 100.0 - accuracy(model, corpus, part.forget);
    out.ra = accuracy(model, corpus, part.retain);
    out.ta = accuracy(model, corpus, corpus.test_idx);
    return out;
}

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0) .. (1,1)
    double auc = 0.5;
};

struct MiaResult {
    RocCurve curve;
    double auc = 0.5;
    double gap = 0.0;  // |auc - 0.5|
    bool low_power = false;
};

// AUC of the loss-threshold membership attack: members (the forget set)
// are expected to carry lower loss than non-members (the test set).
// Mann-Whitney statistic with midrank tie handling.
inline MiaResult mia_from_stats(std::vector<double> member_stats,
                                std::vector<double> nonmember_stats) {
    if (member_stats.empty() || nonmember_stats.empty())
        throw input_error("mia: both populations must be non-empty");
    MiaResult res;
    res.low_power = member_stats.size() < 5 || nonmember_stats.size() < 5;

    const std::size_t n_m = member_stats.size();
    const std::size_t n_n = nonmember_stats.size();

    // combined ascending sort with labels; midranks over tie groups
    std::vector<std::pair<double, int>> all;  // (stat, is_member)
    all.reserve(n_m + n_n);
    for (double s : member_stats) all.emplace_back(s, 1);
    for (double s : nonmember_stats) all.emplace_back(s, 0);
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double member_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].second) member_rank_sum += midrank;
        }
        i = j;
    }
    const double nm = static_cast<double>(n_m);
    const double nn = static_cast<double>(n_n);
    // pairs where member > nonmember (ties half); low member loss => high AUC
    const double u_greater = member_rank_sum - nm * (nm + 1.0) / 2.0;
    res.auc = (nm * nn - u_greater) / (nm * nn);
    res.gap = std::fabs(res.auc - 0.5);

    // ROC sweep over descending membership score (score = -loss)
    std::size_t tp = 0, fp = 0;
    res.curve.points.emplace_back(0.0, 0.0);
    i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].second)
                ++tp;
            else
                ++fp;
        }
        res.curve.points.emplace_back(static_cast<double>(fp) / nn,
                                      static_cast<double>(tp) / nm);
        i = j;
    }
    res.curve.auc = res.auc;
    return res;
}

inline MiaResult mia_auc(const SequenceClassifier& model, const Corpus& corpus,
                         const std::vector<std::size_t>& forget,
                         const std::vector<std::size_t>& test) {
    auto stats = [&](const std::vector<std::size_t>& indices) {
        std::vector<double> out;
        out.reserve(indices.size());
        for (std::size_t idx : indices) {
            const Trajectory& traj = corpus.trajectories[idx];
            out.push_back(cross_entropy(traj.user, forward(model, traj.tokens)));
        }
        return out;
    };
    return mia_from_stats(stats(forget), stats(test));
}

inline double speedup(double retrain_seconds, double unlearn_seconds) {
    if (!(retrain_seconds > 0.0) || !(unlearn_seconds > 0.0))
        throw input_error("speedup: runtimes must be positive");
    return retrain_seconds / unlearn_seconds;
}

// One benchmark cell: metrics plus the run labels that identify it.
struct MetricsReport {
    double ua = 0.0;
    double ra = 0.0;
    double ta = 0.0;
    double mia_auc = 0.5;
    double mia_gap = 0.0;
    double speedup = 0.0;  // 0 when no retraining reference exists
    std::string method;
    std::string score_kind;
    double fraction = 0.0;
    std::string strategy;
    std::uint64_t seed = 0;
    bool mia_low_power = false;
};

inline nlohmann::ordered_json to_json(const MetricsReport& cell) {
    nlohmann::ordered_json rec;
    rec["method"] = cell.method;
    rec["score_kind"] = cell.score_kind;
    rec["strategy"] = cell.strategy;
    rec["fraction"] = cell.fraction;
    rec["seed"] = cell.seed;
    rec["ua"] = cell.ua;
    rec["ra"] = cell.ra;
    rec["ta"] = cell.ta;
    rec["mia_auc"] = cell.mia_auc;
    rec["mia_gap"] = cell.mia_gap;
    rec["speedup"] = cell.speedup;
    rec["mia_low_power"] = cell.mia_low_power;
    return rec;
}

struct RenderedReport {
    std::string table;    // aligned plain text
    std::string records;  // line-delimited aggregate rows
};

// Aggregates cells over seeds, renders the comparison table, and appends
// per-method mean UA ranks (rank 1 = best UA within a strategy/fraction
// group). Input order does not matter: the internal sort is total.
// Wall-clock derived columns are included only when requested, so the
// default report is byte-reproducible across runs.
inline RenderedReport report(std::vector<MetricsReport> cells, bool include_timing = false) {
    if (cells.empty()) throw input_error("report: no cells");

    std::sort(cells.begin(), cells.end(), [](const MetricsReport& a, const MetricsReport& b) {
        return std::tie(a.strategy, a.fraction, a.method, a.score_kind, a.seed) <
               std::tie(b.strategy, b.fraction, b.method, b.score_kind, b.seed);
    });

    struct Agg {
        double ua = 0, ra = 0, ta = 0, auc = 0, gap = 0, spd = 0;
        std::size_t n = 0;
        bool low_power = false;
    };
    using GroupKey = std::tuple<std::string, double, std::string, std::string>;
    std::map<GroupKey, Agg> groups;
    for (const auto& c : cells) {
        Agg& a = groups[GroupKey{c.strategy, c.fraction, c.method, c.score_kind}];
        a.ua += c.ua;
        a.ra += c.ra;
        a.ta += c.ta;
        a.auc += c.mia_auc;
        a.gap += c.mia_gap;
        a.spd += c.speedup;
        a.low_power = a.low_power || c.mia_low_power;
        ++a.n;
    }

    char buf[256];
    std::ostringstream table;
    std::ostringstream records;
    std::snprintf(buf, sizeof(buf), "%-9s %-9s %-13s %-24s %8s %8s %8s %8s %8s",
                  "strategy", "fraction", "method", "score_kind", "UA", "RA", "TA",
                  "MIA_AUC", "MIA_gap");
    table << buf;
    if (include_timing) table << "  speedup";
    table << "  seeds\n";

    for (const auto& [key, agg] : groups) {
        const auto& [strategy, fraction, method, kind] = key;
        const double n = static_cast<double>(agg.n);
        std::snprintf(buf, sizeof(buf),
                      "%-9s %-9.2f %-13s %-24s %8.2f %8.2f %8.2f %8.4f %8.4f",
                      strategy.c_str(), fraction, method.c_str(), kind.c_str(), agg.ua / n,
                      agg.ra / n, agg.ta / n, agg.auc / n, agg.gap / n);
        table << buf;
        if (include_timing) {
            std::snprintf(buf, sizeof(buf), "  %7.2f", agg.spd / n);
            table << buf;
        }
        std::snprintf(buf, sizeof(buf), "  %5zu\n", agg.n);
        table << buf;

        nlohmann::ordered_json rec;
        rec["strategy"] = strategy;
        rec["fraction"] = fraction;
        rec["method"] = method;
        rec["score_kind"] = kind;
        rec["ua"] = agg.ua / n;
        rec["ra"] = agg.ra / n;
        rec["ta"] = agg.ta / n;
        rec["mia_auc"] = agg.auc / n;
        rec["mia_gap"] = agg.gap / n;
        if (include_timing) rec["speedup"] = agg.spd / n;
        rec["seeds"] = agg.n;
        if (agg.low_power) rec["mia_low_power"] = true;
        records << rec.dump() << "\n";
    }

    // mean UA rank per method across (strategy, fraction) groups;
    // competition ranking, best (highest) UA gets rank 1
    std::map<std::pair<std::string, double>, std::vector<std::pair<std::string, double>>>
        by_setting;  // (strategy, fraction) -> [(method/kind label, mean ua)]
    for (const auto& [key, agg] : groups) {
        const auto& [strategy, fraction, method, kind] = key;
        std::string label = method;
        if (!kind.empty()) label += "(" + kind + ")";
        by_setting[{strategy, fraction}].emplace_back(label,
                                                      agg.ua / static_cast<double>(agg.n));
    }
    std::map<std::string, std::pair<double, std::size_t>> rank_acc;  // label -> (sum, count)
    for (const auto& [setting, entries] : by_setting) {
        for (const auto& [label, ua] : entries) {
            std::size_t better = 0;
            for (const auto& [other_label, other_ua] : entries) {
                if (other_ua > ua) ++better;
            }
            auto& acc = rank_acc[label];
            acc.first += static_cast<double>(better + 1);
            acc.second += 1;
        }
    }
    table << "\nmean UA rank (1 = best):\n";
    for (const auto& [label, acc] : rank_acc) {
        std::snprintf(buf, sizeof(buf), "  %-38s %6.2f\n", label.c_str(),
                      acc.first / static_cast<double>(acc.second));
        table << buf;
    }

    return RenderedReport{table.str(), records.str()};
}

}  // namespace tracehide
