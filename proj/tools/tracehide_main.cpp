// tracehide: trajectory-unlearning workbench CLI.
//
// Subcommands cover the pipeline end to end:
//   tokenize -> synth/train -> score -> unlearn -> evaluate -> benchmark
//
// Every command reads a sectioned key-value config (see README), writes
// outputs atomically (temp file + rename) and prints one machine-parsable
// summary line. Exit codes: 0 ok, 2 config error, 3 parse error,
// 4 numeric error, 5 input-domain error, 1 anything else.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tracehide/tracehide.hpp"

namespace fs = std::filesystem;
using namespace tracehide;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;  // overrides paths.out_dir
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
    auto* c = cmd->add_option("--config", opts.config_path, "run config file");
    if (config_required) c->required();
    cmd->add_option("--out", opts.out_dir, "output directory (overrides paths.out_dir)");
    cmd->add_option("--seed", opts.seed, "global seed (overrides seed)")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
}

KvConfig load_config(const CommonOpts& opts) {
    KvConfig cfg =
        opts.config_path.empty() ? KvConfig{} : KvConfig::parse_file(opts.config_path);
    if (!opts.out_dir.empty()) cfg.set("paths.out_dir", opts.out_dir);
    if (opts.seed_set) cfg.set("seed", std::to_string(opts.seed));
    return cfg;
}

fs::path out_dir(const KvConfig& cfg) {
    const fs::path dir = cfg.get_string("paths.out_dir", "out");
    fs::create_directories(dir);
    return dir;
}

std::uint64_t global_seed(const KvConfig& cfg) { return cfg.get_uint("seed", 0); }

// temp file + rename, so readers never observe partial output
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body,
                  bool binary = false) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
        if (!out) throw parse_error("cannot open " + tmp.string() + " for writing");
        body(out);
        if (!out) throw parse_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_manifest(const fs::path& path, const std::map<std::string, std::string>& kv) {
    write_atomic(path, [&](std::ostream& out) {
        for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
    });
}

TessellationConfig tess_from(const KvConfig& cfg) {
    TessellationConfig t;
    t.resolution = static_cast<int>(cfg.get_int("tessellation.resolution", 0));
    t.base_circumradius = cfg.get_double("tessellation.base_circumradius", 0.01);
    t.dedupe_consecutive = cfg.get_bool("tessellation.dedupe_consecutive", true);
    return t;
}

TrainConfig train_from(const KvConfig& cfg, std::uint64_t seed) {
    TrainConfig t;
    t.learning_rate = cfg.get_double("train.learning_rate", 0.1);
    t.epochs = static_cast<int>(cfg.get_int("train.epochs", 30));
    t.batch_size = static_cast<int>(cfg.get_int("train.batch_size", 16));
    t.clip_norm = cfg.get_double("train.clip_norm", 5.0);
    t.seed = seed;
    return t;
}

ScoreSpec score_from(const KvConfig& cfg) {
    ScoreSpec s;
    s.kind = score_kind_from_string(cfg.get_string("score.kind", "entropy"));
    s.alpha = cfg.get_double("score.alpha", 1.0 / 3.0);
    s.beta = cfg.get_double("score.beta", 1.0 / 3.0);
    s.gamma = cfg.get_double("score.gamma", 1.0 / 3.0);
    s.eta = cfg.get_double("score.eta", 0.5);
    s.lambda = cfg.get_double("score.lambda", 0.5);
    return s;
}

// unlearning epoch budget defaults to a tenth of the training budget
int default_unlearn_epochs(const KvConfig& cfg) {
    const int train_epochs = static_cast<int>(cfg.get_int("train.epochs", 30));
    return (train_epochs + 9) / 10;
}

UnlearnConfig unlearn_from(const KvConfig& cfg, std::uint64_t seed) {
    UnlearnConfig u;
    u.method = method_from_string(cfg.get_string("unlearn.method", "tracehiding"));
    u.score = score_from(cfg);
    u.c1 = cfg.get_double("unlearn.c1", 1.0);
    u.c2 = cfg.get_double("unlearn.c2", 1.0);
    u.epochs = static_cast<int>(cfg.get_int("unlearn.epochs", default_unlearn_epochs(cfg)));
    u.learning_rate = cfg.get_double("unlearn.learning_rate", 0.05);
    u.retain_batch_size = static_cast<int>(cfg.get_int("unlearn.retain_batch_size", 16));
    u.forget_batch_size = static_cast<int>(cfg.get_int("unlearn.forget_batch_size", 16));
    u.clip_norm = cfg.get_double("unlearn.clip_norm", 5.0);
    u.seed = seed;
    return u;
}

Corpus load_split_corpus(const KvConfig& cfg, std::uint64_t seed) {
    Corpus corpus = load_tokenized(cfg.get_string("paths.corpus"));
    split_train_test(corpus, cfg.get_double("split.test_fraction", 0.2), seed);
    return corpus;
}

DeletionRequest sample_request(const KvConfig& cfg, const Corpus& corpus,
                               std::uint64_t seed) {
    const double fraction = cfg.get_double("request.fraction", 0.10);
    const std::string strategy = cfg.get_string("request.strategy", "uniform");
    if (strategy == "uniform") return sample_uniform_users(corpus, fraction, seed);
    if (strategy == "targeted") {
        // inverse aggregated entropy by default; the flag flips to direct
        // proportionality for ablations
        std::vector<double> weights;
        if (cfg.get_bool("request.favor_high_entropy", false))
            weights = user_aggregated_entropies(corpus);
        else
            weights = user_entropy_weights(corpus);
        return sample_targeted_users(corpus, fraction, seed, std::move(weights));
    }
    throw config_error("request.strategy must be uniform or targeted: " + strategy);
}

ImportanceVector scores_for(const KvConfig& cfg, const Corpus& corpus) {
    if (cfg.has("paths.scores")) return load_scores(cfg.get_string("paths.scores"));
    return assign_scores(corpus, score_from(cfg));
}

UnlearnResult dispatch_unlearn(const SequenceClassifier& teacher, const Corpus& corpus,
                               const Partition& part, const UnlearnConfig& ucfg,
                               const KvConfig& cfg,
                               const ImportanceVector* scores) {
    TeacherStudent ts = make_teacher_student(teacher);
    switch (ucfg.method) {
        case Method::tracehiding: {
            if (scores == nullptr) throw config_error("tracehiding needs importance scores");
            return tracehiding(ts, corpus, part.retain, part.forget, *scores, ucfg);
        }
        case Method::scrub:
            return scrub(ts, corpus, part.retain, part.forget, ucfg);
        case Method::finetune:
            return finetune(ts, corpus, part.retain, ucfg);
        case Method::neggrad:
            return neggrad(ts, corpus, part.forget, ucfg);
        case Method::neggrad_plus:
            return neggrad_plus(ts, corpus, part.retain, part.forget, ucfg);
        case Method::bad_t:
            return bad_t(ts, corpus, part.retain, part.forget, ucfg);
        case Method::retrain: {
            ModelConfig init_cfg = teacher.cfg;
            init_cfg.seed = derive_seed(ucfg.seed, stage::model_init);
            return retrain(init_cfg, corpus, part.retain, train_from(cfg, ucfg.seed));
        }
    }
    throw config_error("unhandled unlearning method");
}

void save_losses(const fs::path& path, const std::vector<EpochLoss>& losses) {
    write_atomic(path, [&](std::ostream& out) {
        for (std::size_t e = 0; e < losses.size(); ++e) {
            nlohmann::ordered_json rec;
            rec["epoch"] = e;
            rec["retain_loss"] = losses[e].retain;
            rec["forget_loss"] = losses[e].forget;
            out << rec.dump() << "\n";
        }
    });
}

// ---- commands ---------------------------------------------------------

int cmd_tokenize(const CommonOpts& opts) {
    const KvConfig cfg = load_config(opts);
    const fs::path dir = out_dir(cfg);
    const auto traces = load_points_csv(cfg.get_string("paths.raw_csv"));
    const TessellationConfig tess = tess_from(cfg);

    TokenDictionary dict;
    Corpus corpus;
    std::map<std::int64_t, int> user_map;  // raw user id -> contiguous id
    for (const RawTrace& raw : traces) {
        Trajectory traj;
        auto [it, inserted] =
            user_map.emplace(raw.user_id, static_cast<int>(user_map.size()));
        traj.user = it->second;
        traj.tokens = tokenize_trace(raw.points, tess, dict);
        corpus.trajectories.push_back(std::move(traj));
    }
    corpus.num_users = static_cast<int>(user_map.size());
    corpus.vocab_size = static_cast<int>(dict.size());

    const fs::path corpus_path = dir / "corpus.jsonl";
    write_atomic(corpus_path, [&](std::ostream& out) { save_tokenized(corpus, out); });
    std::cout << "tracehide tokenize ok corpus=" << corpus_path.string()
              << " trajectories=" << corpus.trajectories.size()
              << " users=" << corpus.num_users << " vocab=" << corpus.vocab_size << "\n";
    return 0;
}

int cmd_synth(const CommonOpts& opts) {
    const KvConfig cfg = load_config(opts);
    const fs::path dir = out_dir(cfg);
    const Corpus corpus = synth_corpus(
        static_cast<int>(cfg.get_int("synth.num_users", 20)),
        static_cast<int>(cfg.get_int("synth.traj_per_user", 30)),
        static_cast<int>(cfg.get_int("synth.vocab_size", 200)),
        cfg.get_double("synth.mean_len", 12.0), global_seed(cfg));

    const fs::path corpus_path = dir / "corpus.jsonl";
    write_atomic(corpus_path, [&](std::ostream& out) { save_tokenized(corpus, out); });
    std::cout << "tracehide synth ok corpus=" << corpus_path.string()
              << " trajectories=" << corpus.trajectories.size()
              << " users=" << corpus.num_users << " vocab=" << corpus.vocab_size << "\n";
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    const KvConfig cfg = load_config(opts);
    const fs::path dir = out_dir(cfg);
    const std::uint64_t seed = global_seed(cfg);
    Corpus corpus = load_split_corpus(cfg, seed);

    write_atomic(dir / "train.idx",
                 [&](std::ostream& out) { save_indices(corpus.train_idx, out); });
    write_atomic(dir / "test.idx",
                 [&](std::ostream& out) { save_indices(corpus.test_idx, out); });

    ModelConfig mcfg;
    mcfg.vocab_size = corpus.vocab_size;
    mcfg.num_classes = corpus.num_users;
    mcfg.embed_dim = static_cast<int>(cfg.get_int("model.embed_dim", 32));
    mcfg.hidden_dim = static_cast<int>(cfg.get_int("model.hidden_dim", 64));
    mcfg.seed = derive_seed(seed, stage::model_init);

    SequenceClassifier model = init_model(mcfg);
    const TrainResult tr = train(model, corpus, corpus.train_idx, train_from(cfg, seed));

    const fs::path ckpt = dir / "teacher.ckpt";
    write_atomic(ckpt, [&](std::ostream& out) { save_model(model, out); }, true);

    std::map<std::string, std::string> manifest(cfg.entries().begin(), cfg.entries().end());
    manifest["derived.model_seed"] = std::to_string(mcfg.seed);
    manifest["derived.vocab_size"] = std::to_string(mcfg.vocab_size);
    manifest["derived.num_classes"] = std::to_string(mcfg.num_classes);
    write_manifest(dir / "train_manifest.ini", manifest);

    const double test_acc = accuracy(model, corpus, corpus.test_idx);
    std::cout << "tracehide train ok teacher=" << ckpt.string() << " seconds="
              << tr.wall_clock_seconds << " test_accuracy=" << test_acc << "\n";
    return 0;
}

int cmd_score(const CommonOpts& opts) {
    const KvConfig cfg = load_config(opts);
    const fs::path dir = out_dir(cfg);
    const std::uint64_t seed = global_seed(cfg);
    Corpus corpus = load_split_corpus(cfg, seed);

    ScoreSpec spec = score_from(cfg);
    std::string optimized;
    if (spec.kind == ScoreKind::unified_trajectory &&
        cfg.get_bool("score.optimize_weights", false)) {
        const auto cols = score_matrix(corpus);
        const UnifiedWeights w = optimize_unified_weights(cols[0], cols[1], cols[2]);
        spec.alpha = w.alpha;
        spec.beta = w.beta;
        spec.gamma = w.gamma;
        std::ostringstream os;
        os << " alpha=" << w.alpha << " beta=" << w.beta << " gamma=" << w.gamma;
        optimized = os.str();
    }

    const ImportanceVector scores = assign_scores(corpus, spec);
    const fs::path path = dir / "scores.jsonl";
    write_atomic(path, [&](std::ostream& out) { save_scores(scores, out); });
    std::cout << "tracehide score ok scores=" << path.string()
              << " kind=" << to_string(spec.kind) << " count=" << scores.indices.size()
              << optimized << "\n";
    return 0;
}

int cmd_unlearn(const CommonOpts& opts) {
    const KvConfig cfg = load_config(opts);
    const fs::path dir = out_dir(cfg);
    const std::uint64_t seed = global_seed(cfg);
    Corpus corpus = load_split_corpus(cfg, seed);
    const SequenceClassifier teacher = load_model_file(cfg.get_string("paths.teacher"));

    const DeletionRequest request = sample_request(cfg, corpus, seed);
    const Partition part = make_partition(corpus, request);
    write_atomic(dir / "forget.idx", [&](std::ostream& out) { save_indices(part.forget, out); });
    write_atomic(dir / "retain.idx", [&](std::ostream& out) { save_indices(part.retain, out); });

    const UnlearnConfig ucfg = unlearn_from(cfg, seed);
    std::optional<ImportanceVector> scores;
    if (ucfg.method == Method::tracehiding) scores = scores_for(cfg, corpus);

    const UnlearnResult result = dispatch_unlearn(
        teacher, corpus, part, ucfg, cfg, scores ? &*scores : nullptr);

    const fs::path ckpt = dir / "student.ckpt";
    write_atomic(ckpt, [&](std::ostream& out) { save_model(result.student, out); }, true);
    save_losses(dir / "unlearn_losses.jsonl", result.per_epoch_losses);

    std::map<std::string, std::string> manifest(cfg.entries().begin(), cfg.entries().end());
    manifest["unlearn.method"] = to_string(ucfg.method);
    manifest["unlearn.epochs"] = std::to_string(ucfg.epochs);
    manifest["unlearn.learning_rate"] = std::to_string(ucfg.learning_rate);
    manifest["unlearn.c1"] = std::to_string(ucfg.c1);
    manifest["unlearn.c2"] = std::to_string(ucfg.c2);
    manifest["unlearn.retain_batch_size"] = std::to_string(ucfg.retain_batch_size);
    manifest["unlearn.forget_batch_size"] = std::to_string(ucfg.forget_batch_size);
    manifest["derived.unlearn_seed"] = std::to_string(ucfg.seed);
    manifest["request.users"] = [&] {
        std::ostringstream os;
        for (std::size_t i = 0; i < request.users.size(); ++i)
            os << (i ? "," : "") << request.users[i];
        return os.str();
    }();
    manifest["partition.forget_file"] = (dir / "forget.idx").string();
    manifest["partition.retain_file"] = (dir / "retain.idx").string();
    write_manifest(dir / "unlearn_manifest.ini", manifest);

    std::cout << "tracehide unlearn ok student=" << ckpt.string()
              << " method=" << to_string(ucfg.method)
              << " forget=" << part.forget.size() << " retain=" << part.retain.size()
              << " seconds=" << result.wall_clock_seconds << "\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& opts, double retrain_seconds, double unlearn_seconds) {
    const KvConfig cfg = load_config(opts);
    const fs::path dir = out_dir(cfg);
    const std::uint64_t seed = global_seed(cfg);
    Corpus corpus = load_split_corpus(cfg, seed);
    const SequenceClassifier model = load_model_file(cfg.get_string("paths.model"));

    Partition part;
    if (cfg.has("paths.forget_idx") && cfg.has("paths.retain_idx")) {
        part.forget = load_indices(cfg.get_string("paths.forget_idx"));
        part.retain = load_indices(cfg.get_string("paths.retain_idx"));
    } else {
        part = make_partition(corpus, sample_request(cfg, corpus, seed));
    }

    MetricsReport cell;
    const AccuracyTriple acc = ua_ra_ta(model, corpus, part);
    const MiaResult mia = mia_auc(model, corpus, part.forget, corpus.test_idx);
    cell.ua = acc.ua;
    cell.ra = acc.ra;
    cell.ta = acc.ta;
    cell.mia_auc = mia.auc;
    cell.mia_gap = mia.gap;
    cell.mia_low_power = mia.low_power;
    cell.method = cfg.get_string("unlearn.method", "tracehiding");
    cell.score_kind = cfg.get_string("score.kind", "");
    cell.fraction = cfg.get_double("request.fraction", 0.10);
    cell.strategy = cfg.get_string("request.strategy", "uniform");
    cell.seed = seed;
    const bool timed = retrain_seconds > 0.0 && unlearn_seconds > 0.0;
    if (timed) cell.speedup = speedup(retrain_seconds, unlearn_seconds);

    write_atomic(dir / "metrics.jsonl",
                 [&](std::ostream& out) { out << to_json(cell).dump() << "\n"; });
    const RenderedReport rendered = report({cell}, timed);
    write_atomic(dir / "metrics.txt", [&](std::ostream& out) { out << rendered.table; });

    std::cout << "tracehide evaluate ok metrics=" << (dir / "metrics.jsonl").string()
              << " ua=" << cell.ua << " ra=" << cell.ra << " ta=" << cell.ta
              << " mia_auc=" << cell.mia_auc << " mia_gap=" << cell.mia_gap
              << (timed ? " speedup=" + std::to_string(cell.speedup) : "") << "\n";
    return 0;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        while (!item.empty() && item.front() == ' ') item.erase(item.begin());
        while (!item.empty() && item.back() == ' ') item.pop_back();
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::size_t worker_count() {
    const char* env = std::getenv("TRACEHIDE_THREADS");
    if (env == nullptr) return 1;
    const long n = std::strtol(env, nullptr, 10);
    return n < 1 ? 1 : static_cast<std::size_t>(n);
}

int cmd_benchmark(const CommonOpts& opts) {
    const KvConfig cfg = load_config(opts);
    const fs::path dir = out_dir(cfg);
    const std::uint64_t seed = global_seed(cfg);

    const auto method_specs =
        split_list(cfg.get_string("benchmark.methods",
                                  "tracehiding,retrain,finetune,neggrad,neggrad_plus,scrub,bad_t"));
    const auto fraction_strs =
        split_list(cfg.get_string("benchmark.fractions", "0.01,0.05,0.10,0.20"));
    const auto strategy_strs =
        split_list(cfg.get_string("benchmark.strategies", "uniform,targeted"));
    const int runs = static_cast<int>(cfg.get_int("benchmark.runs", 5));
    const bool with_timing = cfg.get_bool("benchmark.with_timing", false);
    if (runs < 1) throw config_error("benchmark.runs must be >= 1");

    std::vector<double> fractions;
    for (const auto& f : fraction_strs) fractions.push_back(std::stod(f));

    // parse "tracehiding:<kind>" variants; plain methods carry no kind
    struct MethodSpec {
        Method method;
        ScoreSpec score;
        std::string kind_label;
    };
    std::vector<MethodSpec> methods;
    for (const auto& entry : method_specs) {
        MethodSpec spec;
        const auto colon = entry.find(':');
        if (colon == std::string::npos) {
            spec.method = method_from_string(entry);
            if (spec.method == Method::tracehiding) {
                spec.score = score_from(cfg);
                spec.kind_label = to_string(spec.score.kind);
            }
        } else {
            spec.method = method_from_string(entry.substr(0, colon));
            if (spec.method != Method::tracehiding)
                throw config_error("per-method score kinds apply to tracehiding only");
            spec.score = score_from(cfg);
            spec.score.kind = score_kind_from_string(entry.substr(colon + 1));
            spec.kind_label = entry.substr(colon + 1);
        }
        methods.push_back(spec);
    }

    // per-run state shared by all of that run's cells
    struct RunState {
        std::uint64_t run_seed = 0;
        Corpus corpus;
        SequenceClassifier teacher;
        std::map<std::string, ImportanceVector> scores;  // per score kind
        std::vector<double> targeted_weights;
    };
    const Corpus base = load_tokenized(cfg.get_string("paths.corpus"));
    const double test_fraction = cfg.get_double("split.test_fraction", 0.2);

    std::vector<RunState> run_states(static_cast<std::size_t>(runs));
    for (int run = 0; run < runs; ++run) {
        RunState& rs = run_states[static_cast<std::size_t>(run)];
        rs.run_seed = derive_seed(seed, stage::benchmark_run + static_cast<std::uint64_t>(run));
        rs.corpus = base;
        split_train_test(rs.corpus, test_fraction, rs.run_seed);

        ModelConfig mcfg;
        mcfg.vocab_size = rs.corpus.vocab_size;
        mcfg.num_classes = rs.corpus.num_users;
        mcfg.embed_dim = static_cast<int>(cfg.get_int("model.embed_dim", 32));
        mcfg.hidden_dim = static_cast<int>(cfg.get_int("model.hidden_dim", 64));
        mcfg.seed = derive_seed(rs.run_seed, stage::model_init);
        rs.teacher = init_model(mcfg);
        train(rs.teacher, rs.corpus, rs.corpus.train_idx, train_from(cfg, rs.run_seed));

        for (const MethodSpec& m : methods) {
            if (m.method == Method::tracehiding && !rs.scores.count(m.kind_label))
                rs.scores.emplace(m.kind_label, assign_scores(rs.corpus, m.score));
        }
        const bool needs_targeted =
            std::find(strategy_strs.begin(), strategy_strs.end(), "targeted") !=
            strategy_strs.end();
        if (needs_targeted) {
            rs.targeted_weights = cfg.get_bool("request.favor_high_entropy", false)
                                      ? user_aggregated_entropies(rs.corpus)
                                      : user_entropy_weights(rs.corpus);
        }
    }

    // one group = (run, strategy, fraction); methods run inside a group so
    // the retraining reference time exists before dependents need it
    struct Group {
        int run;
        std::string strategy;
        double fraction;
        std::vector<MetricsReport> cells;
    };
    std::vector<Group> groups;
    for (int run = 0; run < runs; ++run)
        for (const auto& strategy : strategy_strs)
            for (double fraction : fractions)
                groups.push_back(Group{run, strategy, fraction, {}});

    auto run_group = [&](Group& group) {
        const RunState& rs = run_states[static_cast<std::size_t>(group.run)];
        DeletionRequest request;
        if (group.strategy == "uniform") {
            request = sample_uniform_users(rs.corpus, group.fraction, rs.run_seed);
        } else if (group.strategy == "targeted") {
            request = sample_targeted_users(rs.corpus, group.fraction, rs.run_seed,
                                            rs.targeted_weights);
        } else {
            throw config_error("unknown strategy: " + group.strategy);
        }
        const Partition part = make_partition(rs.corpus, request);

        // retraining reference first, whether or not it is reported
        double retrain_seconds = 0.0;
        std::map<std::string, UnlearnResult> results;
        const bool wants_retrain =
            std::any_of(methods.begin(), methods.end(),
                        [](const MethodSpec& m) { return m.method == Method::retrain; });
        if (wants_retrain) {
            ModelConfig init_cfg = rs.teacher.cfg;
            init_cfg.seed = derive_seed(rs.run_seed, stage::model_init + 50);
            results["retrain"] = retrain(init_cfg, rs.corpus, part.retain,
                                         train_from(cfg, rs.run_seed));
            retrain_seconds = results["retrain"].wall_clock_seconds;
        }

        for (const MethodSpec& m : methods) {
            const std::string label = to_string(m.method);
            UnlearnConfig ucfg = unlearn_from(cfg, rs.run_seed);
            ucfg.method = m.method;
            ucfg.score = m.score;

            const UnlearnResult* result = nullptr;
            UnlearnResult computed;
            if (m.method == Method::retrain) {
                result = &results["retrain"];
            } else {
                const ImportanceVector* scores = nullptr;
                if (m.method == Method::tracehiding) scores = &rs.scores.at(m.kind_label);
                computed = dispatch_unlearn(rs.teacher, rs.corpus, part, ucfg, cfg, scores);
                result = &computed;
            }

            MetricsReport cell;
            const AccuracyTriple acc = ua_ra_ta(result->student, rs.corpus, part);
            const MiaResult mia =
                mia_auc(result->student, rs.corpus, part.forget, rs.corpus.test_idx);
            cell.ua = acc.ua;
            cell.ra = acc.ra;
            cell.ta = acc.ta;
            cell.mia_auc = mia.auc;
            cell.mia_gap = mia.gap;
            cell.mia_low_power = mia.low_power;
            cell.method = label;
            cell.score_kind = m.kind_label;
            cell.fraction = group.fraction;
            cell.strategy = group.strategy;
            cell.seed = rs.run_seed;
            if (m.method == Method::retrain)
                cell.speedup = 1.0;
            else if (retrain_seconds > 0.0)
                cell.speedup = speedup(retrain_seconds, result->wall_clock_seconds);
            group.cells.push_back(cell);
        }
    };

    const std::size_t workers = std::min(worker_count(), groups.size());
    if (workers <= 1) {
        for (Group& g : groups) run_group(g);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= groups.size()) return;
                    run_group(groups[i]);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    std::vector<MetricsReport> cells;
    for (const Group& g : groups)
        cells.insert(cells.end(), g.cells.begin(), g.cells.end());

    write_atomic(dir / "cells.jsonl", [&](std::ostream& out) {
        for (const auto& c : cells) out << to_json(c).dump() << "\n";
    });
    const RenderedReport rendered = report(cells, with_timing);
    write_atomic(dir / "aggregate.txt", [&](std::ostream& out) { out << rendered.table; });
    write_atomic(dir / "aggregate.jsonl",
                 [&](std::ostream& out) { out << rendered.records; });

    std::cout << "tracehide benchmark ok cells=" << cells.size()
              << " aggregate=" << (dir / "aggregate.txt").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tracehide: importance-aware unlearning workbench for trajectory"
                 " classifiers"};
    app.require_subcommand(1);

    CommonOpts tokenize_opts, synth_opts, train_opts, score_opts, unlearn_opts,
        evaluate_opts, benchmark_opts;
    double retrain_seconds = 0.0, unlearn_seconds = 0.0;

    add_common(app.add_subcommand("tokenize", "hex-tokenize a raw point CSV"), tokenize_opts);
    add_common(app.add_subcommand("synth", "generate a synthetic tokenized corpus"),
               synth_opts);
    add_common(app.add_subcommand("train", "train the teacher classifier"), train_opts);
    add_common(app.add_subcommand("score", "compute importance scores"), score_opts);
    add_common(app.add_subcommand("unlearn", "run an unlearning method"), unlearn_opts);
    auto* eval_cmd = app.add_subcommand("evaluate", "compute UA/RA/TA and MIA AUC");
    add_common(eval_cmd, evaluate_opts);
    eval_cmd->add_option("--retrain-seconds", retrain_seconds,
                         "reference retraining runtime for the speedup column");
    eval_cmd->add_option("--unlearn-seconds", unlearn_seconds,
                         "unlearning runtime for the speedup column");
    add_common(app.add_subcommand("benchmark", "run the full method/fraction matrix"),
               benchmark_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("tokenize")) return cmd_tokenize(tokenize_opts);
        if (app.got_subcommand("synth")) return cmd_synth(synth_opts);
        if (app.got_subcommand("train")) return cmd_train(train_opts);
        if (app.got_subcommand("score")) return cmd_score(score_opts);
        if (app.got_subcommand("unlearn")) return cmd_unlearn(unlearn_opts);
        if (app.got_subcommand("evaluate"))
            return cmd_evaluate(evaluate_opts, retrain_seconds, unlearn_seconds);
        if (app.got_subcommand("benchmark")) return cmd_benchmark(benchmark_opts);
    } catch (const config_error& e) {
        std::cerr << "tracehide error [config]: " << e.what() << "\n";
        return 2;
    } catch (const parse_error& e) {
        std::cerr << "tracehide error [parse]: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "tracehide error [numeric]: " << e.what() << "\n";
        return 4;
    } catch (const input_error& e) {
        std::cerr << "tracehide error [input]: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "tracehide error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
