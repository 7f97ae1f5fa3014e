#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tracehide/corpus.hpp"
#include "tracehide/model.hpp"
#include "tracehide/rng.hpp"

using namespace tracehide;

namespace {

bool params_equal(const ParamBlocks& a, const ParamBlocks& b) {
    bool equal = true;
    a.for_each_block([&](const char* name, const std::vector<double>& va) {
        const_cast<ParamBlocks&>(b).for_each_block(
            [&](const char* other, std::vector<double>& vb) {
                if (std::strcmp(name, other) == 0 && va != vb) equal = false;
            });
    });
    return equal;
}

ModelConfig small_config(std::uint64_t seed, int vocab = 8, int classes = 3,
                         int embed = 6, int hidden = 8) {
    ModelConfig cfg;
    cfg.vocab_size = vocab;
    cfg.num_classes = classes;
    cfg.embed_dim = embed;
    cfg.hidden_dim = hidden;
    cfg.seed = seed;
    return cfg;
}

// central finite differences through the forward-only batch loss
double fd_gradient(SequenceClassifier& model, const std::vector<SampleLoss>& batch,
                   std::vector<double>& block, std::size_t i, double h = 1e-5) {
    const double saved = block[i];
    block[i] = saved + h;
    const double up = batch_loss(model, batch);
    block[i] = saved - h;
    const double down = batch_loss(model, batch);
    block[i] = saved;
    return (up - down) / (2.0 * h);
}

std::vector<double> random_prob_vector(Rng& rng, int n) {
    std::vector<double> p(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (double& v : p) {
        v = 0.05 + rng.next_double();
        sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace

TEST_CASE("initialization is seed-deterministic") {
    const auto a = init_model(small_config(42));
    const auto b = init_model(small_config(42));
    const auto c = init_model(small_config(43));
    CHECK(params_equal(a.params, b.params));
    CHECK(!params_equal(a.params, c.params));

    // uniform(-k, k) bounds with k = 1/sqrt(fan_in)
    const double k_embed = 1.0 / std::sqrt(6.0);
    for (double w : a.params.embed) {
        CHECK(w >= -k_embed);
        CHECK(w <= k_embed);
    }
}

TEST_CASE("untrained model sits near chance on balanced data") {
    const Corpus c = synth_corpus(10, 120, 100, 8.0, 99);  // 1200 balanced samples
    const auto model = init_model(small_config(7, 100, 10, 16, 24));
    std::size_t correct = 0;
    for (const auto& traj : c.trajectories) {
        const auto probs = forward(model, traj.tokens);
        std::size_t best = 0;
        for (std::size_t i = 1; i < probs.size(); ++i)
            if (probs[i] > probs[best]) best = i;
        if (static_cast<int>(best) == traj.user) ++correct;
    }
    const double acc = static_cast<double>(correct) / c.trajectories.size();
    CHECK(acc == Catch::Approx(0.10).margin(0.03));
}

TEST_CASE("forward produces a probability vector") {
    const auto model = init_model(small_config(3));
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> tokens;
        const std::size_t len = 1 + rng.below(20);
        for (std::size_t i = 0; i < len; ++i)
            tokens.push_back(static_cast<int>(rng.below(8)));
        const auto probs = forward(model, tokens);
        REQUIRE(probs.size() == 3);
        double sum = 0.0;
        for (double p : probs) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(sum == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("softmax is shift invariant in the output bias") {
    auto model = init_model(small_config(11));
    const std::vector<int> tokens = {0, 3, 5, 1};
    const auto before = forward(model, tokens);
    for (double& b : model.params.b_out) b += 13.75;  // exactly representable shift
    const auto after = forward(model, tokens);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(after[i] == Catch::Approx(before[i]).margin(1e-12));
}

TEST_CASE("single-class model outputs exactly [1]") {
    const auto model = init_model(small_config(5, 8, 1));
    CHECK(forward(model, {0, 1, 2}) == std::vector<double>{1.0});
}

TEST_CASE("forward rejects out-of-range tokens and empty input") {
    const auto model = init_model(small_config(5));
    CHECK_THROWS_AS(forward(model, {8}), input_error);
    CHECK_THROWS_AS(forward(model, {-1}), input_error);
    CHECK_THROWS_AS(forward(model, {}), input_error);
}

TEST_CASE("cross entropy values") {
    CHECK(cross_entropy(0, {0.25, 0.75}) == Catch::Approx(1.3862943611));
    CHECK(cross_entropy(1, {0.0, 1.0}) == 0.0);
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto p = random_prob_vector(rng, 4);
        CHECK(cross_entropy(static_cast<int>(rng.below(4)), p) >= 0.0);
    }
    CHECK_THROWS_AS(cross_entropy(2, {0.5, 0.5}), input_error);
}

TEST_CASE("KL divergence values") {
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        const auto p = random_prob_vector(rng, 5);
        CHECK(kl_divergence(p, p) == 0.0);
        const auto q = random_prob_vector(rng, 5);
        CHECK(kl_divergence(p, q) >= 0.0);
    }
    CHECK(kl_divergence({1.0, 0.0}, {0.5, 0.5}) == Catch::Approx(std::log(2.0)));
    CHECK_THROWS_AS(kl_divergence({1.0}, {0.5, 0.5}), input_error);
}

TEST_CASE("gradient of CE is zero at a saturated correct prediction") {
    // one class: softmax is identically [1], so the CE composite has zero slope
    const auto model = init_model(small_config(9, 6, 1));
    const std::vector<int> tokens = {0, 2, 4};
    Gradients grads;
    const double loss = backward(model, {SampleLoss{&tokens, 0, 1.0, 0.0, nullptr}}, grads);
    CHECK(loss == 0.0);
    grads.for_each_block([&](const char*, const std::vector<double>& g) {
        for (double v : g) CHECK(v == 0.0);
    });
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        auto model = init_model(small_config(1000 + trial));
        REQUIRE(model.params.parameter_count() <= 5000);

        // batch mixing CE and KL terms with assorted weights
        std::vector<std::vector<int>> token_lists;
        std::vector<std::vector<double>> refs;
        for (int s = 0; s < 3; ++s) {
            std::vector<int> tokens;
            const std::size_t len = 2 + rng.below(6);
            for (std::size_t i = 0; i < len; ++i)
                tokens.push_back(static_cast<int>(rng.below(8)));
            token_lists.push_back(tokens);
            refs.push_back(random_prob_vector(rng, 3));
        }
        std::vector<SampleLoss> batch;
        batch.push_back(SampleLoss{&token_lists[0], 1, 1.0, 0.0, nullptr});
        batch.push_back(SampleLoss{&token_lists[1], 0, 0.7, -1.5, &refs[1]});
        batch.push_back(SampleLoss{&token_lists[2], 2, 0.0, 2.25, &refs[2]});

        Gradients grads;
        backward(model, batch, grads);

        double worst = 0.0;
        grads.for_each_block([&](const char* name, const std::vector<double>& g) {
            std::vector<double>* block = nullptr;
            model.params.for_each_block([&](const char* other, std::vector<double>& v) {
                if (std::strcmp(name, other) == 0) block = &v;
            });
            REQUIRE(block != nullptr);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double fd = fd_gradient(model, batch, *block, i);
                const double denom = std::max({std::fabs(fd), std::fabs(g[i]), 1e-6});
                worst = std::max(worst, std::fabs(fd - g[i]) / denom);
            }
        });
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("gradients scale linearly with the loss coefficient") {
    auto model = init_model(small_config(55));
    const std::vector<int> tokens = {1, 4, 2, 7};
    Gradients base, doubled;
    backward(model, {SampleLoss{&tokens, 2, 1.0, 0.0, nullptr}}, base);
    backward(model, {SampleLoss{&tokens, 2, 2.0, 0.0, nullptr}}, doubled);
    base.for_each_block([&](const char* name, const std::vector<double>& g) {
        doubled.for_each_block([&](const char* other, std::vector<double>& g2) {
            if (std::strcmp(name, other) != 0) return;
            for (std::size_t i = 0; i < g.size(); ++i) CHECK(g2[i] == 2.0 * g[i]);
        });
    });
}

TEST_CASE("sgd step: zero gradients leave parameters unchanged") {
    auto model = init_model(small_config(66));
    const auto before = model.params;
    Gradients zero = zero_like(model);
    SgdState state = make_sgd_state(model);
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    sgd_step(model, zero, state, cfg);
    CHECK(params_equal(model.params, before));
}

TEST_CASE("sgd step clips the global gradient norm") {
    auto model = init_model(small_config(67));
    const auto before = model.params;
    Gradients grads = zero_like(model);
    grads.for_each_block([&](const char*, std::vector<double>& g) {
        for (double& v : g) v = 10.0;
    });
    SgdState state = make_sgd_state(model);
    TrainConfig cfg;
    cfg.learning_rate = 1.0;
    cfg.clip_norm = 5.0;
    sgd_step(model, grads, state, cfg);

    // fresh state: velocity = clipped gradient, so the parameter delta norm
    // is exactly lr * clip_norm
    double delta_sq = 0.0;
    model.params.for_each_block([&](const char* name, const std::vector<double>& v) {
        const_cast<ParamBlocks&>(before).for_each_block(
            [&](const char* other, std::vector<double>& pv) {
                if (std::strcmp(name, other) != 0) return;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    const double d = v[i] - pv[i];
                    delta_sq += d * d;
                }
            });
    });
    CHECK(std::sqrt(delta_sq) == Catch::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("sgd step is deterministic from identical state") {
    auto model_a = init_model(small_config(68));
    auto model_b = init_model(small_config(68));
    Gradients grads = zero_like(model_a);
    Rng rng(9);
    grads.for_each_block([&](const char*, std::vector<double>& g) {
        for (double& v : g) v = rng.uniform(-1, 1);
    });
    Gradients grads_copy = grads;
    SgdState sa = make_sgd_state(model_a);
    SgdState sb = make_sgd_state(model_b);
    TrainConfig cfg;
    sgd_step(model_a, grads, sa, cfg);
    sgd_step(model_b, grads_copy, sb, cfg);
    CHECK(params_equal(model_a.params, model_b.params));
}

TEST_CASE("training reduces loss and is bit-deterministic") {
    Corpus corpus = synth_corpus(6, 20, 60, 8.0, 17);
    split_train_test(corpus, 0.2, 17);

    ModelConfig mcfg = small_config(5, 60, 6, 12, 16);
    TrainConfig tcfg;
    tcfg.learning_rate = 0.1;
    tcfg.epochs = 8;
    tcfg.batch_size = 16;
    tcfg.seed = 5;

    auto model_a = init_model(mcfg);
    const TrainResult ra = train(model_a, corpus, corpus.train_idx, tcfg);
    REQUIRE(ra.epoch_losses.size() == 8);
    CHECK(ra.wall_clock_seconds > 0.0);

    // per-epoch mean loss non-increasing within 5% noise
    for (std::size_t e = 1; e < ra.epoch_losses.size(); ++e)
        CHECK(ra.epoch_losses[e] <= ra.epoch_losses[e - 1] * 1.05);
    CHECK(ra.epoch_losses.back() < ra.epoch_losses.front());

    auto model_b = init_model(mcfg);
    train(model_b, corpus, corpus.train_idx, tcfg);
    CHECK(params_equal(model_a.params, model_b.params));

    CHECK_THROWS_AS(train(model_a, corpus, {}, tcfg), input_error);
    TrainConfig bad = tcfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(train(model_a, corpus, corpus.train_idx, bad), config_error);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    Corpus corpus = synth_corpus(4, 6, 30, 5.0, 23);
    split_train_test(corpus, 0.25, 23);
    auto model = init_model(small_config(77, 30, 4));
    TrainConfig tcfg;
    tcfg.epochs = 2;
    tcfg.seed = 23;
    train(model, corpus, corpus.train_idx, tcfg);

    std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
    save_model(model, buffer);
    const SequenceClassifier loaded = load_model(buffer);

    CHECK(loaded.cfg.vocab_size == model.cfg.vocab_size);
    CHECK(loaded.cfg.num_classes == model.cfg.num_classes);
    CHECK(loaded.cfg.seed == model.cfg.seed);
    bool bit_equal = true;
    model.params.for_each_block([&](const char* name, const std::vector<double>& v) {
        const_cast<ParamBlocks&>(loaded.params)
            .for_each_block([&](const char* other, std::vector<double>& lv) {
                if (std::strcmp(name, other) != 0) return;
                if (v.size() != lv.size() ||
                    std::memcmp(v.data(), lv.data(), v.size() * sizeof(double)) != 0)
                    bit_equal = false;
            });
    });
    CHECK(bit_equal);

    std::stringstream corrupt(std::ios::in | std::ios::out | std::ios::binary);
    corrupt << "NOTMAGIC";
    CHECK_THROWS_AS(load_model(corrupt), parse_error);
}
