#include <cmath>
#include <cstdio>
#include <numeric>
#include <fstream>
#include <string>

#include "abc/trainer.hpp"
#include "doctest.h"

using namespace abc;

namespace {

TrainConfig quick_config() {
    TrainConfig c;
    c.code_length = 16;
    c.pretrain_iters = 50;
    c.joint_global_iters = 40;
    c.batch_size_pretrain = 32;
    c.batch_size_joint = 48;
    c.extractor_hidden = {32};
    c.critic_hidden = {16};
    return c;
}

SynthConfig quick_synth() {
    SynthConfig c;
    c.num_identities = 8;
    c.views_per_identity = 2;
    c.samples_per_view = 4;
    c.input_dim = 12;
    return c;
}

}  // namespace

TEST_CASE("pretrain reduces the cross-entropy loss") {
    auto ds = generate_synthetic(quick_synth());
    auto cfg = quick_config();
    cfg.pretrain_iters = 300;
    auto spec = extractor_spec(cfg, ds.dim);
    auto params = init_params(spec, cfg.rng_seed);
    auto report = pretrain(params, spec, ds, cfg);
    REQUIRE(report.cee_loss.size() == 300);
    const double head = std::accumulate(report.cee_loss.begin(), report.cee_loss.begin() + 20, 0.0) / 20;
    const double tail = std::accumulate(report.cee_loss.end() - 20, report.cee_loss.end(), 0.0) / 20;
    CHECK(tail < head);
}

TEST_CASE("pretrain with zero iterations leaves params unchanged") {
    auto ds = generate_synthetic(quick_synth());
    auto cfg = quick_config();
    cfg.pretrain_iters = 0;
    auto spec = extractor_spec(cfg, ds.dim);
    auto params = init_params(spec, cfg.rng_seed);
    auto before = params.weights;
    pretrain(params, spec, ds, cfg);
    for (std::size_t l = 0; l < before.size(); ++l)
        CHECK(params.weights[l].data == before[l].data);
}

TEST_CASE("train_joint schedule accounting: 40 iters with defaults") {
    auto ds = generate_synthetic(quick_synth());
    auto cfg = quick_config();  // gan_block_every=20, len=10, 5 critic / 1 generator
    auto ext_s = extractor_spec(cfg, ds.dim);
    auto cr_s = critic_spec(cfg);
    auto ext = init_params(ext_s, 1);
    auto critic = init_params(cr_s, 2);
    auto report = train_joint(ext, ext_s, critic, cr_s, ds, cfg);
    CHECK(report.global_iterations == 40);
    CHECK(report.critic_updates == 100);       // 2 blocks x 10 x 5
    CHECK(report.gan_generator_updates == 20); // 2 blocks x 10 x 1
    CHECK(report.entries.size() == 40);
}

TEST_CASE("train_joint: weight clip invariant and per-iteration records") {
    auto ds = generate_synthetic(quick_synth());
    auto cfg = quick_config();
    auto ext_s = extractor_spec(cfg, ds.dim);
    auto cr_s = critic_spec(cfg);
    auto ext = init_params(ext_s, 1);
    auto critic = init_params(cr_s, 2);
    clip_weights(critic, cfg.clip_c);  // clipped from the start, as after any update
    auto report = train_joint(ext, ext_s, critic, cr_s, ds, cfg);
    CHECK(max_abs_param(critic) <= cfg.clip_c + 1e-15);
    for (const auto& e : report.entries) {
        CHECK(std::isfinite(e.triplet_loss));
        CHECK(std::isfinite(e.critic_estimate));
        CHECK(e.margin >= 0.2);
    }
}

TEST_CASE("train_joint is deterministic given seeds") {
    auto ds = generate_synthetic(quick_synth());
    auto cfg = quick_config();
    cfg.joint_global_iters = 25;

    auto run = [&]() {
        auto ext_s = extractor_spec(cfg, ds.dim);
        auto cr_s = critic_spec(cfg);
        auto ext = init_params(ext_s, 1);
        auto critic = init_params(cr_s, 2);
        auto report = train_joint(ext, ext_s, critic, cr_s, ds, cfg);
        return std::make_pair(ext.weights[0].data, report.entries.back().triplet_loss);
    };
    auto a = run();
    auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("train_joint runs with the l2 head disabled") {
    auto ds = generate_synthetic(quick_synth());
    auto cfg = quick_config();
    cfg.l2_normalize_enabled = false;
    cfg.joint_global_iters = 20;
    auto ext_s = extractor_spec(cfg, ds.dim);
    CHECK_FALSE(ext_s.final_l2_normalize);
    auto cr_s = critic_spec(cfg);
    auto ext = init_params(ext_s, 1);
    auto critic = init_params(cr_s, 2);
    auto report = train_joint(ext, ext_s, critic, cr_s, ds, cfg);
    CHECK(report.global_iterations == 20);
}

TEST_CASE("encode_dataset: size, determinism, dim check") {
    auto ds = generate_synthetic(quick_synth());
    auto cfg = quick_config();
    auto spec = extractor_spec(cfg, ds.dim);
    auto params = init_params(spec, 3);
    const CodePrior prior(cfg.code_length, 0.5, LambdaMode::norm_matching);
    const double lambda = normalization_factor(prior);

    auto enc = encode_dataset(params, spec, ds, lambda);
    CHECK(enc.codes.size() == ds.size());
    CHECK(enc.codes.length == cfg.code_length);
    CHECK(enc.labels.size() == ds.size());

    auto enc2 = encode_dataset(params, spec, ds, lambda);
    CHECK(enc2.codes.codes == enc.codes.codes);

    IdentityDataset wrong = ds;
    wrong.dim += 1;
    for (auto& r : wrong.records) r.features.push_back(0.0);
    CHECK_THROWS_AS(encode_dataset(params, spec, wrong, lambda), Error);
}

TEST_CASE("train report CSV output") {
    TrainReport report;
    report.entries = {{0, 0.5, 0.1, -0.2, 0.2}, {1, 0.4, 0.09, -0.21, 0.2}};
    report.critic_updates = 5;
    write_train_csv(report, "test_report.csv");
    std::ifstream f("test_report.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "iteration,triplet_loss,critic_estimate,generator_objective,margin");
    std::remove("test_report.csv");
}

TEST_CASE("config parsing covers the training fields") {
    auto kv = KeyValueConfig::parse(
        "# comment\n"
        "code_length = 32\n"
        "joint_global_iters=100\n"
        "lambda_mode=paper-literal\n"
        "l2_normalize=false\n"
        "margin_schedule=0:0.2,50:0.4\n"
        "extractor_hidden=64,32\n"
        "critic_optimizer=sgd\n"
        "gan_generator_lr=0.005\n"
        "triplet_gan_weight=25\n");
    auto cfg = TrainConfig::from_kv(kv);
    CHECK(cfg.code_length == 32);
    CHECK(cfg.joint_global_iters == 100);
    CHECK(cfg.lambda_mode == LambdaMode::paper_literal);
    CHECK_FALSE(cfg.l2_normalize_enabled);
    CHECK(margin_at(cfg.margin_schedule, 60) == 0.4);
    CHECK(cfg.extractor_hidden == std::vector<uint32_t>{64, 32});
    CHECK(cfg.critic_optimizer == OptimAlgo::sgd);
    CHECK(cfg.gan_generator_lr == 0.005);
    CHECK(cfg.triplet_gan_weight == 25.0);

    CHECK_THROWS_AS(KeyValueConfig::parse("not a pair\n"), Error);
    CHECK_THROWS_AS(TrainConfig::from_kv(KeyValueConfig::parse("code_length=abc\n")), Error);
    CHECK_THROWS_AS(TrainConfig::from_kv(KeyValueConfig::parse("critic_optimizer=adam\n")), Error);

    // round-trip through dump
    auto kv2 = KeyValueConfig::parse(kv.dump());
    CHECK(kv2.values == kv.values);
}
