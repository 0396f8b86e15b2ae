#include <cstdio>
#include <string>

#include "abc.h"
#include "doctest.h"

namespace {

abc_config* small_config() {
    abc_config* cfg = abc_config_create();
    abc_config_set(cfg, "synth_num_identities", "4");
    abc_config_set(cfg, "synth_views_per_identity", "2");
    abc_config_set(cfg, "synth_samples_per_view", "2");
    abc_config_set(cfg, "synth_input_dim", "8");
    abc_config_set(cfg, "code_length", "16");
    abc_config_set(cfg, "pretrain_iters", "20");
    abc_config_set(cfg, "joint_global_iters", "20");
    abc_config_set(cfg, "batch_size_pretrain", "16");
    abc_config_set(cfg, "batch_size_joint", "24");
    abc_config_set(cfg, "extractor_hidden", "16");
    abc_config_set(cfg, "critic_hidden", "8");
    abc_config_set(cfg, "rng_seed", "7");
    return cfg;
}

}  // namespace

TEST_CASE("c api: config set/dump and null handling") {
    CHECK(std::string(abc_version()).size() > 0);
    abc_config* cfg = abc_config_create();
    CHECK(abc_config_set(cfg, "rng_seed", "5") == ABC_OK);
    CHECK(std::string(abc_config_dump(cfg)).find("rng_seed=5") != std::string::npos);
    CHECK(abc_config_set(nullptr, "a", "b") == ABC_ERR_INVALID_ARGUMENT);
    CHECK(abc_config_load_file(cfg, "no_such_config.cfg") == ABC_ERR_IO);
    CHECK(std::string(abc_last_error()).size() > 0);
    abc_config_destroy(cfg);
}

TEST_CASE("c api: dataset generate/save/open round-trip") {
    abc_config* cfg = small_config();
    abc_dataset* ds = abc_dataset_generate(cfg);
    REQUIRE(ds != nullptr);
    CHECK(abc_dataset_size(ds) == 16);
    CHECK(abc_dataset_dim(ds) == 8);
    CHECK(abc_dataset_save(ds, "capi_ds.abcf") == ABC_OK);
    abc_dataset* loaded = abc_dataset_open("capi_ds.abcf");
    REQUIRE(loaded != nullptr);
    CHECK(abc_dataset_size(loaded) == 16);
    abc_dataset_destroy(loaded);
    abc_dataset_destroy(ds);
    abc_config_destroy(cfg);
    std::remove("capi_ds.abcf");

    CHECK(abc_dataset_open("missing.abcf") == nullptr);
}

TEST_CASE("c api: full pipeline on a tiny problem") {
    abc_config* cfg = small_config();
    abc_dataset* ds = abc_dataset_generate(cfg);
    REQUIRE(ds != nullptr);

    abc_model* model = abc_model_create(cfg, abc_dataset_dim(ds));
    REQUIRE(model != nullptr);
    CHECK(abc_pretrain(model, ds, cfg, "capi_pre.csv") == ABC_OK);
    CHECK(abc_train_joint(model, ds, cfg, "capi_train.csv") == ABC_OK);
    CHECK(abc_model_save(model, "capi_model.abcm") == ABC_OK);

    abc_model* reopened = abc_model_open("capi_model.abcm");
    REQUIRE(reopened != nullptr);

    abc_codes* codes = abc_encode(reopened, ds, cfg);
    REQUIRE(codes != nullptr);
    CHECK(abc_codes_size(codes) == abc_dataset_size(ds));
    CHECK(abc_codes_bits(codes) == 16);
    CHECK(abc_codes_save(codes, "capi_codes.abcb") == ABC_OK);

    abc_codes* codes2 = abc_codes_open("capi_codes.abcb");
    REQUIRE(codes2 != nullptr);
    CHECK(abc_evaluate(codes2, ds, cfg, "capi_eval.csv") == ABC_OK);

    // mismatched dataset/codes is rejected
    abc_config* cfg2 = small_config();
    abc_config_set(cfg2, "synth_num_identities", "5");
    abc_dataset* other = abc_dataset_generate(cfg2);
    CHECK(abc_evaluate(codes2, other, cfg2, "capi_eval2.csv") == ABC_ERR_INVALID_ARGUMENT);

    abc_dataset_destroy(other);
    abc_config_destroy(cfg2);
    abc_codes_destroy(codes2);
    abc_codes_destroy(codes);
    abc_model_destroy(reopened);
    abc_model_destroy(model);
    abc_dataset_destroy(ds);
    abc_config_destroy(cfg);
    for (const char* f : {"capi_pre.csv", "capi_train.csv", "capi_model.abcm",
                          "capi_codes.abcb", "capi_eval.csv"})
        std::remove(f);
}

TEST_CASE("c api: benchmark on a small gallery") {
    abc_config* cfg = abc_config_create();
    abc_config_set(cfg, "bench_gallery_size", "2000");
    abc_config_set(cfg, "code_length", "128");
    abc_config_set(cfg, "bench_num_queries", "2");
    abc_config_set(cfg, "bench_repetitions", "3");
    CHECK(abc_benchmark(cfg, "capi_bench.csv") == ABC_OK);
    std::remove("capi_bench.csv");
    abc_config_destroy(cfg);
}
