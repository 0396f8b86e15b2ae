#include "abc.h"

#include <cstring>
#include <exception>
#include <random>
#include <string>

#include "abc/codespace.hpp"
#include "abc/config.hpp"
#include "abc/dataset.hpp"
#include "abc/net.hpp"
#include "abc/retrieval.hpp"
#include "abc/trainer.hpp"

namespace {

thread_local std::string g_last_error;

int code_of(const abc::Error& e) {
    switch (e.code) {
        case abc::ErrorCode::invalid_argument: return ABC_ERR_INVALID_ARGUMENT;
        case abc::ErrorCode::io: return ABC_ERR_IO;
        case abc::ErrorCode::format: return ABC_ERR_FORMAT;
        case abc::ErrorCode::numeric: return ABC_ERR_NUMERIC;
    }
    return ABC_ERR_UNKNOWN;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return ABC_OK;
    } catch (const abc::Error& e) {
        g_last_error = e.what();
        return code_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return ABC_ERR_UNKNOWN;
    }
}

template <typename T, typename Fn>
T* guarded_new(Fn&& fn) {
    try {
        return new T(fn());
    } catch (const abc::Error& e) {
        g_last_error = e.what();
        return nullptr;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return nullptr;
    }
}

int set_error(int code, const char* msg) {
    g_last_error = msg;
    return code;
}

}  // namespace

struct abc_config {
    abc::KeyValueConfig kv;
    std::string dump_buffer;
};

struct abc_dataset {
    abc::IdentityDataset ds;
};

struct abc_model {
    abc::ModelParams params;
    abc::DenseNetSpec spec;
};

struct abc_codes {
    abc::BinaryCodeBatch batch;
};

extern "C" {

const char* abc_version(void) { return "1.0.0"; }

const char* abc_last_error(void) { return g_last_error.c_str(); }

abc_config* abc_config_create(void) { return new abc_config(); }

void abc_config_destroy(abc_config* cfg) { delete cfg; }

int abc_config_load_file(abc_config* cfg, const char* path) {
    if (!cfg || !path) return set_error(ABC_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        abc::KeyValueConfig loaded = abc::KeyValueConfig::load(path);
        for (const auto& [k, v] : loaded.values) cfg->kv.set(k, v);
    });
}

int abc_config_set(abc_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return set_error(ABC_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { cfg->kv.set(key, value); });
}

const char* abc_config_dump(abc_config* cfg) {
    if (!cfg) return nullptr;
    cfg->dump_buffer = cfg->kv.dump();
    return cfg->dump_buffer.c_str();
}

abc_dataset* abc_dataset_generate(const abc_config* cfg) {
    if (!cfg) { g_last_error = "null config"; return nullptr; }
    return guarded_new<abc_dataset>([&] {
        return abc_dataset{abc::generate_synthetic(abc::synth_config_from_kv(cfg->kv))};
    });
}

abc_dataset* abc_dataset_open(const char* path) {
    if (!path) { g_last_error = "null path"; return nullptr; }
    return guarded_new<abc_dataset>([&] { return abc_dataset{abc::load_features(path)}; });
}

int abc_dataset_save(const abc_dataset* ds, const char* path) {
    if (!ds || !path) return set_error(ABC_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { abc::save_features(ds->ds, path); });
}

size_t abc_dataset_size(const abc_dataset* ds) { return ds ? ds->ds.size() : 0; }

uint32_t abc_dataset_dim(const abc_dataset* ds) { return ds ? ds->ds.dim : 0; }

void abc_dataset_destroy(abc_dataset* ds) { delete ds; }

abc_model* abc_model_create(const abc_config* cfg, uint32_t input_dim) {
    if (!cfg) { g_last_error = "null config"; return nullptr; }
    return guarded_new<abc_model>([&] {
        const abc::TrainConfig tc = abc::TrainConfig::from_kv(cfg->kv);
        abc::DenseNetSpec spec = abc::extractor_spec(tc, input_dim);
        return abc_model{abc::init_params(spec, tc.rng_seed), spec};
    });
}

abc_model* abc_model_open(const char* path) {
    if (!path) { g_last_error = "null path"; return nullptr; }
    return guarded_new<abc_model>([&] {
        auto [params, spec] = abc::load_checkpoint(path);
        return abc_model{std::move(params), std::move(spec)};
    });
}

int abc_model_save(const abc_model* model, const char* path) {
    if (!model || !path) return set_error(ABC_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { abc::save_checkpoint(model->params, model->spec, path); });
}

void abc_model_destroy(abc_model* model) { delete model; }

int abc_pretrain(abc_model* model, const abc_dataset* ds, const abc_config* cfg,
                 const char* report_csv) {
    if (!model || !ds || !cfg) return set_error(ABC_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const abc::TrainConfig tc = abc::TrainConfig::from_kv(cfg->kv);
        abc::PretrainReport report = abc::pretrain(model->params, model->spec, ds->ds, tc);
        if (report_csv) abc::write_pretrain_csv(report, report_csv);
    });
}

int abc_train_joint(abc_model* model, const abc_dataset* ds, const abc_config* cfg,
                    const char* report_csv) {
    if (!model || !ds || !cfg) return set_error(ABC_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const abc::TrainConfig tc = abc::TrainConfig::from_kv(cfg->kv);
        abc::DenseNetSpec cr_spec = abc::critic_spec(tc);
        abc::ModelParams critic = abc::init_critic(tc);
        abc::TrainReport report =
            abc::train_joint(model->params, model->spec, critic, cr_spec, ds->ds, tc);
        if (report_csv) abc::write_train_csv(report, report_csv);
    });
}

abc_codes* abc_encode(const abc_model* model, const abc_dataset* ds, const abc_config* cfg) {
    if (!model || !ds || !cfg) { g_last_error = "null argument"; return nullptr; }
    return guarded_new<abc_codes>([&] {
        const abc::TrainConfig tc = abc::TrainConfig::from_kv(cfg->kv);
        const abc::CodePrior prior(model->spec.layer_sizes.back(), tc.bernoulli_p, tc.lambda_mode);
        abc::EncodedDataset enc = abc::encode_dataset(model->params, model->spec, ds->ds,
                                                      abc::normalization_factor(prior));
        return abc_codes{std::move(enc.codes)};
    });
}

abc_codes* abc_codes_open(const char* path) {
    if (!path) { g_last_error = "null path"; return nullptr; }
    return guarded_new<abc_codes>([&] { return abc_codes{abc::load_codes(path)}; });
}

int abc_codes_save(const abc_codes* codes, const char* path) {
    if (!codes || !path) return set_error(ABC_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { abc::save_codes(codes->batch, path); });
}

size_t abc_codes_size(const abc_codes* codes) { return codes ? codes->batch.size() : 0; }

uint32_t abc_codes_bits(const abc_codes* codes) { return codes ? codes->batch.length : 0; }

void abc_codes_destroy(abc_codes* codes) { delete codes; }

int abc_evaluate(const abc_codes* codes, const abc_dataset* ds, const abc_config* cfg,
                 const char* out_csv) {
    if (!codes || !ds || !cfg || !out_csv)
        return set_error(ABC_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        if (codes->batch.size() != ds->ds.size())
            abc::fail(abc::ErrorCode::invalid_argument,
                      "evaluate: code count does not match dataset size");
        abc::SplitProtocol protocol;
        protocol.query_fraction = cfg->kv.get_double("split_query_fraction", 0.25);
        const uint64_t seed = cfg->kv.get_uint("rng_seed", 1);
        const std::size_t cmc_max = cfg->kv.get_uint("eval_cmc_max_rank", 10);

        const abc::QueryGallerySplit split =
            abc::split_query_gallery(ds->ds, protocol, seed);

        abc::BinaryCodeBatch gallery_codes;
        gallery_codes.length = codes->batch.length;
        std::vector<abc::RowLabel> gallery_labels;
        for (std::size_t gi : split.gallery) {
            gallery_codes.codes.push_back(codes->batch.codes[gi]);
            gallery_labels.push_back({ds->ds.records[gi].identity, ds->ds.records[gi].view});
        }
        const abc::HammingIndex index = abc::build_index(gallery_codes, gallery_labels);

        std::vector<std::vector<bool>> relevance;
        for (std::size_t qi : split.queries) {
            const abc::RowLabel q_label{ds->ds.records[qi].identity, ds->ds.records[qi].view};
            auto hits = abc::query_hamming(
                index, codes->batch.codes[qi],
                [&](const abc::RowLabel& l) {
                    return l.identity == q_label.identity && l.view == q_label.view;
                },
                index.size());
            std::vector<bool> rel;
            rel.reserve(hits.size());
            for (const auto& h : hits)
                rel.push_back(index.labels[h.row].identity == q_label.identity);
            relevance.push_back(std::move(rel));
        }
        abc::write_eval_csv(abc::evaluate(relevance, cmc_max), out_csv);
    });
}

int abc_benchmark(const abc_config* cfg, const char* out_csv) {
    if (!cfg || !out_csv) return set_error(ABC_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const std::size_t n = cfg->kv.get_uint("bench_gallery_size", 100000);
        const uint32_t m = static_cast<uint32_t>(cfg->kv.get_uint("code_length", 2048));
        const std::size_t num_queries = cfg->kv.get_uint("bench_num_queries", 8);
        const std::size_t reps = cfg->kv.get_uint("bench_repetitions", 3);
        const uint64_t seed = cfg->kv.get_uint("rng_seed", 1);
        const bool with_real = cfg->kv.get_bool("bench_real_baseline", true);

        const abc::CodePrior prior(m, 0.5, abc::LambdaMode::norm_matching);
        abc::BinaryCodeBatch gallery = abc::sample_codes(prior, n, seed);
        const abc::HammingIndex index =
            abc::build_index(gallery, std::vector<abc::RowLabel>(n));
        abc::BinaryCodeBatch queries = abc::sample_codes(prior, num_queries, seed + 1);
        const abc::BenchReport binary = abc::benchmark_hamming(index, queries.codes, reps);

        if (!with_real) {
            abc::write_bench_csv(binary, nullptr, out_csv);
            return;
        }
        std::mt19937_64 rng(seed + 2);
        std::uniform_real_distribution<float> uni(0.0f, 1.0f);
        std::vector<float> real_gallery(n * std::size_t(m));
        for (float& x : real_gallery) x = uni(rng);
        std::vector<std::vector<float>> real_queries(num_queries, std::vector<float>(m));
        for (auto& q : real_queries)
            for (float& x : q) x = uni(rng);
        const abc::BenchReport real =
            abc::benchmark_euclidean(real_gallery, n, m, real_queries, reps);
        abc::write_bench_csv(binary, &real, out_csv);
    });
}

}  // extern "C"
