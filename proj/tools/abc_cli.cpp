// Command-line driver for the adversarial binary coding pipeline. Links the
// C API only; every run writes a manifest sufficient to reproduce it.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "abc.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::string dataset_path;
    std::string model_path;
    std::string codes_path;
    int64_t seed = -1;  // -1: keep config/default
    int64_t bits = -1;
    std::string lambda_mode;
    bool no_l2norm = false;
};

[[noreturn]] void die(const std::string& msg) {
    std::cerr << "abc: " << msg << std::endl;
    std::exit(1);
}

void check(int rc) {
    if (rc != ABC_OK) die(abc_last_error());
}

template <typename T>
T* checked(T* ptr) {
    if (!ptr) die(abc_last_error());
    return ptr;
}

abc_config* build_config(const CommonOpts& opts) {
    abc_config* cfg = abc_config_create();
    if (!opts.config_path.empty()) check(abc_config_load_file(cfg, opts.config_path.c_str()));
    // flags win over the config file
    if (opts.seed >= 0)
        check(abc_config_set(cfg, "rng_seed", std::to_string(opts.seed).c_str()));
    if (opts.bits >= 0)
        check(abc_config_set(cfg, "code_length", std::to_string(opts.bits).c_str()));
    if (!opts.lambda_mode.empty())
        check(abc_config_set(cfg, "lambda_mode", opts.lambda_mode.c_str()));
    if (opts.no_l2norm) check(abc_config_set(cfg, "l2_normalize", "false"));
    return cfg;
}

void write_manifest(const std::string& command, abc_config* cfg, const CommonOpts& opts,
                    const std::map<std::string, std::string>& artifacts) {
    json manifest;
    manifest["tool_version"] = abc_version();
    manifest["command"] = command;
    manifest["started_at_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();

    json config_snapshot = json::object();
    std::istringstream dump(abc_config_dump(cfg));
    std::string line;
    while (std::getline(dump, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos)
            config_snapshot[line.substr(0, eq)] = line.substr(eq + 1);
    }
    manifest["config"] = config_snapshot;

    json inputs = json::object();
    if (!opts.config_path.empty()) inputs["config_file"] = opts.config_path;
    if (!opts.dataset_path.empty()) inputs["dataset"] = opts.dataset_path;
    if (!opts.model_path.empty()) inputs["model"] = opts.model_path;
    if (!opts.codes_path.empty()) inputs["codes"] = opts.codes_path;
    manifest["inputs"] = inputs;
    manifest["artifacts"] = artifacts;

    const fs::path final_path = fs::path(opts.out_dir) / (command + "_manifest.json");
    const fs::path tmp_path = final_path.string() + ".tmp";
    {
        std::ofstream f(tmp_path);
        if (!f) die("cannot write manifest " + tmp_path.string());
        f << manifest.dump(2) << "\n";
    }
    fs::rename(tmp_path, final_path);  // atomic publish
}

std::string out_file(const CommonOpts& opts, const std::string& name) {
    return (fs::path(opts.out_dir) / name).string();
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key=value config file");
    cmd->add_option("--seed", opts.seed, "RNG seed (overrides config)");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--bits", opts.bits, "code length m (overrides config)");
    cmd->add_option("--lambda-mode", opts.lambda_mode, "norm-matching | paper-literal")
        ->check(CLI::IsMember({"norm-matching", "paper-literal"}));
    cmd->add_flag("--no-l2norm", opts.no_l2norm, "disable the l2-normalization head");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial binary coding toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* synth = app.add_subcommand("synth", "generate a synthetic identity dataset (ABCF)");
    add_common(synth, opts);

    auto* pretrain = app.add_subcommand("pretrain", "cross-entropy pretraining of the extractor");
    add_common(pretrain, opts);
    pretrain->add_option("--dataset", opts.dataset_path, "ABCF dataset")->required();

    auto* train = app.add_subcommand("train", "joint triplet + adversarial training");
    add_common(train, opts);
    train->add_option("--dataset", opts.dataset_path, "ABCF dataset")->required();
    train->add_option("--model", opts.model_path,
                      "pretrained ABCM checkpoint (omit to skip pretraining)");

    auto* encode = app.add_subcommand("encode", "binarize dataset features (ABCB)");
    add_common(encode, opts);
    encode->add_option("--dataset", opts.dataset_path, "ABCF dataset")->required();
    encode->add_option("--model", opts.model_path, "trained ABCM checkpoint")->required();

    auto* eval = app.add_subcommand("eval", "CMC/mAP evaluation of encoded codes");
    add_common(eval, opts);
    eval->add_option("--dataset", opts.dataset_path, "ABCF dataset (labels)")->required();
    eval->add_option("--codes", opts.codes_path, "ABCB codes, parallel to the dataset")
        ->required();

    auto* bench = app.add_subcommand("bench", "Hamming vs float scan latency/memory benchmark");
    add_common(bench, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) die("cannot create output directory " + opts.out_dir);

    abc_config* cfg = build_config(opts);

    if (synth->parsed()) {
        const std::string out = out_file(opts, "dataset.abcf");
        write_manifest("synth", cfg, opts, {{"dataset", out}});
        abc_dataset* ds = checked(abc_dataset_generate(cfg));
        check(abc_dataset_save(ds, out.c_str()));
        std::cout << "wrote " << out << " (" << abc_dataset_size(ds) << " records, dim "
                  << abc_dataset_dim(ds) << ")\n";
        abc_dataset_destroy(ds);
    } else if (pretrain->parsed()) {
        const std::string model_out = out_file(opts, "pretrained.abcm");
        const std::string csv_out = out_file(opts, "pretrain.csv");
        write_manifest("pretrain", cfg, opts, {{"model", model_out}, {"report", csv_out}});
        abc_dataset* ds = checked(abc_dataset_open(opts.dataset_path.c_str()));
        abc_model* model = checked(abc_model_create(cfg, abc_dataset_dim(ds)));
        check(abc_pretrain(model, ds, cfg, csv_out.c_str()));
        check(abc_model_save(model, model_out.c_str()));
        std::cout << "wrote " << model_out << "\n";
        abc_model_destroy(model);
        abc_dataset_destroy(ds);
    } else if (train->parsed()) {
        const std::string model_out = out_file(opts, "model.abcm");
        const std::string csv_out = out_file(opts, "train.csv");
        write_manifest("train", cfg, opts, {{"model", model_out}, {"report", csv_out}});
        abc_dataset* ds = checked(abc_dataset_open(opts.dataset_path.c_str()));
        abc_model* model = opts.model_path.empty()
                               ? checked(abc_model_create(cfg, abc_dataset_dim(ds)))
                               : checked(abc_model_open(opts.model_path.c_str()));
        check(abc_train_joint(model, ds, cfg, csv_out.c_str()));
        check(abc_model_save(model, model_out.c_str()));
        std::cout << "wrote " << model_out << "\n";
        abc_model_destroy(model);
        abc_dataset_destroy(ds);
    } else if (encode->parsed()) {
        const std::string out = out_file(opts, "codes.abcb");
        write_manifest("encode", cfg, opts, {{"codes", out}});
        abc_dataset* ds = checked(abc_dataset_open(opts.dataset_path.c_str()));
        abc_model* model = checked(abc_model_open(opts.model_path.c_str()));
        abc_codes* codes = checked(abc_encode(model, ds, cfg));
        check(abc_codes_save(codes, out.c_str()));
        std::cout << "wrote " << out << " (" << abc_codes_size(codes) << " codes, "
                  << abc_codes_bits(codes) << " bits)\n";
        abc_codes_destroy(codes);
        abc_model_destroy(model);
        abc_dataset_destroy(ds);
    } else if (eval->parsed()) {
        const std::string out = out_file(opts, "eval.csv");
        write_manifest("eval", cfg, opts, {{"report", out}});
        abc_dataset* ds = checked(abc_dataset_open(opts.dataset_path.c_str()));
        abc_codes* codes = checked(abc_codes_open(opts.codes_path.c_str()));
        check(abc_evaluate(codes, ds, cfg, out.c_str()));
        std::cout << "wrote " << out << "\n";
        abc_codes_destroy(codes);
        abc_dataset_destroy(ds);
    } else if (bench->parsed()) {
        const std::string out = out_file(opts, "bench.csv");
        write_manifest("bench", cfg, opts, {{"report", out}});
        check(abc_benchmark(cfg, out.c_str()));
        std::cout << "wrote " << out << "\n";
    }

    abc_config_destroy(cfg);
    return 0;
}
