#pragma once

// Plain-text key=value configuration shared by the CLI and trainer.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "abc/codespace.hpp"
#include "abc/dataset.hpp"
#include "abc/losses.hpp"
#include "abc/net.hpp"

namespace abc {

struct KeyValueConfig {
    std::map<std::string, std::string> values;

    static KeyValueConfig load(const std::string& path);
    static KeyValueConfig parse(const std::string& text);
    std::string dump() const;

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& def) const;
    int64_t get_int(const std::string& key, int64_t def) const;
    uint64_t get_uint(const std::string& key, uint64_t def) const;
    double get_double(const std::string& key, double def) const;
    bool get_bool(const std::string& key, bool def) const;
};

struct TrainConfig {
    uint32_t code_length = 64;                 // m
    uint64_t pretrain_iters = 500;
    uint64_t joint_global_iters = 2000;
    uint64_t gan_block_every = 20;
    uint64_t gan_block_len = 10;
    uint64_t critic_steps_per_gan_iter = 5;
    uint64_t generator_steps_per_gan_iter = 1;
    double clip_c = 0.01;
    std::size_t batch_size_pretrain = 64;
    std::size_t batch_size_joint = 128;
    double extractor_lr_initial = 0.001;
    double extractor_lr_final = 0.0001;
    double critic_lr = 0.01;
    double gan_generator_lr = 0.02;
    OptimAlgo critic_optimizer = OptimAlgo::rmsprop;
    double rmsprop_decay = 0.9;
    MarginSchedule margin_schedule;            // empty ladder = scaled default
    double bernoulli_p = 0.5;
    LambdaMode lambda_mode = LambdaMode::norm_matching;
    bool l2_normalize_enabled = true;
    double triplet_gan_weight = 100.0;         // weight of the generator term in global steps
    uint64_t checkpoint_every = 500;
    std::string checkpoint_prefix;             // empty disables checkpointing
    std::vector<uint32_t> extractor_hidden = {128};
    std::vector<uint32_t> critic_hidden = {256};
    uint64_t rng_seed = 1;

    void validate() const;

    static TrainConfig from_kv(const KeyValueConfig& kv);
};

SynthConfig synth_config_from_kv(const KeyValueConfig& kv);

LambdaMode parse_lambda_mode(const std::string& s);
std::string lambda_mode_name(LambdaMode mode);

MarginSchedule parse_margin_schedule(const std::string& s);

}  // namespace abc
