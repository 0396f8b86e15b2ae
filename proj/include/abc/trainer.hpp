#pragma once

// Two-phase training protocol: cross-entropy pretraining, then joint
// optimization alternating triplet/generator updates with GAN blocks
// (critic updates under weight clipping).

#include <cstdint>
#include <string>
#include <vector>

#include "abc/codespace.hpp"
#include "abc/common.hpp"
#include "abc/config.hpp"
#include "abc/dataset.hpp"
#include "abc/net.hpp"
#include "abc/retrieval.hpp"

namespace abc {

struct IterationEntry {
    uint64_t iteration = 0;
    double triplet_loss = 0.0;
    double critic_estimate = 0.0;
    double generator_objective = 0.0;
    double margin = 0.0;
};

struct TrainReport {
    std::vector<IterationEntry> entries;
    uint64_t global_iterations = 0;
    uint64_t critic_updates = 0;
    uint64_t gan_generator_updates = 0;
    double final_bit_mean = 0.0;  // mean encoded-bit activation over the dataset
};

struct PretrainReport {
    std::vector<double> cee_loss;  // one entry per iteration
};

DenseNetSpec extractor_spec(const TrainConfig& config, uint32_t input_dim);
DenseNetSpec critic_spec(const TrainConfig& config);

// Critic parameters seeded from rng_seed + 1, with kink thresholds scaled
// to the normalized code range implied by the config.
ModelParams init_critic(const TrainConfig& config);

// Attaches a linear classification head, runs CEE minibatch steps without
// the l2 head, then discards the classification layer.
PretrainReport pretrain(ModelParams& extractor, const DenseNetSpec& spec,
                        const IdentityDataset& ds, const TrainConfig& config);

TrainReport train_joint(ModelParams& extractor, const DenseNetSpec& ext_spec,
                        ModelParams& critic, const DenseNetSpec& critic_spec,
                        const IdentityDataset& ds, const TrainConfig& config);

struct EncodedDataset {
    BinaryCodeBatch codes;
    std::vector<RowLabel> labels;
    FeatureBatch real_features;  // extractor outputs before binarization
};

EncodedDataset encode_dataset(const ModelParams& extractor, const DenseNetSpec& spec,
                              const IdentityDataset& ds, double lambda);

void write_train_csv(const TrainReport& report, const std::string& path);
void write_pretrain_csv(const PretrainReport& report, const std::string& path);

}  // namespace abc
