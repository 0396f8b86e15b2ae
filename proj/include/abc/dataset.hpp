#pragma once

// Synthetic multi-view identity data, feature-file I/O, query/gallery
// splitting, and batch samplers.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "abc/common.hpp"
#include "abc/losses.hpp"

namespace abc {

struct IdentityRecord {
    RealVector features;
    uint32_t identity = 0;
    uint16_t view = 0;
};

struct IdentityDataset {
    uint32_t dim = 0;
    std::vector<IdentityRecord> records;

    std::size_t size() const { return records.size(); }
    uint32_t num_identities() const;
    FeatureBatch feature_matrix() const;
    FeatureBatch feature_matrix(const std::vector<std::size_t>& indices) const;
};

struct SynthConfig {
    uint32_t num_identities = 32;      // K
    uint32_t views_per_identity = 4;   // V
    uint32_t samples_per_view = 8;     // S
    uint32_t input_dim = 32;           // d
    double intra_identity_noise_sigma = 0.02;
    double view_offset_sigma = 0.05;
    uint64_t rng_seed = 1;

    void validate() const;
};

struct SplitProtocol {
    double query_fraction = 0.25;  // per identity
    // Gallery entries sharing both identity and view with a query are
    // excluded at ranking time (cross-view matching).
};

struct QueryGallerySplit {
    std::vector<std::size_t> queries;   // indices into the dataset
    std::vector<std::size_t> gallery;
};

IdentityDataset generate_synthetic(const SynthConfig& config);

// "ABCF" file format: magic, u32 version=1, u64 n, u32 d, then n records of
// [u32 identity, u16 view, d x f32 little-endian].
void save_features(const IdentityDataset& ds, const std::string& path);
IdentityDataset load_features(const std::string& path);

QueryGallerySplit split_query_gallery(const IdentityDataset& ds, const SplitProtocol& protocol,
                                      uint64_t rng_seed);

struct TripletBatchLabels {
    std::vector<uint32_t> anchor_identity, negative_identity;
    std::vector<uint16_t> anchor_view, positive_view;
};

TripletBatch sample_triplet_batch(const IdentityDataset& ds, std::size_t n,
                                  std::mt19937_64& rng,
                                  TripletBatchLabels* labels = nullptr);

std::pair<FeatureBatch, std::vector<uint32_t>> sample_class_batch(
    const IdentityDataset& ds, std::size_t batch_size, std::mt19937_64& rng);

}  // namespace abc
