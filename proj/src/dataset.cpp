#include "abc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "abc/io_util.hpp"

namespace abc {

uint32_t IdentityDataset::num_identities() const {
    uint32_t k = 0;
    for (const auto& r : records) k = std::max(k, r.identity + 1);
    return k;
}

FeatureBatch IdentityDataset::feature_matrix() const {
    FeatureBatch m(records.size(), dim);
    for (std::size_t i = 0; i < records.size(); ++i)
        std::copy(records[i].features.begin(), records[i].features.end(), m.row(i));
    return m;
}

FeatureBatch IdentityDataset::feature_matrix(const std::vector<std::size_t>& indices) const {
    FeatureBatch m(indices.size(), dim);
    for (std::size_t i = 0; i < indices.size(); ++i)
        std::copy(records[indices[i]].features.begin(), records[indices[i]].features.end(),
                  m.row(i));
    return m;
}

void SynthConfig::validate() const {
    if (num_identities < 2) fail(ErrorCode::invalid_argument, "SynthConfig: need >= 2 identities");
    if (views_per_identity < 2) fail(ErrorCode::invalid_argument, "SynthConfig: need >= 2 views");
    if (samples_per_view < 1) fail(ErrorCode::invalid_argument, "SynthConfig: need >= 1 sample per view");
    if (input_dim < 1) fail(ErrorCode::invalid_argument, "SynthConfig: input_dim must be >= 1");
    if (!(intra_identity_noise_sigma > 0.0) || !(view_offset_sigma > 0.0))
        fail(ErrorCode::invalid_argument, "SynthConfig: sigmas must be positive");
}

IdentityDataset generate_synthetic(const SynthConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    IdentityDataset ds;
    ds.dim = config.input_dim;
    ds.records.reserve(std::size_t(config.num_identities) * config.views_per_identity *
                       config.samples_per_view);

    for (uint32_t id = 0; id < config.num_identities; ++id) {
        // identity mean: uniform direction on the unit sphere
        RealVector mu(config.input_dim);
        double ss = 0.0;
        for (double& x : mu) { x = gauss(rng); ss += x * x; }
        const double norm = std::sqrt(ss);
        for (double& x : mu) x /= norm;

        for (uint32_t v = 0; v < config.views_per_identity; ++v) {
            RealVector offset(config.input_dim);
            for (double& x : offset) x = config.view_offset_sigma * gauss(rng);
            for (uint32_t s = 0; s < config.samples_per_view; ++s) {
                IdentityRecord rec;
                rec.identity = id;
                rec.view = static_cast<uint16_t>(v);
                rec.features.resize(config.input_dim);
                for (uint32_t j = 0; j < config.input_dim; ++j)
                    rec.features[j] = mu[j] + offset[j] +
                                      config.intra_identity_noise_sigma * gauss(rng);
                ds.records.push_back(std::move(rec));
            }
        }
    }
    return ds;
}

static constexpr char kFeaturesMagic[4] = {'A', 'B', 'C', 'F'};

void save_features(const IdentityDataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io, "save_features: cannot open " + path);
    f.write(kFeaturesMagic, 4);
    io::write_u32(f, 1);
    io::write_u64(f, ds.records.size());
    io::write_u32(f, ds.dim);
    for (const auto& r : ds.records) {
        io::write_u32(f, r.identity);
        io::write_u16(f, r.view);
        for (double x : r.features) io::write_f32(f, static_cast<float>(x));
    }
    if (!f) fail(ErrorCode::io, "save_features: write failed");
}

IdentityDataset load_features(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io, "load_features: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kFeaturesMagic, 4) != 0)
        fail(ErrorCode::format, "load_features: bad magic (expected ABCF)");
    if (io::read_u32(f) != 1) fail(ErrorCode::format, "load_features: unsupported version");
    const uint64_t n = io::read_u64(f);
    const uint32_t d = io::read_u32(f);
    if (n == 0) fail(ErrorCode::format, "load_features: empty dataset");
    if (d < 1) fail(ErrorCode::format, "load_features: dim must be >= 1");
    IdentityDataset ds;
    ds.dim = d;
    ds.records.reserve(n);
    for (uint64_t i = 0; i < n; ++i) {
        IdentityRecord rec;
        rec.identity = io::read_u32(f);
        rec.view = io::read_u16(f);
        rec.features.resize(d);
        for (double& x : rec.features) {
            x = io::read_f32(f);
            if (!std::isfinite(x))
                fail(ErrorCode::format, "load_features: non-finite feature value");
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

QueryGallerySplit split_query_gallery(const IdentityDataset& ds, const SplitProtocol& protocol,
                                      uint64_t rng_seed) {
    if (!(protocol.query_fraction > 0.0 && protocol.query_fraction < 1.0))
        fail(ErrorCode::invalid_argument, "split: query_fraction must be in (0,1)");

    std::map<uint32_t, std::vector<std::size_t>> by_identity;
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        by_identity[ds.records[i].identity].push_back(i);

    std::mt19937_64 rng(rng_seed);
    QueryGallerySplit split;
    for (auto& [id, idx] : by_identity) {
        std::set<uint16_t> views;
        for (std::size_t i : idx) views.insert(ds.records[i].view);
        if (views.size() < 2)
            fail(ErrorCode::invalid_argument,
                 "split: identity " + std::to_string(id) + " has a single view");

        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t quota = static_cast<std::size_t>(
            std::lround(protocol.query_fraction * double(idx.size())));
        quota = std::clamp<std::size_t>(quota, 1, idx.size() - 1);

        std::vector<std::size_t> q(idx.begin(), idx.begin() + quota);
        std::vector<std::size_t> g(idx.begin() + quota, idx.end());
        // every query needs a cross-view gallery match; demote queries whose
        // view covers the whole gallery remainder
        for (auto it = q.begin(); it != q.end();) {
            const uint16_t qv = ds.records[*it].view;
            const bool ok = std::any_of(g.begin(), g.end(), [&](std::size_t gi) {
                return ds.records[gi].view != qv;
            });
            if (ok) { ++it; }
            else { g.push_back(*it); it = q.erase(it); }
        }
        split.queries.insert(split.queries.end(), q.begin(), q.end());
        split.gallery.insert(split.gallery.end(), g.begin(), g.end());
    }
    std::sort(split.queries.begin(), split.queries.end());
    std::sort(split.gallery.begin(), split.gallery.end());
    return split;
}

TripletBatch sample_triplet_batch(const IdentityDataset& ds, std::size_t n,
                                  std::mt19937_64& rng, TripletBatchLabels* labels) {
    std::map<uint32_t, std::vector<std::size_t>> by_identity;
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        by_identity[ds.records[i].identity].push_back(i);

    std::vector<uint32_t> eligible;  // identities with >= 2 views
    for (const auto& [id, idx] : by_identity) {
        std::set<uint16_t> views;
        for (std::size_t i : idx) views.insert(ds.records[i].view);
        if (views.size() >= 2) eligible.push_back(id);
    }
    if (n < 1 || n > eligible.size())
        fail(ErrorCode::invalid_argument,
             "sample_triplet_batch: need n distinct identities with >= 2 views");

    std::shuffle(eligible.begin(), eligible.end(), rng);

    TripletBatch batch{Matrix(n, ds.dim), Matrix(n, ds.dim), Matrix(n, ds.dim)};
    if (labels) *labels = TripletBatchLabels{};
    for (std::size_t t = 0; t < n; ++t) {
        const uint32_t id = eligible[t];
        const auto& idx = by_identity[id];
        std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
        const std::size_t anchor_i = idx[pick(rng)];
        std::size_t pos_i;
        do {
            pos_i = idx[pick(rng)];
        } while (ds.records[pos_i].view == ds.records[anchor_i].view);

        std::uniform_int_distribution<std::size_t> pick_any(0, ds.records.size() - 1);
        std::size_t neg_i;
        do {
            neg_i = pick_any(rng);
        } while (ds.records[neg_i].identity == id);

        std::copy(ds.records[anchor_i].features.begin(), ds.records[anchor_i].features.end(),
                  batch.anchors.row(t));
        std::copy(ds.records[pos_i].features.begin(), ds.records[pos_i].features.end(),
                  batch.positives.row(t));
        std::copy(ds.records[neg_i].features.begin(), ds.records[neg_i].features.end(),
                  batch.negatives.row(t));
        if (labels) {
            labels->anchor_identity.push_back(id);
            labels->negative_identity.push_back(ds.records[neg_i].identity);
            labels->anchor_view.push_back(ds.records[anchor_i].view);
            labels->positive_view.push_back(ds.records[pos_i].view);
        }
    }
    return batch;
}

std::pair<FeatureBatch, std::vector<uint32_t>> sample_class_batch(
    const IdentityDataset& ds, std::size_t batch_size, std::mt19937_64& rng) {
    if (batch_size < 1)
        fail(ErrorCode::invalid_argument, "sample_class_batch: batch_size must be >= 1");
    std::uniform_int_distribution<std::size_t> pick(0, ds.records.size() - 1);
    FeatureBatch batch(batch_size, ds.dim);
    std::vector<uint32_t> labels(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t r = pick(rng);
        std::copy(ds.records[r].features.begin(), ds.records[r].features.end(), batch.row(i));
        labels[i] = ds.records[r].identity;
    }
    return {std::move(batch), std::move(labels)};
}

}  // namespace abc
