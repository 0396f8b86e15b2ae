#pragma once

// Exact linear-scan retrieval over bit-packed codes and real vectors,
// CMC/mAP evaluation, and latency/memory benchmarking.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "abc/codespace.hpp"
#include "abc/common.hpp"

namespace abc {

struct RowLabel {
    uint32_t identity = 0;
    uint16_t view = 0;
};

struct HammingIndex {
    uint32_t m = 0;
    std::size_t num_words = 0;
    std::vector<uint64_t> table;  // n x num_words, contiguous
    std::vector<RowLabel> labels;

    std::size_t size() const { return labels.size(); }
    BinaryCode code_at(std::size_t row) const;
};

struct RankedHit {
    std::size_t row;
    double distance;
};

using ExcludePredicate = std::function<bool(const RowLabel&)>;

struct EvalReport {
    std::vector<double> cmc;  // rank-1..K_max matching rates
    double map = 0.0;
    std::vector<double> per_query_ap;
};

struct BenchReport {
    double mean_query_seconds = 0.0;
    double median_query_seconds = 0.0;
    double total_scan_seconds = 0.0;
    uint64_t memory_bytes = 0;
    uint32_t bits = 0;
    std::size_t gallery_size = 0;
};

HammingIndex build_index(const BinaryCodeBatch& codes, const std::vector<RowLabel>& labels);

// Ascending Hamming distance, ties broken by ascending row id; excluded rows
// absent; at most k results.
std::vector<RankedHit> query_hamming(const HammingIndex& index, const BinaryCode& q,
                                     const ExcludePredicate& exclude, std::size_t k);

std::vector<RankedHit> query_euclidean(const FeatureBatch& gallery,
                                       const std::vector<RowLabel>& labels, const RealVector& q,
                                       const ExcludePredicate& exclude, std::size_t k);

// relevance[q][r]: whether the r-th ranked item of query q is relevant.
// Rankings must be complete (every relevant item present).
EvalReport evaluate(const std::vector<std::vector<bool>>& relevance, std::size_t cmc_max_rank);

// Analytic memory model: binary n * ceil(m/64) * 8 bytes, real n * m * 4
// bytes (32-bit storage).
uint64_t memory_bytes_binary(std::size_t n, uint32_t m);
uint64_t memory_bytes_real32(std::size_t n, uint32_t m);

BenchReport benchmark_hamming(const HammingIndex& index,
                              const std::vector<BinaryCode>& queries, std::size_t repetitions);

BenchReport benchmark_euclidean(const std::vector<float>& gallery, std::size_t n, uint32_t m,
                                const std::vector<std::vector<float>>& queries,
                                std::size_t repetitions);

void write_eval_csv(const EvalReport& report, const std::string& path);
void write_bench_csv(const BenchReport& binary, const BenchReport* real,
                     const std::string& path);

}  // namespace abc
