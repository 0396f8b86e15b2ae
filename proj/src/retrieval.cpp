#include "abc/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

namespace abc {

BinaryCode HammingIndex::code_at(std::size_t row) const {
    BinaryCode c(m);
    std::copy(table.begin() + row * num_words, table.begin() + (row + 1) * num_words,
              c.words.begin());
    return c;
}

HammingIndex build_index(const BinaryCodeBatch& codes, const std::vector<RowLabel>& labels) {
    if (codes.codes.empty())
        fail(ErrorCode::invalid_argument, "build_index: empty code batch");
    if (codes.codes.size() != labels.size())
        fail(ErrorCode::invalid_argument, "build_index: code/label count mismatch");
    HammingIndex index;
    index.m = codes.length;
    index.num_words = (codes.length + 63) / 64;
    index.table.reserve(codes.codes.size() * index.num_words);
    for (const auto& c : codes.codes) {
        if (c.length != codes.length)
            fail(ErrorCode::invalid_argument, "build_index: inconsistent code length");
        index.table.insert(index.table.end(), c.words.begin(), c.words.end());
    }
    index.labels = labels;
    return index;
}

static std::vector<RankedHit> rank_hits(std::vector<RankedHit>&& hits, std::size_t k) {
    std::stable_sort(hits.begin(), hits.end(), [](const RankedHit& a, const RankedHit& b) {
        return a.distance < b.distance;  // stable sort keeps row order on ties
    });
    if (hits.size() > k) hits.resize(k);
    return std::move(hits);
}

std::vector<RankedHit> query_hamming(const HammingIndex& index, const BinaryCode& q,
                                     const ExcludePredicate& exclude, std::size_t k) {
    if (q.length != index.m)
        fail(ErrorCode::invalid_argument, "query_hamming: code length mismatch");
    std::vector<RankedHit> hits;
    hits.reserve(index.size());
    const std::size_t nw = index.num_words;
    for (std::size_t row = 0; row < index.size(); ++row) {
        if (exclude && exclude(index.labels[row])) continue;
        const uint64_t* words = index.table.data() + row * nw;
        uint64_t d = 0;
        for (std::size_t w = 0; w < nw; ++w) d += std::popcount(words[w] ^ q.words[w]);
        hits.push_back({row, double(d)});
    }
    return rank_hits(std::move(hits), k);
}

std::vector<RankedHit> query_euclidean(const FeatureBatch& gallery,
                                       const std::vector<RowLabel>& labels, const RealVector& q,
                                       const ExcludePredicate& exclude, std::size_t k) {
    if (gallery.cols != q.size())
        fail(ErrorCode::invalid_argument, "query_euclidean: dimension mismatch");
    if (gallery.rows != labels.size())
        fail(ErrorCode::invalid_argument, "query_euclidean: row/label count mismatch");
    std::vector<RankedHit> hits;
    hits.reserve(gallery.rows);
    for (std::size_t row = 0; row < gallery.rows; ++row) {
        if (exclude && exclude(labels[row])) continue;
        const double* g = gallery.row(row);
        double ss = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            const double d = g[j] - q[j];
            ss += d * d;
        }
        hits.push_back({row, std::sqrt(ss)});
    }
    return rank_hits(std::move(hits), k);
}

EvalReport evaluate(const std::vector<std::vector<bool>>& relevance, std::size_t cmc_max_rank) {
    if (relevance.empty())
        fail(ErrorCode::invalid_argument, "evaluate: no queries");
    EvalReport report;
    report.cmc.assign(cmc_max_rank, 0.0);
    for (const auto& rel : relevance) {
        std::size_t num_relevant = std::count(rel.begin(), rel.end(), true);
        if (num_relevant == 0)
            fail(ErrorCode::invalid_argument, "evaluate: query with zero relevant items");
        // CMC: rank of first relevant item
        std::size_t first = rel.size();
        double ap = 0.0;
        std::size_t hits = 0;
        for (std::size_t r = 0; r < rel.size(); ++r) {
            if (!rel[r]) continue;
            if (first == rel.size()) first = r;
            ++hits;
            ap += double(hits) / double(r + 1);  // precision at this rank
        }
        ap /= double(num_relevant);
        report.per_query_ap.push_back(ap);
        for (std::size_t kk = first; kk < cmc_max_rank; ++kk) report.cmc[kk] += 1.0;
    }
    const double nq = double(relevance.size());
    for (double& c : report.cmc) c /= nq;
    report.map = std::accumulate(report.per_query_ap.begin(), report.per_query_ap.end(), 0.0) / nq;
    return report;
}

uint64_t memory_bytes_binary(std::size_t n, uint32_t m) {
    return uint64_t(n) * ((m + 63) / 64) * 8;
}

uint64_t memory_bytes_real32(std::size_t n, uint32_t m) {
    return uint64_t(n) * m * 4;
}

namespace {
using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

BenchReport benchmark_hamming(const HammingIndex& index,
                              const std::vector<BinaryCode>& queries, std::size_t repetitions) {
    if (repetitions < 3)
        fail(ErrorCode::invalid_argument, "benchmark: repetitions must be >= 3");
    const std::size_t nw = index.num_words;
    volatile uint64_t sink = 0;  // keep the scan from being optimized away
    std::vector<double> per_rep;
    double total = 0.0;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        const auto t0 = Clock::now();
        for (const auto& q : queries) {
            uint64_t best = ~uint64_t{0};
            for (std::size_t row = 0; row < index.size(); ++row) {
                const uint64_t* words = index.table.data() + row * nw;
                uint64_t d = 0;
                for (std::size_t w = 0; w < nw; ++w) d += std::popcount(words[w] ^ q.words[w]);
                best = std::min(best, d);
            }
            sink += best;
        }
        const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
        per_rep.push_back(dt / double(queries.size()));
        total += dt;
    }
    (void)sink;
    BenchReport r;
    r.mean_query_seconds = total / double(repetitions * queries.size());
    r.median_query_seconds = median(per_rep);
    r.total_scan_seconds = total;
    r.memory_bytes = memory_bytes_binary(index.size(), index.m);
    r.bits = index.m;
    r.gallery_size = index.size();
    return r;
}

BenchReport benchmark_euclidean(const std::vector<float>& gallery, std::size_t n, uint32_t m,
                                const std::vector<std::vector<float>>& queries,
                                std::size_t repetitions) {
    if (repetitions < 3)
        fail(ErrorCode::invalid_argument, "benchmark: repetitions must be >= 3");
    if (gallery.size() != n * std::size_t(m))
        fail(ErrorCode::invalid_argument, "benchmark: gallery size mismatch");
    volatile float sink = 0;
    std::vector<double> per_rep;
    double total = 0.0;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        const auto t0 = Clock::now();
        for (const auto& q : queries) {
            float best = std::numeric_limits<float>::max();
            for (std::size_t row = 0; row < n; ++row) {
                const float* g = gallery.data() + row * m;
                float ss = 0;
                for (uint32_t j = 0; j < m; ++j) {
                    const float d = g[j] - q[j];
                    ss += d * d;
                }
                best = std::min(best, ss);
            }
            sink += best;
        }
        const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
        per_rep.push_back(dt / double(queries.size()));
        total += dt;
    }
    (void)sink;
    BenchReport r;
    r.mean_query_seconds = total / double(repetitions * queries.size());
    r.median_query_seconds = median(per_rep);
    r.total_scan_seconds = total;
    r.memory_bytes = memory_bytes_real32(n, m);
    r.bits = m;
    r.gallery_size = n;
    return r;
}

void write_eval_csv(const EvalReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) fail(ErrorCode::io, "write_eval_csv: cannot open " + path);
    f << "k,cmc\n";
    for (std::size_t k = 0; k < report.cmc.size(); ++k)
        f << (k + 1) << "," << report.cmc[k] << "\n";
    f << "metric,value\n";
    f << "map," << report.map << "\n";
    f << "num_queries," << report.per_query_ap.size() << "\n";
    if (!f) fail(ErrorCode::io, "write_eval_csv: write failed");
}

void write_bench_csv(const BenchReport& binary, const BenchReport* real,
                     const std::string& path) {
    std::ofstream f(path);
    if (!f) fail(ErrorCode::io, "write_bench_csv: cannot open " + path);
    f << "metric,value\n";
    auto emit = [&f](const std::string& prefix, const BenchReport& r) {
        f << prefix << "mean_query_seconds," << r.mean_query_seconds << "\n";
        f << prefix << "median_query_seconds," << r.median_query_seconds << "\n";
        f << prefix << "total_scan_seconds," << r.total_scan_seconds << "\n";
        f << prefix << "memory_bytes," << r.memory_bytes << "\n";
        f << prefix << "bits," << r.bits << "\n";
        f << prefix << "gallery_size," << r.gallery_size << "\n";
    };
    emit("binary_", binary);
    if (real) emit("real_", *real);
    if (!f) fail(ErrorCode::io, "write_bench_csv: write failed");
}

}  // namespace abc
