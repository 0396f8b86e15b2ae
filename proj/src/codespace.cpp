#include "abc/codespace.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "abc/io_util.hpp"

namespace abc {

std::vector<uint8_t> BinaryCode::unpack() const {
    std::vector<uint8_t> bits(length);
    for (uint32_t j = 0; j < length; ++j) bits[j] = get(j) ? 1 : 0;
    return bits;
}

BinaryCode BinaryCode::pack(const std::vector<uint8_t>& bits) {
    BinaryCode c(static_cast<uint32_t>(bits.size()));
    for (uint32_t j = 0; j < c.length; ++j)
        if (bits[j]) c.set(j, true);
    return c;
}

CodePrior::CodePrior(uint32_t m_, double p_, LambdaMode mode)
    : m(m_), p(p_), lambda_mode(mode) {
    if (m < 1) fail(ErrorCode::invalid_argument, "CodePrior: m must be >= 1");
    if (!(p >= 0.0 && p <= 1.0))
        fail(ErrorCode::invalid_argument, "CodePrior: p must be in [0,1]");
}

BinaryCodeBatch sample_codes(const CodePrior& prior, std::size_t count, uint64_t rng_seed) {
    if (count < 1) fail(ErrorCode::invalid_argument, "sample_codes: count must be >= 1");
    std::mt19937_64 rng(rng_seed);
    std::bernoulli_distribution bit(prior.p);
    BinaryCodeBatch batch;
    batch.length = prior.m;
    batch.codes.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        BinaryCode c(prior.m);
        for (uint32_t j = 0; j < prior.m; ++j)
            if (bit(rng)) c.set(j, true);
        batch.codes.push_back(std::move(c));
    }
    return batch;
}

double normalization_factor(const CodePrior& prior) {
    if (prior.p == 0.0)
        fail(ErrorCode::invalid_argument, "normalization_factor: degenerate prior (p = 0)");
    switch (prior.lambda_mode) {
        case LambdaMode::paper_literal:
            return std::sqrt(prior.m * prior.p * prior.p);
        case LambdaMode::norm_matching:
            return std::sqrt(prior.m * prior.p);
    }
    fail(ErrorCode::invalid_argument, "normalization_factor: bad lambda mode");
}

RealVector normalize_uniform(const BinaryCode& code, double lambda) {
    if (!(lambda > 0.0))
        fail(ErrorCode::invalid_argument, "normalize_uniform: lambda must be positive");
    RealVector v(code.length);
    const double inv = 1.0 / lambda;
    for (uint32_t j = 0; j < code.length; ++j)
        v[j] = code.get(j) ? inv : 0.0;
    return v;
}

RealVector normalize_l2(const RealVector& v) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    const double norm = std::sqrt(ss);
    if (!(norm > 1e-12))
        fail(ErrorCode::numeric, "normalize_l2: zero vector");
    RealVector out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j] / norm;
    return out;
}

BinaryCode binarize(const RealVector& z, double lambda) {
    if (!(lambda > 0.0))
        fail(ErrorCode::invalid_argument, "binarize: lambda must be positive");
    const double threshold = 1.0 / (2.0 * lambda);
    BinaryCode c(static_cast<uint32_t>(z.size()));
    for (uint32_t j = 0; j < c.length; ++j)
        if (z[j] > threshold) c.set(j, true);  // boundary z_j == threshold maps to 0
    return c;
}

uint64_t hamming(const BinaryCode& a, const BinaryCode& b) {
    if (a.length != b.length)
        fail(ErrorCode::invalid_argument, "hamming: code length mismatch");
    uint64_t d = 0;
    for (std::size_t w = 0; w < a.words.size(); ++w)
        d += std::popcount(a.words[w] ^ b.words[w]);
    return d;
}

static constexpr char kCodesMagic[4] = {'A', 'B', 'C', 'B'};

void write_codes(const BinaryCodeBatch& batch, std::ostream& out) {
    out.write(kCodesMagic, 4);
    io::write_u32(out, 1);
    io::write_u64(out, batch.codes.size());
    io::write_u32(out, batch.length);
    for (const auto& c : batch.codes)
        for (uint64_t w : c.words) io::write_u64(out, w);
    if (!out) fail(ErrorCode::io, "write_codes: stream write failed");
}

BinaryCodeBatch read_codes(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCodesMagic, 4) != 0)
        fail(ErrorCode::format, "read_codes: bad magic (expected ABCB)");
    if (io::read_u32(in) != 1) fail(ErrorCode::format, "read_codes: unsupported version");
    const uint64_t n = io::read_u64(in);
    const uint32_t m = io::read_u32(in);
    if (m < 1) fail(ErrorCode::format, "read_codes: m must be >= 1");
    BinaryCodeBatch batch;
    batch.length = m;
    batch.codes.reserve(n);
    const std::size_t nwords = (m + 63) / 64;
    for (uint64_t i = 0; i < n; ++i) {
        BinaryCode c(m);
        for (std::size_t w = 0; w < nwords; ++w) c.words[w] = io::read_u64(in);
        batch.codes.push_back(std::move(c));
    }
    if (!in) fail(ErrorCode::format, "read_codes: truncated file");
    return batch;
}

void save_codes(const BinaryCodeBatch& batch, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io, "save_codes: cannot open " + path);
    write_codes(batch, f);
}

BinaryCodeBatch load_codes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io, "load_codes: cannot open " + path);
    return read_codes(f);
}

}  // namespace abc
