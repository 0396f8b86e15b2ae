#pragma once

// Code-space math: Bernoulli sampling, normalization, binarization, and
// Hamming distance over bit-packed codes.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "abc/common.hpp"

namespace abc {

// m-bit binary code packed into 64-bit words, little-endian bit order
// within each word. Unused trailing bits of the last word are zero.
struct BinaryCode {
    uint32_t length = 0;  // m
    std::vector<uint64_t> words;

    BinaryCode() = default;
    explicit BinaryCode(uint32_t m)
        : length(m), words((m + 63) / 64, 0) {}

    bool get(uint32_t j) const { return (words[j >> 6] >> (j & 63)) & 1u; }
    void set(uint32_t j, bool v) {
        if (v) words[j >> 6] |= (uint64_t{1} << (j & 63));
        else   words[j >> 6] &= ~(uint64_t{1} << (j & 63));
    }

    std::vector<uint8_t> unpack() const;
    static BinaryCode pack(const std::vector<uint8_t>& bits);

    bool operator==(const BinaryCode& o) const = default;
};

struct BinaryCodeBatch {
    uint32_t length = 0;                 // m
    std::vector<BinaryCode> codes;

    std::size_t size() const { return codes.size(); }
};

enum class LambdaMode {
    norm_matching,  // lambda = sqrt(m * p)
    paper_literal,  // lambda = sqrt(m * p^2)
};

struct CodePrior {
    uint32_t m = 0;
    double p = 0.5;
    LambdaMode lambda_mode = LambdaMode::norm_matching;

    CodePrior(uint32_t m_, double p_, LambdaMode mode);
};

BinaryCodeBatch sample_codes(const CodePrior& prior, std::size_t count, uint64_t rng_seed);

double normalization_factor(const CodePrior& prior);

RealVector normalize_uniform(const BinaryCode& code, double lambda);

RealVector normalize_l2(const RealVector& v);

BinaryCode binarize(const RealVector& z, double lambda);

uint64_t hamming(const BinaryCode& a, const BinaryCode& b);

// "ABCB" file format: magic, u32 version=1, u64 n, u32 m, then n records
// of ceil(m/64) little-endian 64-bit words.
void save_codes(const BinaryCodeBatch& batch, const std::string& path);
BinaryCodeBatch load_codes(const std::string& path);
void write_codes(const BinaryCodeBatch& batch, std::ostream& out);
BinaryCodeBatch read_codes(std::istream& in);

}  // namespace abc
