#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cachesim/popularity.hpp"
#include "cachesim/rng.hpp"

namespace cachesim {

using Element = std::uint32_t;

// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime(std::uint64_t n) noexcept;

/// Prime field F_q. Elements are stored in 32 bits, so q must be below 2^32.
class PrimeField {
public:
    explicit PrimeField(std::uint64_t q = 65537);

    std::uint64_t order() const noexcept { return q_; }

    Element add(Element a, Element b) const noexcept {
        const std::uint64_t s = std::uint64_t{a} + b;
        return static_cast<Element>(s >= q_ ? s - q_ : s);
    }
    Element sub(Element a, Element b) const noexcept {
        return static_cast<Element>(a >= b ? a - b : std::uint64_t{a} + q_ - b);
    }
    Element neg(Element a) const noexcept { return a == 0 ? 0 : static_cast<Element>(q_ - a); }
    Element mul(Element a, Element b) const noexcept {
        return static_cast<Element>((std::uint64_t{a} * b) % q_);
    }
    // Throws std::domain_error for a == 0.
    Element inv(Element a) const;

    Element random(Rng& rng) const noexcept { return static_cast<Element>(uniform_below(rng, q_)); }

    // Payload bits packed per symbol: floor(log2 q), so every packed value is a
    // valid element. 16 for q = 65537.
    unsigned symbol_bits() const noexcept { return symbol_bits_; }

private:
    std::uint64_t q_;
    unsigned symbol_bits_;
};

inline Element field_add(const PrimeField& f, Element a, Element b) { return f.add(a, b); }
inline Element field_mul(const PrimeField& f, Element a, Element b) { return f.mul(a, b); }
inline Element field_inv(const PrimeField& f, Element a) { return f.inv(a); }

struct CoeffVector {
    std::vector<Element> coeffs;
};

/// A file split into ell equal-length symbol vectors.
struct ChunkedFile {
    FileId file;
    std::uint32_t ell = 1;
    std::size_t original_len = 0;
    std::vector<std::vector<Element>> chunks;

    std::size_t chunk_symbols() const noexcept { return chunks.empty() ? 0 : chunks.front().size(); }
};

struct CodedChunk {
    FileId file;
    CoeffVector coeffs;
    std::optional<std::vector<Element>> payload;
};

// Packs bytes into symbols of field.symbol_bits() bits (LSB first), zero-pads
// so the symbol count is a multiple of ell, and partitions into ell chunks.
ChunkedFile split_file(std::span<const std::uint8_t> payload, std::uint32_t ell, const PrimeField& field,
                       FileId file = FileId{1});

// One use of the random linear operator: fresh iid uniform coefficients and
// payload = sum_r alpha_r * chunk_r.
CodedChunk encode_chunk(const ChunkedFile& file, const PrimeField& field, Rng& rng);

// Same combination with caller-chosen coefficients.
CodedChunk encode_chunk_with(const ChunkedFile& file, const PrimeField& field, CoeffVector coeffs);

std::size_t rank(std::span<const CoeffVector> vectors, const PrimeField& field);

// Recovers the original bytes from at least ell chunks of one file. Throws
// RankDeficientError when the coefficient rows do not span F_q^ell.
std::vector<std::uint8_t> decode(std::span<const CodedChunk> chunks, std::uint32_t ell, std::size_t original_len,
                                 const PrimeField& field);

/// Incremental row reduction for rank tests on a stream of coefficient
/// vectors. Keeps a semi-echelon basis with unit pivots; insert() is
/// O(ell * rank). Buffers are reused across reset() calls.
class RankAccumulator {
public:
    explicit RankAccumulator(const PrimeField& field, std::uint32_t ell = 0);

    void reset(std::uint32_t ell);

    // Returns true when v increased the rank.
    bool insert(std::span<const Element> v);

    std::uint32_t rank() const noexcept { return rank_; }
    std::uint32_t dimension() const noexcept { return ell_; }
    bool full() const noexcept { return rank_ == ell_; }

private:
    const PrimeField* field_;
    std::uint32_t ell_ = 0;
    std::uint32_t rank_ = 0;
    std::vector<Element> rows_;
    std::vector<std::uint32_t> pivots_;
    std::vector<Element> scratch_;
};

} // namespace cachesim
