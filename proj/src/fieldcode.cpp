#include "cachesim/fieldcode.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

#include "cachesim/error.hpp"

namespace cachesim {

namespace {

std::uint64_t mulmod64(std::uint64_t a, std::uint64_t b, std::uint64_t m) noexcept {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t powmod64(std::uint64_t base, std::uint64_t exp, std::uint64_t m) noexcept {
    std::uint64_t result = 1 % m;
    base %= m;
    while (exp != 0) {
        if (exp & 1U) {
            result = mulmod64(result, base, m);
        }
        base = mulmod64(base, base, m);
        exp >>= 1U;
    }
    return result;
}

} // namespace

bool is_prime(std::uint64_t n) noexcept {
    if (n < 2) {
        return false;
    }
    constexpr std::uint64_t small[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    for (const std::uint64_t p : small) {
        if (n % p == 0) {
            return n == p;
        }
    }
    std::uint64_t d = n - 1;
    unsigned s = 0;
    while ((d & 1U) == 0) {
        d >>= 1U;
        ++s;
    }
    // These witnesses are sufficient for n < 3.3e24.
    for (const std::uint64_t a : small) {
        std::uint64_t x = powmod64(a, d, n);
        if (x == 1 || x == n - 1) {
            continue;
        }
        bool composite = true;
        for (unsigned r = 1; r < s; ++r) {
            x = mulmod64(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) {
            return false;
        }
    }
    return true;
}

PrimeField::PrimeField(std::uint64_t q) : q_(q) {
    if (!is_prime(q)) {
        throw ConfigError("field order q = " + std::to_string(q) + " is not prime");
    }
    if (q > 0xFFFFFFFFULL) {
        throw ConfigError("field order q must be below 2^32");
    }
    symbol_bits_ = static_cast<unsigned>(std::bit_width(q) - 1);
}

Element PrimeField::inv(Element a) const {
    if (a % q_ == 0) {
        throw std::domain_error("field_inv: zero has no inverse");
    }
    return static_cast<Element>(powmod64(a, q_ - 2, q_));
}

ChunkedFile split_file(std::span<const std::uint8_t> payload, std::uint32_t ell, const PrimeField& field,
                       FileId file) {
    if (ell == 0) {
        throw ConfigError("split_file: ell must be at least 1");
    }
    if (payload.empty()) {
        throw ConfigError("split_file: payload must be nonempty");
    }
    const unsigned bits = field.symbol_bits();
    const std::size_t total_bits = payload.size() * 8;
    std::size_t symbols = (total_bits + bits - 1) / bits;
    symbols = (symbols + ell - 1) / ell * ell;

    std::vector<Element> packed(symbols, 0);
    for (std::size_t bit = 0; bit < total_bits; ++bit) {
        if ((payload[bit / 8] >> (bit % 8)) & 1U) {
            packed[bit / bits] |= Element{1} << (bit % bits);
        }
    }

    ChunkedFile out;
    out.file = file;
    out.ell = ell;
    out.original_len = payload.size();
    const std::size_t per_chunk = symbols / ell;
    out.chunks.reserve(ell);
    for (std::uint32_t r = 0; r < ell; ++r) {
        const auto first = packed.begin() + static_cast<std::ptrdiff_t>(r * per_chunk);
        out.chunks.emplace_back(first, first + static_cast<std::ptrdiff_t>(per_chunk));
    }
    return out;
}

CodedChunk encode_chunk_with(const ChunkedFile& file, const PrimeField& field, CoeffVector coeffs) {
    if (coeffs.coeffs.size() != file.ell) {
        throw ConfigError("encode_chunk: coefficient vector length must equal ell");
    }
    std::vector<Element> payload(file.chunk_symbols(), 0);
    for (std::uint32_t r = 0; r < file.ell; ++r) {
        const Element alpha = coeffs.coeffs[r];
        if (alpha == 0) {
            continue;
        }
        const auto& chunk = file.chunks[r];
        for (std::size_t s = 0; s < payload.size(); ++s) {
            payload[s] = field.add(payload[s], field.mul(alpha, chunk[s]));
        }
    }
    return CodedChunk{file.file, std::move(coeffs), std::move(payload)};
}

CodedChunk encode_chunk(const ChunkedFile& file, const PrimeField& field, Rng& rng) {
    CoeffVector coeffs;
    coeffs.coeffs.resize(file.ell);
    for (Element& c : coeffs.coeffs) {
        c = field.random(rng);
    }
    return encode_chunk_with(file, field, std::move(coeffs));
}

RankAccumulator::RankAccumulator(const PrimeField& field, std::uint32_t ell) : field_(&field) { reset(ell); }

void RankAccumulator::reset(std::uint32_t ell) {
    ell_ = ell;
    rank_ = 0;
    rows_.resize(static_cast<std::size_t>(ell) * ell);
    pivots_.resize(ell);
    scratch_.resize(ell);
}

bool RankAccumulator::insert(std::span<const Element> v) {
    if (v.size() != ell_) {
        throw ConfigError("RankAccumulator: vector length must equal ell");
    }
    if (full()) {
        return false;
    }
    const PrimeField& f = *field_;
    std::copy(v.begin(), v.end(), scratch_.begin());
    for (std::uint32_t i = 0; i < rank_; ++i) {
        const Element c = scratch_[pivots_[i]];
        if (c == 0) {
            continue;
        }
        const Element* row = &rows_[static_cast<std::size_t>(i) * ell_];
        for (std::uint32_t k = 0; k < ell_; ++k) {
            if (row[k] != 0) {
                scratch_[k] = f.sub(scratch_[k], f.mul(c, row[k]));
            }
        }
    }
    std::uint32_t pivot = 0;
    while (pivot < ell_ && scratch_[pivot] == 0) {
        ++pivot;
    }
    if (pivot == ell_) {
        return false;
    }
    const Element scale = f.inv(scratch_[pivot]);
    Element* dest = &rows_[static_cast<std::size_t>(rank_) * ell_];
    for (std::uint32_t k = 0; k < ell_; ++k) {
        dest[k] = f.mul(scratch_[k], scale);
    }
    pivots_[rank_] = pivot;
    ++rank_;
    return true;
}

std::size_t rank(std::span<const CoeffVector> vectors, const PrimeField& field) {
    if (vectors.empty()) {
        return 0;
    }
    const auto ell = static_cast<std::uint32_t>(vectors.front().coeffs.size());
    RankAccumulator acc(field, ell);
    for (const CoeffVector& v : vectors) {
        acc.insert(v.coeffs);
    }
    return acc.rank();
}

std::vector<std::uint8_t> decode(std::span<const CodedChunk> chunks, std::uint32_t ell, std::size_t original_len,
                                 const PrimeField& field) {
    if (ell == 0) {
        throw ConfigError("decode: ell must be at least 1");
    }
    // Pick the first ell rows that raise the rank.
    RankAccumulator selector(field, ell);
    std::vector<const CodedChunk*> rows;
    for (const CodedChunk& c : chunks) {
        if (c.coeffs.coeffs.size() != ell) {
            throw ConfigError("decode: coefficient vector length must equal ell");
        }
        if (!c.payload) {
            throw ConfigError("decode: chunk has no payload");
        }
        if (selector.insert(c.coeffs.coeffs)) {
            rows.push_back(&c);
            if (selector.full()) {
                break;
            }
        }
    }
    if (!selector.full()) {
        throw RankDeficientError("decode: " + std::to_string(selector.rank()) + " independent chunks, need " +
                                 std::to_string(ell));
    }
    const std::size_t width = rows.front()->payload->size();
    for (const CodedChunk* c : rows) {
        if (c->payload->size() != width) {
            throw ConfigError("decode: payload lengths differ");
        }
    }

    // Gauss-Jordan on [A | B], A = ell x ell coefficients, B = payloads.
    const std::size_t cols = ell + width;
    std::vector<Element> m(static_cast<std::size_t>(ell) * cols);
    for (std::uint32_t i = 0; i < ell; ++i) {
        Element* row = &m[i * cols];
        std::copy(rows[i]->coeffs.coeffs.begin(), rows[i]->coeffs.coeffs.end(), row);
        std::copy(rows[i]->payload->begin(), rows[i]->payload->end(), row + ell);
    }
    for (std::uint32_t col = 0; col < ell; ++col) {
        std::uint32_t pivot = col;
        while (m[pivot * cols + col] == 0) {
            ++pivot;
        }
        if (pivot != col) {
            std::swap_ranges(m.begin() + static_cast<std::ptrdiff_t>(pivot * cols),
                             m.begin() + static_cast<std::ptrdiff_t>((pivot + 1) * cols),
                             m.begin() + static_cast<std::ptrdiff_t>(col * cols));
        }
        Element* prow = &m[col * cols];
        const Element scale = field.inv(prow[col]);
        for (std::size_t k = 0; k < cols; ++k) {
            prow[k] = field.mul(prow[k], scale);
        }
        for (std::uint32_t i = 0; i < ell; ++i) {
            if (i == col) {
                continue;
            }
            Element* row = &m[i * cols];
            const Element c = row[col];
            if (c == 0) {
                continue;
            }
            for (std::size_t k = 0; k < cols; ++k) {
                row[k] = field.sub(row[k], field.mul(c, prow[k]));
            }
        }
    }

    const unsigned bits = field.symbol_bits();
    std::vector<std::uint8_t> out(original_len, 0);
    const std::size_t total_bits = original_len * 8;
    if (total_bits > static_cast<std::size_t>(ell) * width * bits) {
        throw ConfigError("decode: original length exceeds the decoded symbol capacity");
    }
    for (std::size_t bit = 0; bit < total_bits; ++bit) {
        const std::size_t symbol = bit / bits;
        const std::size_t chunk = symbol / width;
        const Element value = m[chunk * cols + ell + symbol % width];
        if ((value >> (bit % bits)) & 1U) {
            out[bit / 8] |= static_cast<std::uint8_t>(1U << (bit % 8));
        }
    }
    return out;
}

} // namespace cachesim
