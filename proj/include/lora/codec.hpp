#pragma once

/* Bit-domain transmit/receive chain pieces: whitening, Hamming family
 * (4,5)/(4,6)/(4,7)/(4,8), the diagonal interleaver, and Gray mapping.
 *
 * Nibble layout: a data nibble is d1 d2 d3 d4 with d1 the most significant
 * bit.  Codewords are packed MSB-first as [d1 d2 d3 d4 p1 p2 p3 p4] truncated
 * to the rate's length n (p4 is the extended overall-parity bit of the (4,8)
 * code; the (4,5) rate carries a single even-parity bit instead).  Parity
 * equations: p1 = d1^d2^d4, p2 = d1^d3^d4, p3 = d2^d3^d4.  Bit ordering may
 * differ from commercial transceivers; interoperability is a non-goal and
 * everything downstream is validated structurally (round trips, minimum
 * distances, correction/detection exhaustives).
 *
 * The whitening sequence is an external data table: one row of 8 bits per
 * data nibble, laid out in the codeword domain of the (4,8) rate.  Data-domain
 * whitening XORs the 4 leftmost columns into the nibble stream; because every
 * rate is linear, whitening data first and encoding afterwards equals
 * encoding first and XORing the (column-punctured) table row into the
 * codeword, which is the property the tests pin down.
 */

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lora/errors.hpp"

namespace lora {

enum class CodingRate : std::uint8_t { cr45 = 5, cr46 = 6, cr47 = 7, cr48 = 8 };

constexpr int codeword_bits(CodingRate cr) { return static_cast<int>(cr); }
constexpr int data_bits_per_codeword = 4;

inline const char* to_string(CodingRate cr) {
    switch (cr) {
        case CodingRate::cr45: return "4/5";
        case CodingRate::cr46: return "4/6";
        case CodingRate::cr47: return "4/7";
        default: return "4/8";
    }
}

enum class DecodeStatus : std::uint8_t { clean, corrected, detected_uncorrectable };

/* Bit container, values 0/1, nibble-major (bit 4i is the MSB of nibble i). */
struct BitBlock {
    std::vector<std::uint8_t> bits;

    std::size_t size() const { return bits.size(); }
    std::size_t nibble_count() const { return bits.size() / 4; }
    std::uint8_t nibble(std::size_t i) const {
        return static_cast<std::uint8_t>(bits[4 * i] << 3 | bits[4 * i + 1] << 2 |
                                         bits[4 * i + 2] << 1 | bits[4 * i + 3]);
    }
    void push_nibble(std::uint8_t v) {
        bits.push_back((v >> 3) & 1);
        bits.push_back((v >> 2) & 1);
        bits.push_back((v >> 1) & 1);
        bits.push_back(v & 1);
    }
};

/* Whitening table: R rows of 8 codeword-domain bits (row-major, MSB-first). */
struct WhiteningSequence {
    std::vector<std::uint8_t> table_bits; // 8 * rows entries of 0/1

    std::size_t rows() const { return table_bits.size() / 8; }
    std::size_t data_bit_count() const { return rows() * 4; }
    /* Data-domain bit i: column (i mod 4) of row (i div 4). */
    std::uint8_t data_bit(std::size_t i) const {
        return table_bits[8 * (i / 4) + (i % 4)];
    }
    std::uint8_t data_nibble(std::size_t row) const {
        const std::size_t b = 8 * row;
        return static_cast<std::uint8_t>(table_bits[b] << 3 | table_bits[b + 1] << 2 |
                                         table_bits[b + 2] << 1 | table_bits[b + 3]);
    }
};

/* Whitening-table row viewed in the codeword domain of a given rate: the
 * (4,7) and (4,6) views drop the rightmost one / two columns of the (4,8)
 * row; the (4,5) view keeps the data columns and appends the even parity of
 * the whitened-data nibble, i.e. of the row's data columns. */
inline std::uint8_t whitening_codeword_row(const WhiteningSequence& seq,
                                           std::size_t row, CodingRate cr) {
    if (row >= seq.rows()) throw ConfigError("whitening table row out of range");
    const std::uint8_t* b = &seq.table_bits[8 * row];
    const int n = codeword_bits(cr);
    if (cr == CodingRate::cr45) {
        const std::uint8_t parity =
            static_cast<std::uint8_t>(b[0] ^ b[1] ^ b[2] ^ b[3]);
        return static_cast<std::uint8_t>(b[0] << 4 | b[1] << 3 | b[2] << 2 |
                                         b[3] << 1 | parity);
    }
    std::uint8_t cw = 0;
    for (int i = 0; i < n; ++i)
        cw = static_cast<std::uint8_t>(cw << 1 | b[i]);
    return cw;
}

/* XOR the data-domain whitening bits into a bit block.  Involution. */
inline BitBlock whiten(const BitBlock& data, const WhiteningSequence& seq) {
    if (seq.data_bit_count() < data.size())
        throw ConfigError("whitening sequence shorter than data");
    BitBlock out = data;
    for (std::size_t i = 0; i < out.bits.size(); ++i)
        out.bits[i] = static_cast<std::uint8_t>(out.bits[i] ^ seq.data_bit(i));
    return out;
}

namespace detail {

inline std::uint8_t encode_nibble(std::uint8_t nib, CodingRate cr) {
    const std::uint8_t d1 = (nib >> 3) & 1, d2 = (nib >> 2) & 1,
                       d3 = (nib >> 1) & 1, d4 = nib & 1;
    if (cr == CodingRate::cr45) {
        const std::uint8_t pe = static_cast<std::uint8_t>(d1 ^ d2 ^ d3 ^ d4);
        return static_cast<std::uint8_t>(nib << 1 | pe);
    }
    const std::uint8_t p1 = static_cast<std::uint8_t>(d1 ^ d2 ^ d4);
    const std::uint8_t p2 = static_cast<std::uint8_t>(d1 ^ d3 ^ d4);
    const std::uint8_t p3 = static_cast<std::uint8_t>(d2 ^ d3 ^ d4);
    switch (cr) {
        case CodingRate::cr46:
            return static_cast<std::uint8_t>(nib << 2 | p1 << 1 | p2);
        case CodingRate::cr47:
            return static_cast<std::uint8_t>(nib << 3 | p1 << 2 | p2 << 1 | p3);
        default: { // cr48: extended bit = overall parity of the (4,7) word
            const std::uint8_t cw7 =
                static_cast<std::uint8_t>(nib << 3 | p1 << 2 | p2 << 1 | p3);
            std::uint8_t q = cw7;
            q ^= static_cast<std::uint8_t>(q >> 4);
            q ^= static_cast<std::uint8_t>(q >> 2);
            q ^= static_cast<std::uint8_t>(q >> 1);
            return static_cast<std::uint8_t>(cw7 << 1 | (q & 1));
        }
    }
}

} // namespace detail

/* 16-row encode table for a rate. */
inline std::array<std::uint8_t, 16> hamming_table(CodingRate cr) {
    std::array<std::uint8_t, 16> t{};
    for (std::uint8_t nib = 0; nib < 16; ++nib)
        t[nib] = detail::encode_nibble(nib, cr);
    return t;
}

inline std::uint8_t hamming_encode(std::uint8_t nibble, CodingRate cr) {
    if (nibble > 15) throw ConfigError("nibble out of range");
    return detail::encode_nibble(nibble, cr);
}

struct DecodedNibble {
    std::uint8_t nibble;
    DecodeStatus status;
};

/* Decode one received codeword.  (4,7) corrects single errors; (4,8)
 * corrects single and detects double errors; (4,6)/(4,5) detect only. */
inline DecodedNibble hamming_decode(std::uint8_t cw, CodingRate cr) {
    const int n = codeword_bits(cr);
    if (cw >= (1u << n)) throw ConfigError("codeword out of range");
    auto bit = [&](int i) { return static_cast<std::uint8_t>((cw >> (n - 1 - i)) & 1); };
    std::uint8_t nib = static_cast<std::uint8_t>(bit(0) << 3 | bit(1) << 2 |
                                                 bit(2) << 1 | bit(3));
    if (cr == CodingRate::cr45) {
        std::uint8_t q = 0;
        for (int i = 0; i < 5; ++i) q ^= bit(i);
        return {nib, q ? DecodeStatus::detected_uncorrectable : DecodeStatus::clean};
    }
    const std::uint8_t d1 = bit(0), d2 = bit(1), d3 = bit(2), d4 = bit(3);
    const std::uint8_t s1 = static_cast<std::uint8_t>(d1 ^ d2 ^ d4 ^ bit(4));
    if (cr == CodingRate::cr46) {
        const std::uint8_t s2 = static_cast<std::uint8_t>(d1 ^ d3 ^ d4 ^ bit(5));
        return {nib, (s1 | s2) ? DecodeStatus::detected_uncorrectable
                               : DecodeStatus::clean};
    }
    const std::uint8_t s2 = static_cast<std::uint8_t>(d1 ^ d3 ^ d4 ^ bit(5));
    const std::uint8_t s3 = static_cast<std::uint8_t>(d2 ^ d3 ^ d4 ^ bit(6));
    const std::uint8_t syn = static_cast<std::uint8_t>(s1 << 2 | s2 << 1 | s3);
    // syndrome -> flipped bit position (0-based from d1); 7 marks "none"
    static constexpr std::uint8_t pos_of_syn[8] = {7, 6, 5, 2, 4, 1, 0, 3};
    auto correct = [&](std::uint8_t syndrome) {
        const std::uint8_t pos = pos_of_syn[syndrome];
        if (pos < 4) nib = static_cast<std::uint8_t>(nib ^ (8u >> pos));
    };
    if (cr == CodingRate::cr47) {
        if (syn == 0) return {nib, DecodeStatus::clean};
        correct(syn);
        return {nib, DecodeStatus::corrected};
    }
    // cr48: overall parity distinguishes single (odd) from double (even)
    std::uint8_t q = 0;
    for (int i = 0; i < 8; ++i) q ^= bit(i);
    if (syn == 0 && q == 0) return {nib, DecodeStatus::clean};
    if (q == 1) { // single error somewhere (possibly the extended bit itself)
        correct(syn);
        return {nib, DecodeStatus::corrected};
    }
    return {nib, DecodeStatus::detected_uncorrectable};
}

/* Diagonal interleaver: SF codewords of n bits -> n symbols of SF bits.
 * Bit j (MSB-first) of output symbol i is bit i of codeword (i+j) mod SF. */
inline std::vector<std::uint32_t> interleave(const std::vector<std::uint8_t>& codewords,
                                             CodingRate cr, int sf) {
    if (static_cast<int>(codewords.size()) != sf)
        throw ConfigError("interleave expects exactly SF codewords");
    const int n = codeword_bits(cr);
    std::vector<std::uint32_t> symbols(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        std::uint32_t w = 0;
        for (int j = 0; j < sf; ++j) {
            const std::uint8_t cw = codewords[static_cast<std::size_t>((i + j) % sf)];
            const std::uint32_t b = (cw >> (n - 1 - i)) & 1u;
            w = w << 1 | b;
        }
        symbols[static_cast<std::size_t>(i)] = w;
    }
    return symbols;
}

inline std::vector<std::uint8_t> deinterleave(const std::vector<std::uint32_t>& symbols,
                                              CodingRate cr, int sf) {
    const int n = codeword_bits(cr);
    if (static_cast<int>(symbols.size()) != n)
        throw ConfigError("deinterleave expects exactly n symbols");
    std::vector<std::uint8_t> codewords(static_cast<std::size_t>(sf), 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < sf; ++j) {
            const std::uint32_t b = (symbols[static_cast<std::size_t>(i)] >> (sf - 1 - j)) & 1u;
            codewords[static_cast<std::size_t>((i + j) % sf)] |=
                static_cast<std::uint8_t>(b << (n - 1 - i));
        }
    return codewords;
}

/* Receive-side Gray mapping and its transmit-side inverse. */
inline std::uint32_t gray_demap(std::uint32_t s) { return s ^ (s >> 1); }

inline std::uint32_t gray_map(std::uint32_t g) {
    std::uint32_t b = g;
    b ^= b >> 1;
    b ^= b >> 2;
    b ^= b >> 4;
    b ^= b >> 8;
    b ^= b >> 16;
    return b;
}

} // namespace lora
