#pragma once

/* Packet assembly and payload recovery.
 *
 * Frame layout: N_pr upchirps | 2 network-identifier symbols | 2.25
 * downchirps | payload symbols.  Payload bytes (with an optional CRC16
 * appended) are serialized MSB-first into nibbles, whitened, zero-padded to a
 * whole number of interleaver blocks, Hamming-encoded, diagonally
 * interleaved, Gray-mapped and modulated.  Implicit-header operation only:
 * the receiver knows payload length, coding rate and CRC presence out of
 * band.
 */

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lora/chirp.hpp"
#include "lora/codec.hpp"
#include "lora/errors.hpp"

namespace lora {

struct CrcSpec {
    std::uint16_t poly = 0x1021;
    std::uint16_t init = 0x0000;
    bool reflect = false; // reflect input bytes and the final value
    std::uint16_t xor_out = 0x0000;
};

namespace detail {

inline std::uint8_t reverse8(std::uint8_t v) {
    v = static_cast<std::uint8_t>((v & 0xF0) >> 4 | (v & 0x0F) << 4);
    v = static_cast<std::uint8_t>((v & 0xCC) >> 2 | (v & 0x33) << 2);
    return static_cast<std::uint8_t>((v & 0xAA) >> 1 | (v & 0x55) << 1);
}

inline std::uint16_t reverse16(std::uint16_t v) {
    return static_cast<std::uint16_t>(reverse8(static_cast<std::uint8_t>(v >> 8)) |
                                      reverse8(static_cast<std::uint8_t>(v)) << 8);
}

} // namespace detail

/* Bitwise shift-register CRC16 over the payload bytes, MSB-first. */
inline std::uint16_t crc16(const std::vector<std::uint8_t>& payload,
                           const CrcSpec& spec = {}) {
    if (payload.size() > 255) throw FrameError("payload exceeds 255 bytes");
    std::uint16_t crc = spec.init;
    for (std::uint8_t byte : payload) {
        if (spec.reflect) byte = detail::reverse8(byte);
        crc ^= static_cast<std::uint16_t>(byte) << 8;
        for (int b = 0; b < 8; ++b)
            crc = (crc & 0x8000) ? static_cast<std::uint16_t>(crc << 1 ^ spec.poly)
                                 : static_cast<std::uint16_t>(crc << 1);
    }
    if (spec.reflect) crc = detail::reverse16(crc);
    return crc ^ spec.xor_out;
}

enum class NetidMode : std::uint8_t { repeated, paired };

struct FrameConfig {
    std::uint32_t preamble_len = 8;     // N_pr in 6..65535
    symbol_t sync_word = 24;            // netid symbol x
    NetidMode netid_mode = NetidMode::repeated;
    CodingRate cr = CodingRate::cr48;
    bool has_crc = true;
    CrcSpec crc{};
    std::vector<std::uint8_t> payload;  // <= 255 bytes
};

inline void validate_frame_config(const FrameConfig& cfg, const ChirpParams& p) {
    if (cfg.preamble_len < 6 || cfg.preamble_len > 65535)
        throw ConfigError("preamble length must be in 6..65535");
    if (cfg.sync_word >= p.n) throw ConfigError("sync word out of range");
    if (cfg.payload.size() > 255) throw FrameError("payload exceeds 255 bytes");
}

/* Configuration smells worth surfacing without refusing to run. */
inline std::vector<std::string> lint_frame_config(const FrameConfig& cfg,
                                                  const ChirpParams& p) {
    std::vector<std::string> warnings;
    const symbol_t x = cfg.sync_word;
    const std::uint32_t d0 = std::min(x % p.n, (p.n - x) % p.n);
    if (d0 <= 2)
        warnings.push_back("sync word within distance 2 of the preamble value 0; "
                           "preamble scanning may absorb the network identifier");
    if (cfg.netid_mode == NetidMode::paired) {
        const symbol_t x2 = (p.n - x) % p.n;
        const std::uint32_t gap = std::min((x2 - x) % p.n, (x - x2) % p.n);
        if (gap < 3)
            warnings.push_back("paired network identifiers closer than distance 3");
    }
    return warnings;
}

inline constexpr symbol_t frame_upchirp_value = 0;

enum class SymbolRole : std::uint8_t {
    preamble, netid, downchirp, quarter_downchirp, payload
};

struct PlannedSymbol {
    SymbolRole role;
    symbol_t value; // meaningful for preamble/netid/payload
};

struct FramePlan {
    std::vector<PlannedSymbol> symbols;
    std::size_t n_payload_symbols = 0;
    std::size_t total_samples = 0; // (N_pr + 2 + 2.25) N + n_payload N
};

namespace detail {

inline std::vector<std::uint8_t> payload_with_crc(const FrameConfig& cfg) {
    std::vector<std::uint8_t> bytes = cfg.payload;
    if (cfg.has_crc) {
        const std::uint16_t c = crc16(cfg.payload, cfg.crc);
        bytes.push_back(static_cast<std::uint8_t>(c >> 8));
        bytes.push_back(static_cast<std::uint8_t>(c & 0xFF));
    }
    return bytes;
}

inline BitBlock bytes_to_bits(const std::vector<std::uint8_t>& bytes) {
    BitBlock bb;
    bb.bits.reserve(bytes.size() * 8);
    for (std::uint8_t v : bytes)
        for (int b = 7; b >= 0; --b)
            bb.bits.push_back(static_cast<std::uint8_t>((v >> b) & 1));
    return bb;
}

inline std::vector<std::uint8_t> bits_to_bytes(const BitBlock& bb) {
    std::vector<std::uint8_t> bytes(bb.size() / 8, 0);
    for (std::size_t i = 0; i < bytes.size() * 8; ++i)
        bytes[i / 8] = static_cast<std::uint8_t>(bytes[i / 8] << 1 | bb.bits[i]);
    return bytes;
}

} // namespace detail

inline std::size_t n_payload_nibbles(const FrameConfig& cfg) {
    return 2 * (cfg.payload.size() + (cfg.has_crc ? 2 : 0));
}

inline std::size_t n_payload_symbols(const FrameConfig& cfg, const ChirpParams& p) {
    const std::size_t nib = n_payload_nibbles(cfg);
    const std::size_t sf = static_cast<std::size_t>(p.sf);
    const std::size_t blocks = (nib + sf - 1) / sf;
    return blocks * static_cast<std::size_t>(codeword_bits(cfg.cr));
}

/* Payload symbol values: whiten -> encode -> interleave -> gray_map.
 * Padding nibbles (zeros) are appended after whitening and discarded by the
 * receiver using the known payload length. */
inline std::vector<symbol_t> build_payload_symbols(const FrameConfig& cfg,
                                                   const ChirpParams& p,
                                                   const WhiteningSequence& seq) {
    validate_frame_config(cfg, p);
    const BitBlock bits = detail::bytes_to_bits(detail::payload_with_crc(cfg));
    const BitBlock white = whiten(bits, seq);
    std::vector<std::uint8_t> nibbles(white.nibble_count());
    for (std::size_t i = 0; i < nibbles.size(); ++i) nibbles[i] = white.nibble(i);
    const std::size_t sf = static_cast<std::size_t>(p.sf);
    while (nibbles.size() % sf != 0) nibbles.push_back(0);
    std::vector<symbol_t> symbols;
    symbols.reserve(n_payload_symbols(cfg, p));
    for (std::size_t blk = 0; blk < nibbles.size(); blk += sf) {
        std::vector<std::uint8_t> codewords(sf);
        for (std::size_t i = 0; i < sf; ++i)
            codewords[i] = hamming_encode(nibbles[blk + i], cfg.cr);
        for (std::uint32_t w : interleave(codewords, cfg.cr, p.sf))
            symbols.push_back(static_cast<symbol_t>(gray_map(w)));
    }
    return symbols;
}

/* The two network-identifier symbols that follow the preamble. */
inline std::array<symbol_t, 2> netid_symbols(const FrameConfig& cfg,
                                             const ChirpParams& p) {
    const symbol_t x2 = cfg.netid_mode == NetidMode::repeated
                            ? cfg.sync_word
                            : static_cast<symbol_t>((p.n - cfg.sync_word) % p.n);
    return {cfg.sync_word, x2};
}

inline FramePlan make_frame_plan(const FrameConfig& cfg, const ChirpParams& p,
                                 const std::vector<symbol_t>& payload_symbols) {
    FramePlan plan;
    for (std::uint32_t i = 0; i < cfg.preamble_len; ++i)
        plan.symbols.push_back({SymbolRole::preamble, frame_upchirp_value});
    const auto nid = netid_symbols(cfg, p);
    plan.symbols.push_back({SymbolRole::netid, nid[0]});
    plan.symbols.push_back({SymbolRole::netid, nid[1]});
    plan.symbols.push_back({SymbolRole::downchirp, 0});
    plan.symbols.push_back({SymbolRole::downchirp, 0});
    plan.symbols.push_back({SymbolRole::quarter_downchirp, 0});
    for (symbol_t s : payload_symbols) plan.symbols.push_back({SymbolRole::payload, s});
    plan.n_payload_symbols = payload_symbols.size();
    plan.total_samples = (static_cast<std::size_t>(cfg.preamble_len) + 2 + 2) * p.n +
                         p.n / 4 + payload_symbols.size() * p.n;
    return plan;
}

/* Baseband samples for arbitrary payload symbol values (also used by the
 * harness's uncoded mode, which maps bits to symbols without the codec). */
inline IqBuffer assemble_frame_iq(const FrameConfig& cfg, const ChirpParams& p,
                                  const std::vector<symbol_t>& payload_symbols) {
    validate_frame_config(cfg, p);
    const FramePlan plan = make_frame_plan(cfg, p, payload_symbols);
    const IqBuffer down = reference_downchirp(p);
    IqBuffer out;
    out.samples.reserve(plan.total_samples);
    for (const PlannedSymbol& ps : plan.symbols) {
        switch (ps.role) {
            case SymbolRole::downchirp:
                out.samples.insert(out.samples.end(), down.samples.begin(),
                                   down.samples.end());
                break;
            case SymbolRole::quarter_downchirp:
                out.samples.insert(out.samples.end(), down.samples.begin(),
                                   down.samples.begin() + p.n / 4);
                break;
            default: {
                const IqBuffer sym = modulate_symbol(ps.value, p);
                out.samples.insert(out.samples.end(), sym.samples.begin(),
                                   sym.samples.end());
            }
        }
    }
    return out;
}

inline IqBuffer build_frame(const FrameConfig& cfg, const ChirpParams& p,
                            const WhiteningSequence& seq) {
    return assemble_frame_iq(cfg, p, build_payload_symbols(cfg, p, seq));
}

struct DecodeDiagnostics {
    std::size_t corrected = 0;
    std::size_t detected_uncorrectable = 0;
};

struct DecodedPayload {
    std::vector<std::uint8_t> payload;
    bool crc_ok = false;
    DecodeDiagnostics diagnostics;
};

/* gray_demap -> deinterleave -> hamming_decode -> dewhiten -> CRC check.
 * crc_ok is true when the recomputed CRC matches (or, without CRC, when
 * decoding completes). */
inline DecodedPayload decode_payload_symbols(const std::vector<symbol_t>& symbols,
                                             const FrameConfig& cfg,
                                             const ChirpParams& p,
                                             const WhiteningSequence& seq) {
    validate_frame_config(cfg, p);
    if (symbols.size() != n_payload_symbols(cfg, p))
        throw FrameError("payload symbol count inconsistent with config");
    const int n = codeword_bits(cfg.cr);
    const std::size_t sf = static_cast<std::size_t>(p.sf);
    DecodedPayload res;
    std::vector<std::uint8_t> nibbles;
    nibbles.reserve(symbols.size() / static_cast<std::size_t>(n) * sf);
    for (std::size_t blk = 0; blk < symbols.size(); blk += static_cast<std::size_t>(n)) {
        std::vector<std::uint32_t> words(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            words[static_cast<std::size_t>(i)] =
                gray_demap(symbols[blk + static_cast<std::size_t>(i)]);
        for (std::uint8_t cw : deinterleave(words, cfg.cr, p.sf)) {
            const DecodedNibble dn = hamming_decode(cw, cfg.cr);
            if (dn.status == DecodeStatus::corrected) ++res.diagnostics.corrected;
            if (dn.status == DecodeStatus::detected_uncorrectable)
                ++res.diagnostics.detected_uncorrectable;
            nibbles.push_back(dn.nibble);
        }
    }
    BitBlock white;
    const std::size_t keep = n_payload_nibbles(cfg); // drop padding
    for (std::size_t i = 0; i < keep; ++i) white.push_nibble(nibbles[i]);
    const BitBlock bits = whiten(white, seq);
    std::vector<std::uint8_t> bytes = detail::bits_to_bytes(bits);
    if (cfg.has_crc) {
        const std::uint16_t rx_crc =
            static_cast<std::uint16_t>(bytes[bytes.size() - 2] << 8 | bytes.back());
        bytes.resize(bytes.size() - 2);
        res.crc_ok = crc16(bytes, cfg.crc) == rx_crc;
    } else {
        res.crc_ok = true;
    }
    res.payload = std::move(bytes);
    return res;
}

} // namespace lora
