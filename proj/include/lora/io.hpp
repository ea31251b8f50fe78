#pragma once

/* File formats.
 *
 * IQ capture: raw interleaved little-endian float32 pairs (I then Q), no
 * header ("cf32").  Each capture is accompanied by a structured-text sidecar
 * (<iq path> + ".meta") of key=value lines recording format, sf,
 * bandwidth_hz and sample_rate_hz, so a capture is self-describing.
 *
 * Whitening table: plain text, one line of '0'/'1' characters, row-major
 * MSB-first, 8 codeword-domain bits per row.  The default table is the
 * PN9 sequence (x^9 + x^5 + 1, all-ones seed).
 *
 * Captures taken at an integer multiple of the chip rate are reduced to the
 * canonical rate by stride decimation before synchronization.
 */

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lora/chirp.hpp"
#include "lora/codec.hpp"
#include "lora/errors.hpp"

namespace lora {

/* ----------------------------------------------------------------- cf32 */

inline void write_cf32(const std::string& path, const std::vector<cplx>& iq) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    std::vector<float> raw(iq.size() * 2);
    for (std::size_t i = 0; i < iq.size(); ++i) {
        raw[2 * i] = static_cast<float>(iq[i].real());
        raw[2 * i + 1] = static_cast<float>(iq[i].imag());
    }
    f.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!f) throw IoError("short write: " + path);
}

inline std::vector<cplx> read_cf32(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw IoError("cannot open for reading: " + path);
    const std::streamoff bytes = f.tellg();
    if (bytes < 0 || bytes % (2 * sizeof(float)) != 0)
        throw IoError("file size is not a whole number of complex float32 samples: " + path);
    f.seekg(0);
    std::vector<float> raw(static_cast<std::size_t>(bytes) / sizeof(float));
    f.read(reinterpret_cast<char*>(raw.data()), bytes);
    if (!f) throw IoError("short read: " + path);
    std::vector<cplx> iq(raw.size() / 2);
    for (std::size_t i = 0; i < iq.size(); ++i)
        iq[i] = cplx{static_cast<double>(raw[2 * i]),
                     static_cast<double>(raw[2 * i + 1])};
    return iq;
}

/* -------------------------------------------------------------- sidecar */

struct SidecarInfo {
    std::string format = "cf32";
    int sf = 7;
    double bandwidth_hz = 125e3;
    double sample_rate_hz = 125e3;
};

inline std::string sidecar_path_for(const std::string& iq_path) {
    return iq_path + ".meta";
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline void write_sidecar(const std::string& path, const SidecarInfo& info) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "format=" << info.format << "\n"
      << "sf=" << info.sf << "\n"
      << "bandwidth_hz=" << detail::format_double(info.bandwidth_hz) << "\n"
      << "sample_rate_hz=" << detail::format_double(info.sample_rate_hz) << "\n";
    if (!f) throw IoError("short write: " + path);
}

inline SidecarInfo read_sidecar(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError("malformed sidecar line \"" + line + "\" in " + path);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    for (const char* key : {"format", "sf", "bandwidth_hz", "sample_rate_hz"})
        if (!kv.count(key))
            throw IoError(std::string("sidecar missing field ") + key + ": " + path);
    SidecarInfo info;
    info.format = kv["format"];
    if (info.format != "cf32")
        throw IoError("unsupported capture format \"" + info.format + "\": " + path);
    try {
        info.sf = std::stoi(kv["sf"]);
        info.bandwidth_hz = std::stod(kv["bandwidth_hz"]);
        info.sample_rate_hz = std::stod(kv["sample_rate_hz"]);
    } catch (const std::exception&) {
        throw IoError("non-numeric sidecar field in " + path);
    }
    return info;
}

/* ------------------------------------------------------ whitening table */

inline WhiteningSequence load_whitening_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path);
    WhiteningSequence seq;
    char c;
    while (f.get(c)) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c != '0' && c != '1')
            throw IoError(std::string("whitening table contains character '") + c +
                          "', expected only '0'/'1': " + path);
        seq.table_bits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    if (seq.table_bits.empty() || seq.table_bits.size() % 8 != 0)
        throw IoError("whitening table bit count must be a positive multiple of 8: " + path);
    return seq;
}

inline void write_whitening_table(const std::string& path,
                                  const WhiteningSequence& seq) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    for (std::uint8_t b : seq.table_bits) f << static_cast<char>('0' + b);
    f << "\n";
    if (!f) throw IoError("short write: " + path);
}

/* PN9 whitening table: LFSR x^9 + x^5 + 1 seeded all-ones; output bit is the
 * register LSB, feedback bit0 ^ bit5 shifts in at the MSB.  Four sequence
 * bits form a row's data nibble (first-generated bit = MSB) and the stored
 * 8-bit row is that nibble's (4,8) codeword — rows being valid codewords is
 * what makes the per-rate column-removal views consistent with whitening in
 * the data domain.  The default row count covers the longest possible frame:
 * 255 payload bytes + 2 CRC bytes = 514 nibble rows. */
inline WhiteningSequence make_pn9_whitening(std::size_t rows = 514) {
    WhiteningSequence seq;
    seq.table_bits.reserve(rows * 8);
    std::uint32_t state = 0x1FF;
    for (std::size_t r = 0; r < rows; ++r) {
        std::uint8_t nib = 0;
        for (int b = 0; b < 4; ++b) {
            const std::uint32_t out = state & 1u;
            const std::uint32_t fb = (state & 1u) ^ ((state >> 5) & 1u);
            state = (state >> 1) | (fb << 8);
            nib = static_cast<std::uint8_t>(nib << 1 | out);
        }
        const std::uint8_t cw = hamming_encode(nib, CodingRate::cr48);
        for (int b = 7; b >= 0; --b)
            seq.table_bits.push_back(static_cast<std::uint8_t>((cw >> b) & 1u));
    }
    return seq;
}

/* ------------------------------------------------------------ decimation */

/* Reduce an integer-oversampled capture to the chip rate by keeping every
 * factor-th sample (phase 0).  origin_index is interpreted in output samples
 * afterwards. */
inline IqBuffer decimate_to_chip_rate(const IqBuffer& sig, std::uint32_t factor) {
    if (factor == 0) throw ConfigError("decimation factor must be positive");
    if (factor == 1) return sig;
    IqBuffer out;
    out.origin_index = sig.origin_index / factor;
    out.samples.reserve(sig.samples.size() / factor + 1);
    for (std::size_t i = 0; i < sig.samples.size(); i += factor)
        out.samples.push_back(sig.samples[i]);
    return out;
}

inline std::uint32_t oversample_factor(const SidecarInfo& info) {
    const double ratio = info.sample_rate_hz / info.bandwidth_hz;
    const double r = std::round(ratio);
    if (!(ratio >= 1.0) || std::abs(ratio - r) > 1e-9)
        throw ConfigError("sample rate must be an integer multiple of bandwidth");
    return static_cast<std::uint32_t>(r);
}

} // namespace lora
