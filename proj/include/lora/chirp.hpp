#pragma once

/* Chirp-spread-spectrum signal core: symbol modulation, reference chirps,
 * dechirped DFT spectra, and hard-decision demodulation.
 *
 * A symbol s in [0, N), N = 2^SF, maps to
 *     x_s[n] = exp(j 2 pi (n^2/(2N) + (s/N - 1/2) n)),   n = 0..N-1.
 * At the chip rate (fs = bandwidth) every phase argument is a dyadic
 * rational: 2 pi (n^2 + n(2s - N)) / (2N).  We reduce that integer
 * numerator mod 2N before touching floating point and read the result from
 * a 2N-entry complex exponential table, so sample values are exact to the
 * accuracy of a single std::polar call (unit modulus within a few ulp) and
 * the sampled upchirp is exactly N-periodic in n.
 *
 * Demodulation multiplies a window by the conjugate reference chirp and
 * takes an unnormalized forward DFT; the argmax bin (ties -> lowest index)
 * is the symbol decision.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "lora/errors.hpp"
#include "lora/fft.hpp"

namespace lora {

using symbol_t = std::uint32_t;

struct ChirpParams {
    int sf = 7;                    // spreading factor, 7..12
    double bandwidth_hz = 125e3;   // 125/250/500 kHz in standard-compatible use
    double sample_rate_hz = 125e3; // canonical fs = bandwidth (chip rate)
    std::uint32_t n = 128;         // chips per symbol, 2^sf
};

/* Validates and derives n = 2^sf.  fs == 0 selects the canonical chip rate.
 * fs must be an integer multiple of the bandwidth; modulation itself always
 * runs at the chip rate, oversampled captures are decimated at the receiver
 * boundary (see io.hpp). */
inline ChirpParams make_chirp_params(int sf, double bandwidth_hz,
                                     double sample_rate_hz = 0.0) {
    if (sf < 7 || sf > 12)
        throw ConfigError("spreading factor must be in 7..12");
    if (!(bandwidth_hz > 0.0))
        throw ConfigError("bandwidth must be positive");
    if (sample_rate_hz == 0.0) sample_rate_hz = bandwidth_hz;
    const double ratio = sample_rate_hz / bandwidth_hz;
    if (!(ratio >= 1.0) || std::abs(ratio - std::round(ratio)) > 1e-9)
        throw ConfigError("sample rate must be an integer multiple of bandwidth");
    return ChirpParams{sf, bandwidth_hz, sample_rate_hz,
                       std::uint32_t{1} << sf};
}

struct IqBuffer {
    std::vector<cplx> samples;
    std::uint64_t origin_index = 0; // global index of samples[0] (phase reference)
};

struct SpectrumResult {
    std::vector<double> magnitudes_sq;
    std::size_t k_max = 0;          // argmax, ties resolved to the lowest index
    std::optional<std::vector<cplx>> complex_bins;
};

namespace detail {

/* tw[k] = exp(j pi k / N), k = 0..2N-1, cached per N. */
inline const std::vector<cplx>& twiddle_table(std::uint32_t n) {
    static std::mutex mu;
    static std::unordered_map<std::uint32_t, std::vector<cplx>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cplx> tw(2 * std::size_t{n});
    for (std::size_t k = 0; k < tw.size(); ++k)
        tw[k] = std::polar(1.0, std::numbers::pi * static_cast<double>(k) /
                                    static_cast<double>(n));
    return cache.emplace(n, std::move(tw)).first->second;
}

inline std::int64_t mod_floor(std::int64_t a, std::int64_t m) {
    std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

} // namespace detail

/* One modulated symbol, N samples at the chip rate. */
inline IqBuffer modulate_symbol(symbol_t s, const ChirpParams& p) {
    if (s >= p.n) throw ConfigError("symbol value out of range");
    const auto& tw = detail::twiddle_table(p.n);
    const std::int64_t n = p.n;
    IqBuffer out;
    out.samples.resize(p.n);
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t num =
            detail::mod_floor(i * i + i * (2 * std::int64_t{s} - n), 2 * n);
        out.samples[static_cast<std::size_t>(i)] = tw[static_cast<std::size_t>(num)];
    }
    return out;
}

inline IqBuffer reference_upchirp(const ChirpParams& p) { return modulate_symbol(0, p); }

inline IqBuffer reference_downchirp(const ChirpParams& p) {
    IqBuffer up = reference_upchirp(p);
    for (auto& v : up.samples) v = std::conj(v);
    return up;
}

/* Dechirp-and-transform: multiply the window by the conjugate reference and
 * take a K-point forward DFT of the product.
 *
 * The reference tiles cyclically across the window; this is exact for the
 * reference chirps because the sampled chirp is N-periodic, and it is what
 * lets one call cover both a single N-sample symbol window and a block of
 * consecutive preamble symbols.  Requires ref len <= window len <= K.
 */
inline SpectrumResult dechirp_dft(std::span<const cplx> window,
                                  std::span<const cplx> ref, std::size_t K,
                                  bool want_complex_bins = false) {
    if (ref.empty() || window.size() < ref.size() || window.size() > K)
        throw ConfigError("dechirp_dft requires ref len <= window len <= K");
    std::vector<cplx> prod(K, cplx{0.0, 0.0});
    const std::size_t R = ref.size();
    for (std::size_t i = 0; i < window.size(); ++i)
        prod[i] = window[i] * std::conj(ref[i % R]);
    SpectrumResult res;
    std::vector<cplx> bins;
    fft_forward(prod, bins);
    res.magnitudes_sq.resize(K);
    double best = -1.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double m2 = std::norm(bins[k]);
        res.magnitudes_sq[k] = m2;
        if (m2 > best) { best = m2; res.k_max = k; }
    }
    if (want_complex_bins) res.complex_bins = std::move(bins);
    return res;
}

/* Hard symbol decision over one window (K = N). */
inline symbol_t demodulate(std::span<const cplx> window,
                           std::span<const cplx> ref, const ChirpParams& p) {
    return static_cast<symbol_t>(dechirp_dft(window, ref, p.n).k_max);
}

} // namespace lora
