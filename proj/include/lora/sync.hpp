#pragma once

/* Receiver frame synchronization.
 *
 * Pipeline (in order): preamble detection on stride-N windows; coarse
 * alignment by discarding N - s_pr samples; integer L_STO / L_CFO separation
 * from one dechirped preamble upchirp plus one dechirped downchirp;
 * fractional CFO estimation from the zero-padded DFT of a block of
 * consecutive dechirped preamble symbols; fractional STO estimation from
 * noncoherently combined per-symbol 2N-point DFTs (after CFO compensation);
 * then alignment to the first payload window.
 *
 * Sign conventions are pinned by the channel composition order
 * (delay -> CFO -> gain -> noise) together with the forward-DFT demodulator:
 *     preamble decision      s_pr   = round(tau_cfo - tau_sto) mod N
 *     dechirped upchirp bin  k_up   = (tau_cfo - m) mod N
 *     dechirped downchirp    k_down = (tau_cfo + m) mod N
 * with m the residual signal delay relative to the receiver grid.  The
 * integer stage solves that 2x2 modular system preferring |L_CFO| <= N/4
 * and tolerating a one-bin disagreement (coarse sync leaves a +-1 sample
 * ambiguity when the fractional parts sit near a rounding boundary).
 *
 * Both fractional estimators interpolate the DFT peak with the rational
 * combination of the three spectral lines around it.  Because the peak-bin
 * rounding can land the integer stage one chip/bin off in the other
 * direction, a second integer pass runs after the first fractional
 * correction, followed by one more fractional refinement pass; this pair of
 * touch-ups is what brings the worst-case residuals well inside the 0.02
 * chip/bin budget.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "lora/channel.hpp"
#include "lora/chirp.hpp"
#include "lora/errors.hpp"

namespace lora {

/* ------------------------------------------------------------------ types */

enum class SyncPhase : std::uint8_t {
    searching, preamble_locked, integer_corrected, fraction_corrected, demodulating
};

inline const char* to_string(SyncPhase ph) {
    switch (ph) {
        case SyncPhase::searching: return "Searching";
        case SyncPhase::preamble_locked: return "PreambleLocked";
        case SyncPhase::integer_corrected: return "IntegerCorrected";
        case SyncPhase::fraction_corrected: return "FractionCorrected";
        default: return "Demodulating";
    }
}

struct SyncEstimate {
    symbol_t s_pr = 0;
    std::int64_t l_sto = 0;   // integer chips
    std::int32_t l_cfo = 0;   // integer bins
    double lambda_sto = 0.0;  // [0, 1)
    double lambda_cfo = 0.0;  // [0, 1)
    double snr_est_db = std::numeric_limits<double>::quiet_NaN();

    double tau_sto() const { return static_cast<double>(l_sto) + lambda_sto; }
    double tau_cfo() const { return static_cast<double>(l_cfo) + lambda_cfo; }
};

struct RctslConstants {
    double u = 0.0; // 64 N / (pi^5 + 32 pi)
    double v = 0.0; // u pi^2 / 4

    static RctslConstants make(std::uint32_t n) {
        const double pi = std::numbers::pi;
        const double u = 64.0 * static_cast<double>(n) /
                         (std::pow(pi, 5) + 32.0 * pi);
        return {u, u * pi * pi / 4.0};
    }
};

struct SyncConfig {
    ChirpParams params;
    std::uint32_t preamble_len = 8;
    std::size_t n_payload_symbols = 0;
    std::uint32_t detect_min_run = 0; // 0 -> preamble_len - 1
    double energy_floor = 1e-9;       // guards all-zero windows before the frame
    int refinement_passes = 2;

    /* When set, the known symbols around the lock are demodulated on the
     * corrected grid and must land within netid_slack_bins of their
     * expected values: the two network identifiers (whose bins move with
     * the residual-offset difference c - m) and the first downchirp (whose
     * bin moves with the sum c + m, catching the equal-on-both-axes errors
     * the identifiers are blind to).  A mismatch rejects the lock and
     * resumes the search.  Off by default: a lock that merely drifted a
     * whole symbol still demodulates self-consistently, so only known
     * plaintext at a known position can tell a sloppy lock from a clean
     * one.  Slack 1 tolerates a decision wobble when a marginal lock
     * leaves a near-half-bin residual, but it also admits the rare lock
     * whose integer stage settled one bin high on exactly one axis (every
     * data symbol then reads one bin off); slack 0 rejects those at the
     * cost of dropping locks whose check windows took a noise hit. */
    std::optional<std::array<symbol_t, 2>> expected_netid;
    std::uint32_t netid_slack_bins = 1;

    std::uint32_t min_run() const {
        return detect_min_run ? detect_min_run : preamble_len - 1;
    }
};

struct SyncStageFlags {
    bool detect = false;
    bool coarse = false;
    bool preamble_scan = false;
    bool integer_separation = false;
    bool lambda_cfo = false;
    bool lambda_sto = false;
    bool integer_touchup = false;
    bool netid = false; // only set when SyncConfig::expected_netid is engaged
    bool aligned = false;
};

struct SyncResult {
    bool ok = false;
    SyncPhase phase = SyncPhase::searching; // final phase; Searching after failure
    const char* failed_stage = nullptr;
    SyncEstimate estimate;
    SyncStageFlags stages;
    std::vector<std::vector<cplx>> payload_windows; // N samples each
};

/* -------------------------------------------------------------- utilities */

namespace detail {

inline int wrap_signed(std::int64_t x, std::int64_t m) {
    return static_cast<int>(mod_floor(x + m / 2, m) - m / 2);
}

inline std::uint32_t ring_distance(std::uint32_t a, std::uint32_t b, std::uint32_t n) {
    const std::uint32_t d = (a + n - b) % n;
    return std::min(d, n - d);
}

/* buf[i] *= e^{-j 2 pi bins i / N}; phase recomputed from scratch every 256
 * samples so rotator drift stays at the last-ulp level. */
inline void derotate_bins(std::vector<cplx>& buf, double bins, std::uint32_t n) {
    if (bins == 0.0) return;
    const double f = bins / static_cast<double>(n); // cycles per sample
    const cplx step = std::polar(1.0, -2.0 * std::numbers::pi * f);
    cplx r{1.0, 0.0};
    for (std::size_t i = 0; i < buf.size(); ++i) {
        if ((i & 255u) == 0u)
            r = std::polar(1.0, -2.0 * std::numbers::pi *
                                    std::fmod(f * static_cast<double>(i), 1.0));
        buf[i] *= r;
        r *= step;
    }
}

} // namespace detail

/* ------------------------------------------------------------ public ops */

/* Three-spectral-line interpolation: fractional peak position k_alpha in
 * (-0.5, 0.5) around k_max, from squared magnitudes.  n_sym is the symbol
 * length N (the constants depend on it, not on the DFT size). */
inline double rctsl_correction(const std::vector<double>& m2, std::size_t k_max,
                               std::uint32_t n_sym) {
    const std::size_t K = m2.size();
    const double ym = m2[(k_max + K - 1) % K];
    const double yp = m2[(k_max + 1) % K];
    const double y0 = m2[k_max];
    const RctslConstants c = RctslConstants::make(n_sym);
    const double den = c.u * (yp + ym) + c.v * y0;
    if (!(den > 0.0)) return 0.0;
    return (static_cast<double>(n_sym) / std::numbers::pi) * (yp - ym) / den;
}

struct DetectResult {
    bool found = false;
    symbol_t s_pr = 0;
    std::size_t run_start = 0;        // stream index of the first window in the run
    std::size_t consumed_samples = 0; // first aligned boundary: run_start + (N - s_pr) mod N
};

/* Declare detection when min_run consecutive demod values fit inside a
 * modular +-1 ring {c-1, c, c+1}.  Every distinct history value is tried as
 * the ring center (with fractional offsets near half a chip the values
 * straddle three adjacent bins, so the majority value alone can fail to
 * cover); s_pr is the covering center with the highest count, ties to the
 * smallest value.  Windows with essentially zero energy reset the history:
 * a silent stretch would otherwise demodulate to bin 0 repeatedly and fake
 * a preamble run. */
inline DetectResult detect_preamble(std::span<const cplx> stream,
                                    const SyncConfig& cfg, std::size_t start = 0) {
    const std::uint32_t N = cfg.params.n;
    const std::uint32_t run = cfg.min_run();
    const IqBuffer up = reference_upchirp(cfg.params);
    std::vector<symbol_t> hist;
    std::size_t pos = start;
    while (pos + N <= stream.size()) {
        const auto w = stream.subspan(pos, N);
        double energy = 0.0;
        for (const cplx& v : w) energy += std::norm(v);
        if (energy < cfg.energy_floor) {
            hist.clear();
            pos += N;
            continue;
        }
        hist.push_back(demodulate(w, up.samples, cfg.params));
        if (hist.size() >= run) {
            const std::span<const symbol_t> tail{hist.data() + hist.size() - run, run};
            symbol_t best = 0;
            std::size_t best_count = 0;
            for (symbol_t center : tail) {
                bool covers = true;
                std::size_t count = 0;
                for (symbol_t v : tail) {
                    if (detail::ring_distance(v, center, N) > 1) { covers = false; break; }
                    count += (v == center);
                }
                if (!covers) continue;
                if (count > best_count || (count == best_count && center < best)) {
                    best = center;
                    best_count = count;
                }
            }
            if (best_count > 0) {
                const std::size_t run_start = pos + N - std::size_t{run} * N;
                return {true, best, run_start, run_start + (N - best) % N};
            }
        }
        pos += N;
    }
    return {};
}

struct IntegerOffsets {
    int l_sto = 0; // residual integer delay m relative to the aligned grid
    int l_cfo = 0; // integer CFO bins, |l_cfo| <= N/4
};

/* Solve k_up = c - m, k_down = c + m (mod N) for (m, c), picking the
 * candidate with the best consistency score and then the smallest |c|.
 * Scores above one bin mean the two measurements disagree beyond the +-1
 * coarse-sync ambiguity -> failure. */
inline std::optional<IntegerOffsets> estimate_integer_offsets(std::uint32_t up_bin,
                                                              std::uint32_t down_bin,
                                                              std::uint32_t n) {
    const std::int64_t N = n;
    const std::int64_t ssum = (std::int64_t{up_bin} + down_bin) % N; // 2c mod N
    struct Cand {
        int score, abs_c, c, m;
        bool operator<(const Cand& o) const {
            if (score != o.score) return score < o.score;
            if (abs_c != o.abs_c) return abs_c < o.abs_c;
            if (c != o.c) return c < o.c;
            return m < o.m;
        }
    };
    std::vector<Cand> cands;
    const double half = static_cast<double>(ssum) / 2.0;
    for (const double base : {half, half + static_cast<double>(N) / 2.0})
        for (const std::int64_t c0 : {static_cast<std::int64_t>(std::floor(base)),
                                      static_cast<std::int64_t>(std::ceil(base))}) {
            const int c = detail::wrap_signed(c0, N);
            const int m = detail::wrap_signed(std::int64_t{down_bin} - c, N);
            const int eu = std::abs(detail::wrap_signed(c - m - std::int64_t{up_bin}, N));
            const int ed = std::abs(detail::wrap_signed(c + m - std::int64_t{down_bin}, N));
            if (std::abs(c) <= static_cast<int>(n / 4))
                cands.push_back({std::max(eu, ed), std::abs(c), c, m});
        }
    if (cands.empty()) return std::nullopt;
    const Cand best = *std::min_element(cands.begin(), cands.end());
    if (best.score > 1) return std::nullopt;
    return IntegerOffsets{best.m, best.c};
}

/* Fractional CFO from a block of n_windows consecutive, aligned,
 * integer-corrected preamble upchirps (contiguous in memory).  The dechirped
 * block is zero-padded to twice its length; since the preamble is periodic,
 * the block spectrum is a line spectrum whose line positions depend only on
 * lambda_cfo (a fractional time offset merely reweights the lines), so
 * peak + RCTSL read lambda_cfo off directly:
 * lambda = (k_max + k_alpha) / (2 n_windows) mod 1. */
inline std::optional<double> estimate_lambda_cfo(std::span<const cplx> block,
                                                 std::uint32_t n_windows,
                                                 const ChirpParams& p) {
    if (n_windows < 2 || block.size() != std::size_t{n_windows} * p.n)
        return std::nullopt;
    const IqBuffer up = reference_upchirp(p);
    const SpectrumResult sr = dechirp_dft(block, up.samples, 2 * block.size());
    const double ka = rctsl_correction(sr.magnitudes_sq, sr.k_max, p.n);
    double lam = std::fmod((static_cast<double>(sr.k_max) + ka) /
                               (2.0 * static_cast<double>(n_windows)), 1.0);
    if (lam < 0.0) lam += 1.0;
    return lam;
}

/* Preamble windows whose fractional CFO has been compensated; only this type
 * is accepted by estimate_lambda_sto, which keeps the mandatory
 * CFO-before-STO estimation order a compile-time property. */
class CfoCompensatedBlock {
  public:
    static CfoCompensatedBlock after_compensation(std::span<const cplx> block,
                                                  std::uint32_t n_windows) {
        return CfoCompensatedBlock(block, n_windows);
    }
    std::span<const cplx> block() const { return block_; }
    std::uint32_t n_windows() const { return n_windows_; }

  private:
    CfoCompensatedBlock(std::span<const cplx> block, std::uint32_t n_windows)
        : block_(block), n_windows_(n_windows) {}
    std::span<const cplx> block_;
    std::uint32_t n_windows_;
};

/* Fractional STO from noncoherently combined per-symbol 2N-point spectra.
 * The combined peak sits at (-tau_res) mod 1 in units of half bins, hence
 * the sign flip: lambda_sto = -( (k_max + k_alpha) / 2 ) mod 1. */
inline std::optional<double> estimate_lambda_sto(const CfoCompensatedBlock& wins,
                                                 const ChirpParams& p) {
    const std::uint32_t W = wins.n_windows();
    if (W < 1 || wins.block().size() != std::size_t{W} * p.n) return std::nullopt;
    const IqBuffer up = reference_upchirp(p);
    std::vector<double> acc(2 * std::size_t{p.n}, 0.0);
    for (std::uint32_t i = 0; i < W; ++i) {
        const SpectrumResult sr = dechirp_dft(
            wins.block().subspan(std::size_t{i} * p.n, p.n), up.samples, 2 * p.n);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += sr.magnitudes_sq[k];
    }
    std::size_t k_max = 0;
    for (std::size_t k = 1; k < acc.size(); ++k)
        if (acc[k] > acc[k_max]) k_max = k;
    const double ka = rctsl_correction(acc, k_max, p.n);
    double raw = std::fmod((static_cast<double>(k_max) + ka) / 2.0, 1.0);
    if (raw < 0.0) raw += 1.0;
    double lam = std::fmod(-raw, 1.0);
    if (lam < 0.0) lam += 1.0;
    return lam;
}

namespace detail {

/* linear peak-to-rest power ratio; +inf when the off-peak power is
 * negligible, NaN for an all-zero spectrum */
inline double snr_ratio(const SpectrumResult& sr) {
    double total = 0.0;
    for (double m2 : sr.magnitudes_sq) total += m2;
    if (total == 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double peak = sr.magnitudes_sq[sr.k_max];
    const double rest = total - peak;
    if (rest <= 1e-12 * peak) return std::numeric_limits<double>::infinity();
    return peak / rest;
}

} // namespace detail

/* Ratio between the power of the maximum DFT bin and the total power of the
 * remaining bins, in dB.  Noiseless spectra report +inf, all-zero spectra
 * NaN.  The raw ratio overshoots the injected per-sample SNR by about
 * N/(N-1) (the peak holds N times the per-bin signal gain while N-1 bins
 * hold noise); subtract snr_calibration_db(N) to compare against injected
 * values. */
inline double estimate_snr(const SpectrumResult& sr) {
    const double r = detail::snr_ratio(sr);
    if (std::isnan(r) || std::isinf(r)) return r;
    return 10.0 * std::log10(r);
}

inline double snr_calibration_db(std::uint32_t n) {
    return 10.0 * std::log10(static_cast<double>(n) / (static_cast<double>(n) - 1.0));
}

/* ------------------------------------------------------------ synchronize */

namespace detail {

inline double signed_fraction(double lam) { return lam <= 0.5 ? lam : lam - 1.0; }

struct PipelineAttempt {
    bool ok = false;
    const char* failed_stage = nullptr;
    SyncResult result;
};

} // namespace detail

/* Run the full pipeline.  On a stage failure the state machine resets to
 * Searching and detection resumes one window after the previous run start
 * (the stream-level equivalent of "reset at the next sample" for a stride-N
 * detector). */
inline SyncResult synchronize(const IqBuffer& stream, const SyncConfig& cfg) {
    const std::uint32_t N = cfg.params.n;
    const std::uint32_t NPR = cfg.preamble_len;
    const IqBuffer up = reference_upchirp(cfg.params);
    const IqBuffer down = reference_downchirp(cfg.params);
    /* A zero tail absorbs the one-sample buffer shrink of a fractional
     * advance and lets the last payload window of an exact-length capture
     * stay in bounds. */
    std::vector<cplx> base = stream.samples;
    base.resize(base.size() + N + 64, cplx{0.0, 0.0});
    const std::span<const cplx> in{base};

    SyncResult res;
    const char* last_stage = nullptr;
    std::size_t detect_from = 0;
    for (int attempt = 0; attempt < 64; ++attempt) {
        if (res.failed_stage) last_stage = res.failed_stage;
        res = SyncResult{};
        // -- Searching -> detection + coarse alignment
        const DetectResult det = detect_preamble(in, cfg, detect_from);
        if (!det.found) {
            res.failed_stage = last_stage ? last_stage : "detect";
            return res;
        }
        detect_from = det.run_start + N; // where a retry would resume
        res.stages.detect = true;
        res.estimate.s_pr = det.s_pr;
        const std::size_t B = det.consumed_samples;
        res.stages.coarse = true;

        // -- scan the aligned grid while decisions stay in the 0 +- 1 ring
        std::vector<std::size_t> ring;
        std::size_t q = B;
        while (q + N <= in.size()) {
            const symbol_t v = demodulate(in.subspan(q, N), up.samples, cfg.params);
            if (detail::ring_distance(v, 0, N) <= 1) {
                ring.push_back(q);
                q += N;
            } else {
                break;
            }
        }
        if (ring.size() < 3) { res.failed_stage = "preamble_scan"; continue; }
        const std::size_t jump = q; // first network-identifier boundary
        // usable estimation windows: at most N_pr - 2 of the ring windows,
        // excluding the last one (it may straddle the identifier when the
        // residual offset is negative)
        std::vector<std::size_t> pre(ring.begin(), ring.end() - 1);
        if (pre.size() > NPR - 2)
            pre.erase(pre.begin(), pre.end() - (NPR - 2));
        if (pre.size() < 2) { res.failed_stage = "preamble_scan"; continue; }
        res.stages.preamble_scan = true;
        res.phase = SyncPhase::preamble_locked;

        // -- PreambleLocked -> integer separation
        const std::size_t d0 = jump + 2 * std::size_t{N}; // downchirp region start
        const std::size_t up_pos = pre.back();
        const std::size_t dn_pos = d0 + N; // second downchirp: safe for |m| <= N/4
        if (dn_pos + N > in.size()) { res.failed_stage = "integer_separation"; continue; }
        const std::uint32_t ku = demodulate(in.subspan(up_pos, N), up.samples, cfg.params);
        const std::uint32_t kd = demodulate(in.subspan(dn_pos, N), down.samples, cfg.params);
        const auto sep = estimate_integer_offsets(ku, kd, N);
        if (!sep) { res.failed_stage = "integer_separation"; continue; }
        res.stages.integer_separation = true;

        std::vector<cplx> work = base;
        detail::derotate_bins(work, static_cast<double>(sep->l_cfo), N);
        std::int64_t m_hat = sep->l_sto;
        std::vector<std::int64_t> pre2;
        for (std::size_t pw : pre) pre2.push_back(static_cast<std::int64_t>(pw) + m_hat);
        if (!pre2.empty() && pre2.front() < 0) pre2.erase(pre2.begin());
        if (pre2.size() < 2) { res.failed_stage = "lambda_cfo"; continue; }
        const std::uint32_t W = static_cast<std::uint32_t>(pre2.size());
        res.phase = SyncPhase::integer_corrected;

        // -- IntegerCorrected -> fractional passes with one integer touch-up
        double tot_c = static_cast<double>(sep->l_cfo);
        double tot_s = 0.0;
        bool failed = false;
        for (int pass = 0; pass < cfg.refinement_passes && !failed; ++pass) {
            const std::size_t b0 = static_cast<std::size_t>(pre2.front());
            const auto lam_c = estimate_lambda_cfo(
                std::span<const cplx>{work}.subspan(b0, std::size_t{W} * N), W,
                cfg.params);
            if (!lam_c) { res.failed_stage = "lambda_cfo"; failed = true; break; }
            const double lc = detail::signed_fraction(*lam_c);
            detail::derotate_bins(work, lc, N);
            tot_c += lc;
            if (pass == 0) res.stages.lambda_cfo = true;

            const auto comp = CfoCompensatedBlock::after_compensation(
                std::span<const cplx>{work}.subspan(b0, std::size_t{W} * N), W);
            const auto lam_s = estimate_lambda_sto(comp, cfg.params);
            if (!lam_s) { res.failed_stage = "lambda_sto"; failed = true; break; }
            const double ls = detail::signed_fraction(*lam_s);
            if (ls != 0.0) work = fractional_delay(work, -ls);
            tot_s += ls;
            if (pass == 0) res.stages.lambda_sto = true;

            if (pass == 0) {
                // residuals are near-integer now; re-run the integer solve
                const std::int64_t up2 = static_cast<std::int64_t>(up_pos) + m_hat;
                const std::int64_t dn2 = static_cast<std::int64_t>(dn_pos) + m_hat;
                if (up2 < 0 ||
                    static_cast<std::size_t>(dn2) + N > work.size()) {
                    res.failed_stage = "integer_touchup";
                    failed = true;
                    break;
                }
                const std::span<const cplx> wk{work};
                const std::uint32_t ku2 = demodulate(
                    wk.subspan(static_cast<std::size_t>(up2), N), up.samples, cfg.params);
                const std::uint32_t kd2 = demodulate(
                    wk.subspan(static_cast<std::size_t>(dn2), N), down.samples, cfg.params);
                const auto sep2 = estimate_integer_offsets(ku2, kd2, N);
                if (!sep2) { res.failed_stage = "integer_touchup"; failed = true; break; }
                if (sep2->l_cfo != 0) {
                    detail::derotate_bins(work, static_cast<double>(sep2->l_cfo), N);
                    tot_c += sep2->l_cfo;
                }
                if (sep2->l_sto != 0) {
                    m_hat += sep2->l_sto;
                    for (auto& pw : pre2) pw += sep2->l_sto;
                    if (pre2.front() < 0) {
                        res.failed_stage = "integer_touchup";
                        failed = true;
                        break;
                    }
                }
                res.stages.integer_touchup = true;
            }
        }
        if (failed) continue;
        res.phase = SyncPhase::fraction_corrected;

        // -- optional lock check against the known symbols around the lock
        if (cfg.expected_netid) {
            const std::int64_t nid0 = static_cast<std::int64_t>(jump) + m_hat;
            if (nid0 < 0 ||
                static_cast<std::size_t>(nid0) + 4 * N > work.size()) {
                res.failed_stage = "netid";
                continue;
            }
            const std::span<const cplx> wk{work};
            bool match = true;
            for (std::size_t i = 0; i < 2 && match; ++i) {
                const symbol_t got = demodulate(
                    wk.subspan(static_cast<std::size_t>(nid0) + i * N, N),
                    up.samples, cfg.params);
                match = detail::ring_distance(got, (*cfg.expected_netid)[i], N) <=
                        cfg.netid_slack_bins;
            }
            if (match) {
                /* first downchirp, not the one the separation measured */
                const symbol_t got = demodulate(
                    wk.subspan(static_cast<std::size_t>(nid0) + 2 * N, N),
                    down.samples, cfg.params);
                match = detail::ring_distance(got, 0, N) <= cfg.netid_slack_bins;
            }
            if (!match) { res.failed_stage = "netid"; continue; }
            res.stages.netid = true;
        }

        // -- FractionCorrected -> aligned payload windows
        const std::int64_t pay0 = static_cast<std::int64_t>(jump) + m_hat +
                                  2 * std::int64_t{N} + 9 * std::int64_t{N} / 4;
        if (pay0 < 0 ||
            static_cast<std::size_t>(pay0) + cfg.n_payload_symbols * N > work.size()) {
            res.failed_stage = "align";
            continue;
        }
        const double tau_sto_hat = static_cast<double>(
                                       static_cast<std::int64_t>(jump) + m_hat -
                                       std::int64_t{NPR} * N) + tot_s;
        res.estimate.l_sto = static_cast<std::int64_t>(std::floor(tau_sto_hat));
        res.estimate.lambda_sto = tau_sto_hat - std::floor(tau_sto_hat);
        res.estimate.l_cfo = static_cast<std::int32_t>(std::floor(tot_c));
        res.estimate.lambda_cfo = tot_c - std::floor(tot_c);
        res.stages.aligned = true;

        double ratio_sum = 0.0;
        std::size_t ratio_n = 0;
        bool ratio_inf = false;
        res.payload_windows.reserve(cfg.n_payload_symbols);
        for (std::size_t i = 0; i < cfg.n_payload_symbols; ++i) {
            const std::size_t w0 = static_cast<std::size_t>(pay0) + i * N;
            res.payload_windows.emplace_back(work.begin() + static_cast<std::ptrdiff_t>(w0),
                                             work.begin() + static_cast<std::ptrdiff_t>(w0 + N));
            const SpectrumResult sr =
                dechirp_dft(std::span<const cplx>{res.payload_windows.back()},
                            up.samples, N);
            const double r = detail::snr_ratio(sr);
            if (std::isinf(r)) ratio_inf = true;
            else if (!std::isnan(r)) { ratio_sum += r; ++ratio_n; }
        }
        if (ratio_inf)
            res.estimate.snr_est_db = std::numeric_limits<double>::infinity();
        else if (ratio_n > 0)
            res.estimate.snr_est_db =
                10.0 * std::log10(ratio_sum / static_cast<double>(ratio_n));
        res.phase = SyncPhase::demodulating;
        res.ok = true;
        return res;
    }
    res.phase = SyncPhase::searching;
    if (!res.failed_stage) res.failed_stage = "detect";
    return res;
}

} // namespace lora
