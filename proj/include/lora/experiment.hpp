#pragma once

/* Monte Carlo harness: BER/SER/FER sweeps and synchronizer benchmarks.
 *
 * Determinism contract: every random draw comes from a stream seeded by
 * derive_seed(master, snr_point_index, trial_index) plus a fixed purpose
 * code, trials land in a preallocated results array, and reduction runs
 * sequentially in trial order.  Output is therefore byte-identical across
 * runs and across thread counts.
 *
 * Error statistics are conditioned on synchronized frames; synchronization
 * failures are reported as a separate rate, never folded into BER.  Binomial
 * rates carry Wilson 95% intervals (z = 1.96).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "lora/channel.hpp"
#include "lora/chirp.hpp"
#include "lora/config.hpp"
#include "lora/frame.hpp"
#include "lora/io.hpp"
#include "lora/sync.hpp"

namespace lora {

/* ------------------------------------------------------- uncoded mapping */

/* Uncoded mode: payload bits (MSB-first), zero-padded to a multiple of SF,
 * in SF-bit groups; each group is a Gray codeword, mapped back to the
 * natural symbol value for modulation so that the receiver's gray_demap
 * recovers the bits. */
inline std::vector<symbol_t> map_uncoded(const std::vector<std::uint8_t>& payload,
                                         int sf) {
    const std::size_t nbits = payload.size() * 8;
    const std::size_t groups = (nbits + static_cast<std::size_t>(sf) - 1) /
                               static_cast<std::size_t>(sf);
    std::vector<symbol_t> symbols(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        std::uint32_t w = 0;
        for (int j = 0; j < sf; ++j) {
            const std::size_t b = g * static_cast<std::size_t>(sf) +
                                  static_cast<std::size_t>(j);
            const std::uint32_t bit =
                b < nbits ? (payload[b / 8] >> (7 - b % 8)) & 1u : 0u;
            w = w << 1 | bit;
        }
        symbols[g] = static_cast<symbol_t>(gray_map(w));
    }
    return symbols;
}

inline std::vector<std::uint8_t> unmap_uncoded(const std::vector<symbol_t>& symbols,
                                               int sf, std::size_t nbits) {
    std::vector<std::uint8_t> bits;
    bits.reserve(symbols.size() * static_cast<std::size_t>(sf));
    for (symbol_t s : symbols) {
        const std::uint32_t w = gray_demap(s);
        for (int j = sf - 1; j >= 0; --j)
            bits.push_back(static_cast<std::uint8_t>((w >> j) & 1u));
    }
    bits.resize(nbits);
    return bits;
}

/* ------------------------------------------------------------- intervals */

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

inline WilsonInterval wilson_interval(std::uint64_t k, std::uint64_t n,
                                      double z = 1.96) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double hw = z / denom * std::sqrt(p * (1.0 - p) / nn +
                                            z2 / (4.0 * nn * nn));
    return {std::max(0.0, center - hw), std::min(1.0, center + hw)};
}

/* ----------------------------------------------------------- trial runner */

struct TrialOutcome {
    bool synced = false;
    std::uint64_t bits = 0, bit_errors = 0;
    std::uint64_t symbols = 0, symbol_errors = 0;
    bool frame_error = false;
    bool crc_ok = true;
    double sto_err = std::numeric_limits<double>::quiet_NaN(); // tau_hat - tau_true
    double cfo_err = std::numeric_limits<double>::quiet_NaN();
    double snr_est_db = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/* purpose codes for per-trial derived streams */
inline constexpr std::uint64_t seed_purpose_payload = 1;
inline constexpr std::uint64_t seed_purpose_offsets = 2;
inline constexpr std::uint64_t seed_purpose_noise = 3;

struct TrialSetup {
    std::vector<std::uint8_t> payload;
    ImpairmentSpec spec;
    double tau_cfo = 0.0; // bins
};

inline TrialSetup make_trial_setup(const ExperimentConfig& cfg,
                                   std::size_t point_idx, std::uint64_t trial_idx,
                                   const NoiseSpec& noise) {
    TrialSetup t;
    const std::uint64_t tseed = derive_seed(cfg.seed, point_idx, trial_idx);
    if (cfg.fixed_payload) {
        t.payload = *cfg.fixed_payload;
    } else {
        std::mt19937_64 rng(derive_seed(tseed, seed_purpose_payload));
        t.payload.resize(cfg.payload_len);
        for (auto& b : t.payload) b = static_cast<std::uint8_t>(rng() & 0xFF);
    }
    std::mt19937_64 rng(derive_seed(tseed, seed_purpose_offsets));
    switch (cfg.sto_mode) {
        case OffsetMode::none: t.spec.tau_sto = 0.0; break;
        case OffsetMode::fixed: t.spec.tau_sto = cfg.sto_chips; break;
        case OffsetMode::random:
            t.spec.tau_sto = uniform01(rng) * cfg.sto_max_chips;
            break;
    }
    switch (cfg.cfo_mode) {
        case OffsetMode::none: t.tau_cfo = 0.0; break;
        case OffsetMode::fixed: t.tau_cfo = cfg.cfo_bins; break;
        case OffsetMode::random:
            t.tau_cfo = (2.0 * uniform01(rng) - 1.0) * cfg.cfo_max_bins;
            break;
    }
    t.spec.delta_fc_hz = t.tau_cfo * cfg.params.sample_rate_hz /
                         static_cast<double>(cfg.params.n);
    if (cfg.phase_mode == PhaseMode::random)
        t.spec.h = std::polar(1.0, 2.0 * std::numbers::pi * uniform01(rng));
    t.spec.noise = noise;
    t.spec.seed = derive_seed(tseed, seed_purpose_noise);
    return t;
}

/* Tail padding appended to every transmitted frame so that delays, the
 * interpolator span and +-1 window drift never run past the buffer. */
inline std::size_t trial_margin(const ChirpParams& p) {
    return std::size_t{p.n} + 64;
}

} // namespace detail

inline TrialOutcome run_trial(const ExperimentConfig& cfg,
                              const WhiteningSequence& seq, std::size_t point_idx,
                              std::uint64_t trial_idx, const NoiseSpec& noise) {
    const ChirpParams& p = cfg.params;
    const detail::TrialSetup t = detail::make_trial_setup(cfg, point_idx, trial_idx, noise);

    FrameConfig fc = cfg.frame;
    fc.payload = t.payload;
    const std::vector<symbol_t> tx_symbols =
        cfg.uncoded ? map_uncoded(t.payload, p.sf)
                    : build_payload_symbols(fc, p, seq);

    IqBuffer x = assemble_frame_iq(fc, p, tx_symbols);
    x.samples.resize(x.samples.size() + detail::trial_margin(p), cplx{0.0, 0.0});
    const IqBuffer y = transmit_through(x, t.spec, p);

    TrialOutcome out;
    std::vector<symbol_t> decisions;
    decisions.reserve(tx_symbols.size());
    const IqBuffer up = reference_upchirp(p);

    if (cfg.genie) {
        /* truth-aided path: compensate with the injected values, window at
         * the true boundaries */
        std::vector<cplx> w = y.samples;
        detail::derotate_bins(w, t.tau_cfo, p.n);
        const double lam = t.spec.tau_sto - std::floor(t.spec.tau_sto);
        if (lam != 0.0) w = fractional_delay(w, -lam);
        const std::size_t start =
            static_cast<std::size_t>(std::floor(t.spec.tau_sto)) +
            (std::size_t{fc.preamble_len} + 2) * p.n + 9 * std::size_t{p.n} / 4;
        out.synced = true;
        for (std::size_t i = 0; i < tx_symbols.size(); ++i)
            decisions.push_back(demodulate(
                std::span<const cplx>{w}.subspan(start + i * p.n, p.n), up.samples, p));
    } else {
        SyncConfig sc;
        sc.params = p;
        sc.preamble_len = fc.preamble_len;
        sc.n_payload_symbols = tx_symbols.size();
        sc.detect_min_run = cfg.detect_min_run;
        if (cfg.validate_netid) {
            sc.expected_netid = netid_symbols(fc, p);
            sc.netid_slack_bins = cfg.netid_slack;
        }
        const SyncResult sr = synchronize(y, sc);
        out.synced = sr.ok;
        if (sr.ok) {
            out.sto_err = sr.estimate.tau_sto() - t.spec.tau_sto;
            out.cfo_err = sr.estimate.tau_cfo() - t.tau_cfo;
            out.snr_est_db = sr.estimate.snr_est_db;
            for (const auto& win : sr.payload_windows)
                decisions.push_back(
                    demodulate(std::span<const cplx>{win}, up.samples, p));
        }
    }
    if (!out.synced) return out;

    out.symbols = tx_symbols.size();
    for (std::size_t i = 0; i < tx_symbols.size(); ++i)
        out.symbol_errors += decisions[i] != tx_symbols[i];

    if (cfg.uncoded) {
        const std::size_t nbits = t.payload.size() * 8;
        const std::vector<std::uint8_t> rx_bits = unmap_uncoded(decisions, p.sf, nbits);
        out.bits = nbits;
        for (std::size_t b = 0; b < nbits; ++b) {
            const std::uint8_t tx_bit = (t.payload[b / 8] >> (7 - b % 8)) & 1u;
            out.bit_errors += rx_bits[b] != tx_bit;
        }
        out.frame_error = out.bit_errors != 0;
    } else {
        const DecodedPayload dec = decode_payload_symbols(decisions, fc, p, seq);
        out.crc_ok = dec.crc_ok;
        out.bits = t.payload.size() * 8;
        for (std::size_t i = 0; i < t.payload.size(); ++i) {
            std::uint8_t diff = static_cast<std::uint8_t>(dec.payload[i] ^ t.payload[i]);
            while (diff) { out.bit_errors += diff & 1u; diff >>= 1; }
        }
        out.frame_error = out.bit_errors != 0 || (fc.has_crc && !dec.crc_ok);
    }
    return out;
}

/* Run all trials of one SNR point; thread t owns a contiguous chunk of the
 * results array, reduction happens later in trial order. */
inline std::vector<TrialOutcome> run_point(const ExperimentConfig& cfg,
                                           const WhiteningSequence& seq,
                                           std::size_t point_idx,
                                           const NoiseSpec& noise) {
    std::vector<TrialOutcome> results(cfg.trials);
    const unsigned T = std::max(1u, cfg.threads);
    if (T == 1) {
        for (std::uint64_t i = 0; i < cfg.trials; ++i)
            results[i] = run_trial(cfg, seq, point_idx, i, noise);
        return results;
    }
    const std::uint64_t chunk = (cfg.trials + T - 1) / T;
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < T; ++t) {
        const std::uint64_t lo = t * chunk;
        const std::uint64_t hi = std::min(cfg.trials, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&, lo, hi] {
            for (std::uint64_t i = lo; i < hi; ++i)
                results[i] = run_trial(cfg, seq, point_idx, i, noise);
        });
    }
    for (auto& w : workers) w.join();
    return results;
}

/* ------------------------------------------------------------ aggregation */

struct BerRow {
    double snr_db = std::numeric_limits<double>::infinity(); // configured axis
    double snr_db_per_sample = std::numeric_limits<double>::infinity();
    double snr_db_paper = std::numeric_limits<double>::infinity();
    std::uint64_t trials = 0, synced_frames = 0, sync_failures = 0;
    double sync_failure_rate = 0.0;
    std::uint64_t total_bits = 0, bit_errors = 0;
    double ber = 0.0; WilsonInterval ber_ci;
    std::uint64_t total_symbols = 0, symbol_errors = 0;
    double ser = 0.0; WilsonInterval ser_ci;
    std::uint64_t frame_errors = 0;
    double fer = 0.0; WilsonInterval fer_ci;
    double mean_abs_sto_err = std::numeric_limits<double>::quiet_NaN();
    double mean_abs_cfo_err = std::numeric_limits<double>::quiet_NaN();
    double mean_snr_est_db = std::numeric_limits<double>::quiet_NaN();
};

struct SyncBenchRow {
    double snr_db = std::numeric_limits<double>::infinity();
    double snr_db_per_sample = std::numeric_limits<double>::infinity();
    double snr_db_paper = std::numeric_limits<double>::infinity();
    std::uint64_t trials = 0, synced_frames = 0, sync_failures = 0;
    double sync_failure_rate = 0.0;
    double sto_rmse = std::numeric_limits<double>::quiet_NaN();
    double sto_bias = std::numeric_limits<double>::quiet_NaN();
    double sto_p99_abs = std::numeric_limits<double>::quiet_NaN();
    double sto_max_abs = std::numeric_limits<double>::quiet_NaN();
    double cfo_rmse = std::numeric_limits<double>::quiet_NaN();
    double cfo_bias = std::numeric_limits<double>::quiet_NaN();
    double cfo_p99_abs = std::numeric_limits<double>::quiet_NaN();
    double cfo_max_abs = std::numeric_limits<double>::quiet_NaN();
    double mean_snr_est_db = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct SnrAxes {
    double configured, per_sample, paper;
};

inline SnrAxes snr_axes(const ExperimentConfig& cfg, const NoiseSpec& noise,
                        double configured) {
    if (noise.noiseless) {
        const double inf = std::numeric_limits<double>::infinity();
        return {inf, inf, inf};
    }
    const double per_sample =
        cfg.snr_convention == NoiseConvention::per_sample_inverse_sigma2
            ? configured
            : per_sample_snr_db_from_paper(configured, cfg.params.n);
    return {configured, per_sample,
            paper_snr_db_from_per_sample(per_sample, cfg.params.n)};
}

inline double p99_abs(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    for (auto& x : v) x = std::abs(x);
    std::sort(v.begin(), v.end());
    const std::size_t idx =
        static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(v.size()))) - 1;
    return v[std::min(idx, v.size() - 1)];
}

} // namespace detail

inline BerRow aggregate_ber(const ExperimentConfig& cfg, const NoiseSpec& noise,
                            double configured_snr,
                            const std::vector<TrialOutcome>& outcomes) {
    BerRow row;
    const detail::SnrAxes ax = detail::snr_axes(cfg, noise, configured_snr);
    row.snr_db = ax.configured;
    row.snr_db_per_sample = ax.per_sample;
    row.snr_db_paper = ax.paper;
    row.trials = outcomes.size();
    double sto_sum = 0.0, cfo_sum = 0.0, snr_sum = 0.0;
    std::uint64_t snr_n = 0;
    for (const TrialOutcome& o : outcomes) {
        if (!o.synced) { ++row.sync_failures; continue; }
        ++row.synced_frames;
        row.total_bits += o.bits;
        row.bit_errors += o.bit_errors;
        row.total_symbols += o.symbols;
        row.symbol_errors += o.symbol_errors;
        row.frame_errors += o.frame_error;
        if (std::isfinite(o.sto_err)) sto_sum += std::abs(o.sto_err);
        if (std::isfinite(o.cfo_err)) cfo_sum += std::abs(o.cfo_err);
        if (std::isfinite(o.snr_est_db)) { snr_sum += o.snr_est_db; ++snr_n; }
    }
    row.sync_failure_rate = row.trials
                                ? static_cast<double>(row.sync_failures) /
                                      static_cast<double>(row.trials)
                                : 0.0;
    if (row.total_bits) row.ber = static_cast<double>(row.bit_errors) /
                                  static_cast<double>(row.total_bits);
    if (row.total_symbols) row.ser = static_cast<double>(row.symbol_errors) /
                                     static_cast<double>(row.total_symbols);
    if (row.synced_frames) row.fer = static_cast<double>(row.frame_errors) /
                                     static_cast<double>(row.synced_frames);
    row.ber_ci = wilson_interval(row.bit_errors, row.total_bits);
    row.ser_ci = wilson_interval(row.symbol_errors, row.total_symbols);
    row.fer_ci = wilson_interval(row.frame_errors, row.synced_frames);
    if (row.synced_frames && !cfg.genie) {
        row.mean_abs_sto_err = sto_sum / static_cast<double>(row.synced_frames);
        row.mean_abs_cfo_err = cfo_sum / static_cast<double>(row.synced_frames);
    }
    if (snr_n) row.mean_snr_est_db = snr_sum / static_cast<double>(snr_n);
    return row;
}

inline SyncBenchRow aggregate_sync_bench(const ExperimentConfig& cfg,
                                         const NoiseSpec& noise, double configured_snr,
                                         const std::vector<TrialOutcome>& outcomes) {
    SyncBenchRow row;
    const detail::SnrAxes ax = detail::snr_axes(cfg, noise, configured_snr);
    row.snr_db = ax.configured;
    row.snr_db_per_sample = ax.per_sample;
    row.snr_db_paper = ax.paper;
    row.trials = outcomes.size();
    std::vector<double> sto, cfo;
    double snr_sum = 0.0;
    std::uint64_t snr_n = 0;
    for (const TrialOutcome& o : outcomes) {
        if (!o.synced) { ++row.sync_failures; continue; }
        ++row.synced_frames;
        if (std::isfinite(o.sto_err)) sto.push_back(o.sto_err);
        if (std::isfinite(o.cfo_err)) cfo.push_back(o.cfo_err);
        if (std::isfinite(o.snr_est_db)) { snr_sum += o.snr_est_db; ++snr_n; }
    }
    row.sync_failure_rate = row.trials
                                ? static_cast<double>(row.sync_failures) /
                                      static_cast<double>(row.trials)
                                : 0.0;
    auto moments = [](const std::vector<double>& v, double& rmse, double& bias,
                      double& mx) {
        if (v.empty()) return;
        double s = 0.0, s2 = 0.0, m = 0.0;
        for (double x : v) {
            s += x;
            s2 += x * x;
            m = std::max(m, std::abs(x));
        }
        bias = s / static_cast<double>(v.size());
        rmse = std::sqrt(s2 / static_cast<double>(v.size()));
        mx = m;
    };
    moments(sto, row.sto_rmse, row.sto_bias, row.sto_max_abs);
    moments(cfo, row.cfo_rmse, row.cfo_bias, row.cfo_max_abs);
    row.sto_p99_abs = detail::p99_abs(sto);
    row.cfo_p99_abs = detail::p99_abs(cfo);
    if (snr_n) row.mean_snr_est_db = snr_sum / static_cast<double>(snr_n);
    return row;
}

/* ------------------------------------------------------------------- CSV */

namespace detail {

inline void append_num(std::string& s, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s += buf;
}

inline void append_num(std::string& s, std::uint64_t v) {
    s += std::to_string(v);
}

} // namespace detail

inline constexpr const char* ber_csv_version = "# lora-ber-csv v1";
inline constexpr const char* sync_bench_csv_version = "# lora-sync-bench-csv v1";

inline std::string ber_csv(const std::vector<BerRow>& rows) {
    std::string s;
    s += ber_csv_version;
    s += "\nsnr_db,snr_db_per_sample,snr_db_paper,trials,synced_frames,sync_failures,"
         "sync_failure_rate,total_bits,bit_errors,ber,ber_wilson_lo,ber_wilson_hi,"
         "total_symbols,symbol_errors,ser,ser_wilson_lo,ser_wilson_hi,"
         "frame_errors,fer,fer_wilson_lo,fer_wilson_hi,"
         "mean_abs_sto_err,mean_abs_cfo_err,mean_snr_est_db\n";
    for (const BerRow& r : rows) {
        detail::append_num(s, r.snr_db); s += ',';
        detail::append_num(s, r.snr_db_per_sample); s += ',';
        detail::append_num(s, r.snr_db_paper); s += ',';
        detail::append_num(s, r.trials); s += ',';
        detail::append_num(s, r.synced_frames); s += ',';
        detail::append_num(s, r.sync_failures); s += ',';
        detail::append_num(s, r.sync_failure_rate); s += ',';
        detail::append_num(s, r.total_bits); s += ',';
        detail::append_num(s, r.bit_errors); s += ',';
        detail::append_num(s, r.ber); s += ',';
        detail::append_num(s, r.ber_ci.lo); s += ',';
        detail::append_num(s, r.ber_ci.hi); s += ',';
        detail::append_num(s, r.total_symbols); s += ',';
        detail::append_num(s, r.symbol_errors); s += ',';
        detail::append_num(s, r.ser); s += ',';
        detail::append_num(s, r.ser_ci.lo); s += ',';
        detail::append_num(s, r.ser_ci.hi); s += ',';
        detail::append_num(s, r.frame_errors); s += ',';
        detail::append_num(s, r.fer); s += ',';
        detail::append_num(s, r.fer_ci.lo); s += ',';
        detail::append_num(s, r.fer_ci.hi); s += ',';
        detail::append_num(s, r.mean_abs_sto_err); s += ',';
        detail::append_num(s, r.mean_abs_cfo_err); s += ',';
        detail::append_num(s, r.mean_snr_est_db); s += '\n';
    }
    return s;
}

inline std::string sync_bench_csv(const std::vector<SyncBenchRow>& rows) {
    std::string s;
    s += sync_bench_csv_version;
    s += "\nsnr_db,snr_db_per_sample,snr_db_paper,trials,synced_frames,sync_failures,"
         "sync_failure_rate,sto_rmse,sto_bias,sto_p99_abs,sto_max_abs,"
         "cfo_rmse,cfo_bias,cfo_p99_abs,cfo_max_abs,mean_snr_est_db\n";
    for (const SyncBenchRow& r : rows) {
        detail::append_num(s, r.snr_db); s += ',';
        detail::append_num(s, r.snr_db_per_sample); s += ',';
        detail::append_num(s, r.snr_db_paper); s += ',';
        detail::append_num(s, r.trials); s += ',';
        detail::append_num(s, r.synced_frames); s += ',';
        detail::append_num(s, r.sync_failures); s += ',';
        detail::append_num(s, r.sync_failure_rate); s += ',';
        detail::append_num(s, r.sto_rmse); s += ',';
        detail::append_num(s, r.sto_bias); s += ',';
        detail::append_num(s, r.sto_p99_abs); s += ',';
        detail::append_num(s, r.sto_max_abs); s += ',';
        detail::append_num(s, r.cfo_rmse); s += ',';
        detail::append_num(s, r.cfo_bias); s += ',';
        detail::append_num(s, r.cfo_p99_abs); s += ',';
        detail::append_num(s, r.cfo_max_abs); s += ',';
        detail::append_num(s, r.mean_snr_est_db); s += '\n';
    }
    return s;
}

/* ----------------------------------------------------------------- sweeps */

namespace detail {

/* noise points: the listed SNRs, or a single noiseless point for an empty
 * list */
inline std::vector<std::pair<NoiseSpec, double>> noise_points(const ExperimentConfig& cfg) {
    std::vector<std::pair<NoiseSpec, double>> pts;
    if (cfg.snr_db_list.empty()) {
        pts.emplace_back(NoiseSpec::none(),
                         std::numeric_limits<double>::infinity());
    } else {
        for (double v : cfg.snr_db_list)
            pts.emplace_back(NoiseSpec::snr_db(v, cfg.snr_convention), v);
    }
    return pts;
}

} // namespace detail

/* The whitening sequence comes from cfg.whitening_table_path, or the
 * built-in PN9 table when no path is configured. */
inline WhiteningSequence whitening_for(const ExperimentConfig& cfg) {
    return cfg.whitening_table_path.empty()
               ? make_pn9_whitening()
               : load_whitening_table(cfg.whitening_table_path);
}

inline std::vector<BerRow> run_ber_sweep(const ExperimentConfig& cfg) {
    const WhiteningSequence seq = whitening_for(cfg);
    std::vector<BerRow> rows;
    std::size_t point_idx = 0;
    for (const auto& [noise, configured] : detail::noise_points(cfg)) {
        rows.push_back(aggregate_ber(cfg, noise, configured,
                                     run_point(cfg, seq, point_idx, noise)));
        ++point_idx;
    }
    return rows;
}

inline std::vector<SyncBenchRow> run_sync_bench_sweep(const ExperimentConfig& cfg) {
    const WhiteningSequence seq = whitening_for(cfg);
    std::vector<SyncBenchRow> rows;
    std::size_t point_idx = 0;
    for (const auto& [noise, configured] : detail::noise_points(cfg)) {
        rows.push_back(aggregate_sync_bench(cfg, noise, configured,
                                            run_point(cfg, seq, point_idx, noise)));
        ++point_idx;
    }
    return rows;
}

} // namespace lora
