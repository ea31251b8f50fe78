/* Command-line front end.
 *
 *   lora_cli tx         --config C --out IQ        write one frame (cf32 + sidecar)
 *   lora_cli rx         --config C --in IQ         synchronize + decode a capture
 *   lora_cli ber        --config C [--out CSV]     BER/SER/FER sweep
 *   lora_cli sync-bench --config C [--out CSV]     synchronizer error benchmark
 *
 * Exit codes: 0 success; 1 decode/CRC or synchronization failure;
 * 2 configuration error; 3 I/O error.
 */

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lora/channel.hpp"
#include "lora/chirp.hpp"
#include "lora/config.hpp"
#include "lora/errors.hpp"
#include "lora/experiment.hpp"
#include "lora/frame.hpp"
#include "lora/io.hpp"
#include "lora/sync.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::string in_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool genie = false;
};

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        s += digits[b >> 4];
        s += digits[b & 0xF];
    }
    return s;
}

lora::ExperimentConfig load_experiment(const CommonArgs& args,
                                       lora::KeyValueConfig* raw_out = nullptr) {
    const lora::KeyValueConfig kv = lora::parse_config_file(args.config_path);
    lora::ExperimentConfig cfg = lora::make_experiment_config(kv);
    if (args.seed) cfg.seed = *args.seed;
    if (args.threads) cfg.threads = *args.threads;
    if (args.genie) cfg.genie = true;
    if (raw_out) *raw_out = kv;
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw lora::IoError("cannot open for writing: " + path);
    const std::size_t n = std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
    if (n != text.size()) throw lora::IoError("short write: " + path);
}

int cmd_tx(const CommonArgs& args) {
    const lora::ExperimentConfig cfg = load_experiment(args);
    const lora::WhiteningSequence seq = lora::whitening_for(cfg);
    const auto setup =
        lora::detail::make_trial_setup(cfg, 0, 0, lora::NoiseSpec::none());

    lora::FrameConfig fc = cfg.frame;
    fc.payload = setup.payload;
    for (const std::string& w : lora::lint_frame_config(fc, cfg.params))
        std::fprintf(stderr, "warning: %s\n", w.c_str());

    const std::vector<lora::symbol_t> symbols =
        cfg.uncoded ? lora::map_uncoded(setup.payload, cfg.params.sf)
                    : lora::build_payload_symbols(fc, cfg.params, seq);
    const lora::IqBuffer iq = lora::assemble_frame_iq(fc, cfg.params, symbols);

    lora::write_cf32(args.out_path, iq.samples);
    lora::SidecarInfo info;
    info.sf = cfg.params.sf;
    info.bandwidth_hz = cfg.params.bandwidth_hz;
    info.sample_rate_hz = cfg.params.sample_rate_hz;
    lora::write_sidecar(lora::sidecar_path_for(args.out_path), info);

    std::printf("payload=%s\n", to_hex(setup.payload).c_str());
    std::printf("payload_symbols=%zu\n", symbols.size());
    std::printf("samples=%zu\n", iq.samples.size());
    std::printf("iq=%s\n", args.out_path.c_str());
    std::printf("sidecar=%s\n", lora::sidecar_path_for(args.out_path).c_str());
    return 0;
}

int cmd_rx(const CommonArgs& args) {
    lora::KeyValueConfig kv;
    lora::ExperimentConfig cfg = load_experiment(args, &kv);
    const lora::WhiteningSequence seq = lora::whitening_for(cfg);

    const lora::SidecarInfo info =
        lora::read_sidecar(lora::sidecar_path_for(args.in_path));
    if (kv.has("sf") && info.sf != cfg.params.sf)
        throw lora::ConfigError("config sf disagrees with the capture sidecar");
    cfg.params = lora::make_chirp_params(info.sf, info.bandwidth_hz,
                                         info.bandwidth_hz);

    lora::IqBuffer capture{lora::read_cf32(args.in_path), 0};
    const std::uint32_t os = lora::oversample_factor(info);
    if (os > 1) capture = lora::decimate_to_chip_rate(capture, os);

    lora::FrameConfig fc = cfg.frame;
    fc.payload.assign(cfg.payload_len, 0);
    const std::size_t n_syms =
        cfg.uncoded
            ? (cfg.payload_len * 8 + static_cast<std::size_t>(cfg.params.sf) - 1) /
                  static_cast<std::size_t>(cfg.params.sf)
            : lora::n_payload_symbols(fc, cfg.params);

    lora::SyncConfig sc;
    sc.params = cfg.params;
    sc.preamble_len = fc.preamble_len;
    sc.n_payload_symbols = n_syms;
    sc.detect_min_run = cfg.detect_min_run;
    if (cfg.validate_netid) {
        sc.expected_netid = lora::netid_symbols(fc, cfg.params);
        sc.netid_slack_bins = cfg.netid_slack;
    }
    const lora::SyncResult sr = lora::synchronize(capture, sc);
    if (!sr.ok) {
        std::fprintf(stderr, "synchronization failed at stage: %s\n",
                     sr.failed_stage ? sr.failed_stage : "unknown");
        return 1;
    }

    const lora::IqBuffer up = lora::reference_upchirp(cfg.params);
    std::vector<lora::symbol_t> decisions;
    decisions.reserve(n_syms);
    for (const auto& win : sr.payload_windows)
        decisions.push_back(lora::demodulate(std::span<const lora::cplx>{win},
                                             up.samples, cfg.params));

    std::printf("phase=%s\n", lora::to_string(sr.phase));
    std::printf("s_pr=%u\n", sr.estimate.s_pr);
    std::printf("tau_sto=%.6f\n", sr.estimate.tau_sto());
    std::printf("tau_cfo=%.6f\n", sr.estimate.tau_cfo());
    std::printf("snr_est_db=%.3f\n", sr.estimate.snr_est_db);

    if (cfg.uncoded) {
        const std::vector<std::uint8_t> bits =
            lora::unmap_uncoded(decisions, cfg.params.sf, cfg.payload_len * 8);
        std::vector<std::uint8_t> bytes(cfg.payload_len, 0);
        for (std::size_t b = 0; b < bits.size(); ++b)
            bytes[b / 8] = static_cast<std::uint8_t>(bytes[b / 8] << 1 | bits[b]);
        std::printf("payload=%s\n", to_hex(bytes).c_str());
        return 0;
    }

    const lora::DecodedPayload dec =
        lora::decode_payload_symbols(decisions, fc, cfg.params, seq);
    std::printf("payload=%s\n", to_hex(dec.payload).c_str());
    std::printf("crc_ok=%d\n", dec.crc_ok ? 1 : 0);
    std::printf("corrected=%zu\n", dec.diagnostics.corrected);
    std::printf("detected_uncorrectable=%zu\n",
                dec.diagnostics.detected_uncorrectable);
    return (fc.has_crc && !dec.crc_ok) ? 1 : 0;
}

int cmd_ber(const CommonArgs& args) {
    const lora::ExperimentConfig cfg = load_experiment(args);
    const std::string csv = lora::ber_csv(lora::run_ber_sweep(cfg));
    if (args.out_path.empty())
        std::fputs(csv.c_str(), stdout);
    else
        write_text(args.out_path, csv);
    return 0;
}

int cmd_sync_bench(const CommonArgs& args) {
    const lora::ExperimentConfig cfg = load_experiment(args);
    const std::string csv = lora::sync_bench_csv(lora::run_sync_bench_sweep(cfg));
    if (args.out_path.empty())
        std::fputs(csv.c_str(), stdout);
    else
        write_text(args.out_path, csv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chirp-spread-spectrum modem harness"};
    app.require_subcommand(1);

    CommonArgs args;
    auto add_common = [&](CLI::App* sub, bool needs_out, bool needs_in) {
        sub->add_option("--config", args.config_path, "key=value experiment config")
            ->required();
        auto* out = sub->add_option("--out", args.out_path, "output path");
        if (needs_out) out->required();
        if (needs_in)
            sub->add_option("--in", args.in_path, "input IQ capture (cf32)")
                ->required();
        sub->add_option("--seed", args.seed, "override the master seed");
        sub->add_option("--threads", args.threads, "override the worker thread count");
        sub->add_flag("--genie", args.genie,
                      "bypass synchronization with the injected truth");
    };

    CLI::App* tx = app.add_subcommand("tx", "generate one frame");
    add_common(tx, true, false);
    CLI::App* rx = app.add_subcommand("rx", "synchronize and decode a capture");
    add_common(rx, false, true);
    CLI::App* ber = app.add_subcommand("ber", "run a BER/SER/FER sweep");
    add_common(ber, false, false);
    CLI::App* bench = app.add_subcommand("sync-bench", "benchmark the synchronizer");
    add_common(bench, false, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (tx->parsed()) return cmd_tx(args);
        if (rx->parsed()) return cmd_rx(args);
        if (ber->parsed()) return cmd_ber(args);
        return cmd_sync_bench(args);
    } catch (const lora::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const lora::FrameError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const lora::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
