#pragma once

/* Experiment configuration: plain key=value text ('#' comments, blank lines
 * ignored).  Unknown keys are rejected so typos cannot silently fall back to
 * defaults.  One file describes modulation parameters, frame layout,
 * impairment draws, the SNR sweep and the Monte Carlo shape; the CLI
 * subcommand decides what is actually run.
 */

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lora/channel.hpp"
#include "lora/chirp.hpp"
#include "lora/errors.hpp"
#include "lora/frame.hpp"

namespace lora {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace detail

/* Raw parsed file; typed accessors throw ConfigError with the key name. */
struct KeyValueConfig {
    std::map<std::string, std::string> values;
    mutable std::set<std::string> consumed;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        consumed.insert(key);
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        consumed.insert(key);
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("key \"" + key + "\": expected a number, got \"" +
                              it->second + "\"");
        }
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        consumed.insert(key);
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        try {
            std::size_t used = 0;
            const std::int64_t v = std::stoll(it->second, &used, 0);
            if (used != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("key \"" + key + "\": expected an integer, got \"" +
                              it->second + "\"");
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        consumed.insert(key);
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        const std::string& v = it->second;
        if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
        if (v == "0" || v == "false" || v == "no" || v == "off") return false;
        throw ConfigError("key \"" + key + "\": expected a boolean, got \"" + v + "\"");
    }

    std::vector<double> get_double_list(const std::string& key) const {
        consumed.insert(key);
        std::vector<double> out;
        auto it = values.find(key);
        if (it == values.end()) return out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = detail::trim(tok);
            if (tok.empty()) continue;
            try {
                std::size_t used = 0;
                out.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw ConfigError("key \"" + key + "\": expected numbers, got \"" +
                                  tok + "\"");
            }
        }
        return out;
    }

    void reject_unconsumed() const {
        for (const auto& [key, value] : values)
            if (!consumed.count(key))
                throw ConfigError("unknown configuration key \"" + key + "\"");
    }
};

inline KeyValueConfig parse_config_text(const std::string& text) {
    KeyValueConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected key=value, got \"" + t + "\"");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (cfg.values.count(key))
            throw ConfigError("duplicate configuration key \"" + key + "\"");
        cfg.values[key] = value;
    }
    return cfg;
}

inline KeyValueConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

/* -------------------------------------------------------------- typed view */

enum class OffsetMode : std::uint8_t { none, fixed, random };
enum class PhaseMode : std::uint8_t { none, random };

struct ExperimentConfig {
    ChirpParams params;
    FrameConfig frame;                 // payload filled per-trial when randomized
    bool uncoded = false;              // bypass codec: gray-mapped SF-bit groups
    std::size_t payload_len = 16;
    std::optional<std::vector<std::uint8_t>> fixed_payload;
    std::string whitening_table_path;  // empty -> built-in PN9

    std::vector<double> snr_db_list;   // empty -> noiseless
    NoiseConvention snr_convention = NoiseConvention::per_sample_inverse_sigma2;

    OffsetMode sto_mode = OffsetMode::none;
    double sto_chips = 0.0;            // fixed value
    double sto_max_chips = 0.0;        // random: uniform [0, max)
    OffsetMode cfo_mode = OffsetMode::none;
    double cfo_bins = 0.0;             // fixed value
    double cfo_max_bins = 0.0;         // random: uniform [-max, max)
    PhaseMode phase_mode = PhaseMode::none;

    std::uint64_t trials = 100;
    std::uint64_t seed = 1;
    bool genie = false;
    unsigned threads = 1;
    std::uint32_t detect_min_run = 0;  // 0 -> preamble_len - 1
    bool validate_netid = false;       // reject locks whose identifiers mismatch
    std::uint32_t netid_slack = 1;     // identifier tolerance in bins when validating
};

namespace detail {

inline std::uint8_t hex_nibble(char c) {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw ConfigError(std::string("invalid hex digit '") + c + "'");
}

inline std::vector<std::uint8_t> parse_hex(const std::string& s) {
    if (s.size() % 2 != 0)
        throw ConfigError("hex payload must have an even number of digits");
    std::vector<std::uint8_t> out(s.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(hex_nibble(s[2 * i]) << 4 |
                                           hex_nibble(s[2 * i + 1]));
    return out;
}

inline OffsetMode parse_offset_mode(const std::string& v, const std::string& key) {
    if (v == "none") return OffsetMode::none;
    if (v == "fixed") return OffsetMode::fixed;
    if (v == "random") return OffsetMode::random;
    throw ConfigError("key \"" + key + "\": expected none|fixed|random, got \"" + v + "\"");
}

} // namespace detail

inline ExperimentConfig make_experiment_config(const KeyValueConfig& kv) {
    ExperimentConfig e;
    e.params = make_chirp_params(static_cast<int>(kv.get_int("sf", 7)),
                                 kv.get_double("bandwidth_hz", 125e3),
                                 kv.get_double("sample_rate_hz", 0.0));

    e.frame.preamble_len = static_cast<std::uint32_t>(kv.get_int("preamble_len", 8));
    e.frame.sync_word = static_cast<symbol_t>(kv.get_int("sync_word", 24));
    const std::string netid = kv.get_string("netid_mode", "repeated");
    if (netid == "repeated") e.frame.netid_mode = NetidMode::repeated;
    else if (netid == "paired") e.frame.netid_mode = NetidMode::paired;
    else throw ConfigError("key \"netid_mode\": expected repeated|paired, got \"" +
                           netid + "\"");

    const std::string cr = kv.get_string("cr", "48");
    if (cr == "uncoded") e.uncoded = true;
    else if (cr == "45" || cr == "4/5") e.frame.cr = CodingRate::cr45;
    else if (cr == "46" || cr == "4/6") e.frame.cr = CodingRate::cr46;
    else if (cr == "47" || cr == "4/7") e.frame.cr = CodingRate::cr47;
    else if (cr == "48" || cr == "4/8") e.frame.cr = CodingRate::cr48;
    else throw ConfigError("key \"cr\": expected 45|46|47|48|uncoded, got \"" + cr + "\"");

    e.frame.has_crc = kv.get_bool("crc", !e.uncoded);
    if (e.uncoded && e.frame.has_crc)
        throw ConfigError("uncoded mode carries raw bits; crc must be 0");
    e.frame.crc.poly = static_cast<std::uint16_t>(kv.get_int("crc_poly", 0x1021));
    e.frame.crc.init = static_cast<std::uint16_t>(kv.get_int("crc_init", 0x0000));
    e.frame.crc.reflect = kv.get_bool("crc_reflect", false);
    e.frame.crc.xor_out = static_cast<std::uint16_t>(kv.get_int("crc_xorout", 0x0000));

    e.payload_len = static_cast<std::size_t>(kv.get_int("payload_len", 16));
    if (e.payload_len > 255) throw ConfigError("payload_len must be <= 255");
    const std::string hex = kv.get_string("payload_hex", "");
    if (!hex.empty()) {
        e.fixed_payload = detail::parse_hex(hex);
        e.payload_len = e.fixed_payload->size();
        if (e.payload_len > 255) throw ConfigError("payload_hex longer than 255 bytes");
    }
    e.whitening_table_path = kv.get_string("whitening_table", "");

    e.snr_db_list = kv.get_double_list("snr_db_list");
    const std::string conv = kv.get_string("snr_convention", "per_sample");
    if (conv == "per_sample") e.snr_convention = NoiseConvention::per_sample_inverse_sigma2;
    else if (conv == "paper_n0") e.snr_convention = NoiseConvention::paper_inverse_N0;
    else throw ConfigError("key \"snr_convention\": expected per_sample|paper_n0, got \"" +
                           conv + "\"");

    e.sto_mode = detail::parse_offset_mode(kv.get_string("sto_mode", "none"), "sto_mode");
    e.sto_chips = kv.get_double("sto_chips", 0.0);
    e.sto_max_chips = kv.get_double("sto_max_chips", 0.0);
    if (e.sto_chips < 0.0 || e.sto_max_chips < 0.0)
        throw ConfigError("timing offsets must be >= 0");
    e.cfo_mode = detail::parse_offset_mode(kv.get_string("cfo_mode", "none"), "cfo_mode");
    e.cfo_bins = kv.get_double("cfo_bins", 0.0);
    e.cfo_max_bins = kv.get_double("cfo_max_bins", 0.0);
    if (e.cfo_max_bins < 0.0) throw ConfigError("cfo_max_bins must be >= 0");

    const std::string phase = kv.get_string("phase_mode", "none");
    if (phase == "none") e.phase_mode = PhaseMode::none;
    else if (phase == "random") e.phase_mode = PhaseMode::random;
    else throw ConfigError("key \"phase_mode\": expected none|random, got \"" + phase + "\"");

    const std::int64_t trials = kv.get_int("trials", 100);
    if (trials <= 0) throw ConfigError("trials must be positive");
    e.trials = static_cast<std::uint64_t>(trials);
    e.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
    e.genie = kv.get_bool("genie", false);
    const std::int64_t threads = kv.get_int("threads", 1);
    if (threads <= 0) throw ConfigError("threads must be positive");
    e.threads = static_cast<unsigned>(threads);
    e.detect_min_run = static_cast<std::uint32_t>(kv.get_int("detect_min_run", 0));
    e.validate_netid = kv.get_bool("validate_netid", false);
    const std::int64_t slack = kv.get_int("netid_slack", 1);
    if (slack < 0) throw ConfigError("netid_slack must be >= 0");
    e.netid_slack = static_cast<std::uint32_t>(slack);

    kv.reject_unconsumed();
    validate_frame_config(FrameConfig{e.frame.preamble_len, e.frame.sync_word,
                                      e.frame.netid_mode, e.frame.cr, e.frame.has_crc,
                                      e.frame.crc, std::vector<std::uint8_t>(e.payload_len)},
                          e.params);
    return e;
}

} // namespace lora
