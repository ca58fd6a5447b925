#pragma once

#include "lrnbv/metrics.hpp"
#include "lrnbv/planner.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lrnbv {

/// Everything a run reads from a config file. Defaults are the shipped values.
struct RunConfig {
    ReconstructionConfig recon;
    double coverage_distance = 0.02;
    double coverage_sample_spacing = 0.01;  ///< reference surface sampling for coverage
    double heu_semi_axis_a = 0.45;
    double heu_semi_axis_b = 0.35;
    double heu_height_offset = 0.45;  ///< ellipse plane height above the table
    std::uint64_t seed = 0;

    EllipseParams ellipse(double table_height) const {
        return {heu_semi_axis_a, heu_semi_axis_b, table_height + heu_height_offset};
    }
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : std::runtime_error(what), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Parses `key = value` lines (`#` comments, blank lines allowed) over the
/// defaults. Unknown keys, malformed values and violated constraints throw
/// ConfigError naming the key.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

/// Sets one key from its textual value; throws ConfigError.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Cross-key checks after all keys are set; throws ConfigError.
void validate_config(const RunConfig& config);

/// All keys in a fixed order with their resolved values.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);

/// One `<prefix>key = value` line per entry.
std::string echo_config(const RunConfig& config, const std::string& prefix = "# ");

/// Shortest round-trip decimal text.
std::string format_number(double v);

}  // namespace lrnbv
