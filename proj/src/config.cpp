#include "lrnbv/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace lrnbv {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v))
        throw ConfigError(key, "config key '" + key + "': expected a finite number, got '" + text + "'");
    return v;
}

long long parse_int(const std::string& key, const std::string& text) {
    long long v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ConfigError(key, "config key '" + key + "': expected an integer, got '" + text + "'");
    return v;
}

[[noreturn]] void reject(const std::string& key, const std::string& rule) {
    throw ConfigError(key, "config key '" + key + "' " + rule);
}

struct Key {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

using DoubleField = double& (*)(RunConfig&);
using IntField = int& (*)(RunConfig&);

enum class Range { Positive, NonNegative, Probability, Any };

Key real(const std::string& name, DoubleField field, Range range) {
    return {name,
            [=](RunConfig& c, const std::string& text) {
                const double v = parse_double(name, text);
                switch (range) {
                    case Range::Positive:
                        if (!(v > 0.0)) reject(name, "must be > 0");
                        break;
                    case Range::NonNegative:
                        if (!(v >= 0.0)) reject(name, "must be >= 0");
                        break;
                    case Range::Probability:
                        if (!(v > 0.0 && v < 1.0)) reject(name, "must lie in (0, 1)");
                        break;
                    case Range::Any:
                        break;
                }
                field(c) = v;
            },
            [=](const RunConfig& c) { return format_number(field(const_cast<RunConfig&>(c))); }};
}

Key integer(const std::string& name, IntField field, int min_value) {
    return {name,
            [=](RunConfig& c, const std::string& text) {
                const long long v = parse_int(name, text);
                if (v < min_value || v > std::numeric_limits<int>::max())
                    reject(name, "must be an integer >= " + std::to_string(min_value));
                field(c) = static_cast<int>(v);
            },
            [=](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        k.push_back(real("exploration_weight", [](RunConfig& c) -> double& { return c.recon.weights.exploration; }, Range::NonNegative));
        k.push_back(real("density_weight", [](RunConfig& c) -> double& { return c.recon.weights.density; }, Range::NonNegative));
        k.push_back(real("quality_weight", [](RunConfig& c) -> double& { return c.recon.weights.quality; }, Range::NonNegative));
        k.push_back(real("visited_weight", [](RunConfig& c) -> double& { return c.recon.weights.visited; }, Range::NonNegative));
        k.push_back(integer("num_iterations", [](RunConfig& c) -> int& { return c.recon.planner.max_iterations; }, 1));
        k.push_back(integer("sample_per_iteration", [](RunConfig& c) -> int& { return c.recon.planner.samples_per_iteration; }, 1));
        k.push_back(integer("num_cached_nodes", [](RunConfig& c) -> int& { return c.recon.planner.cache_capacity_initial; }, 1));
        k.push_back(real("visited_cells_grid_size", [](RunConfig& c) -> double& { return c.recon.visited_cell_size; }, Range::Positive));
        k.push_back(real("octomap_resolution", [](RunConfig& c) -> double& { return c.recon.map_resolution; }, Range::Positive));

        k.push_back(real("p_hit", [](RunConfig& c) -> double& { return c.recon.occupancy.p_hit; }, Range::Probability));
        k.push_back(real("p_miss", [](RunConfig& c) -> double& { return c.recon.occupancy.p_miss; }, Range::Probability));
        k.push_back(real("p_clamp_min", [](RunConfig& c) -> double& { return c.recon.occupancy.p_clamp_min; }, Range::Probability));
        k.push_back(real("p_clamp_max", [](RunConfig& c) -> double& { return c.recon.occupancy.p_clamp_max; }, Range::Probability));
        k.push_back(real("p_occupied", [](RunConfig& c) -> double& { return c.recon.occupancy.p_occupied; }, Range::Probability));
        k.push_back(real("p_free", [](RunConfig& c) -> double& { return c.recon.occupancy.p_free; }, Range::Probability));

        k.push_back(real("dbscan_eps", [](RunConfig& c) -> double& { return c.recon.segmentation.dbscan.eps; }, Range::Positive));
        k.push_back(integer("dbscan_min_pts", [](RunConfig& c) -> int& { return c.recon.segmentation.dbscan.min_pts; }, 1));
        k.push_back(real("roi_margin", [](RunConfig& c) -> double& { return c.recon.segmentation.roi_margin; }, Range::NonNegative));

        k.push_back(real("density_radius", [](RunConfig& c) -> double& { return c.recon.utility.density_radius; }, Range::Positive));
        k.push_back(real("ray_range", [](RunConfig& c) -> double& { return c.recon.utility.ray_range; }, Range::Positive));
        k.push_back(integer("ray_samples", [](RunConfig& c) -> int& { return c.recon.utility.ray_samples; }, 2));

        k.push_back(real("tau_factor", [](RunConfig& c) -> double& { return c.recon.planner.tau_factor; }, Range::Any));
        k.push_back({"tau_fixed",
                     [](RunConfig& c, const std::string& text) {
                         if (text == "none") {
                             c.recon.planner.tau_fixed.reset();
                             return;
                         }
                         c.recon.planner.tau_fixed = parse_double("tau_fixed", text);
                     },
                     [](const RunConfig& c) {
                         return c.recon.planner.tau_fixed ? format_number(*c.recon.planner.tau_fixed) : std::string("none");
                     }});
        k.push_back(integer("cache_capacity_min", [](RunConfig& c) -> int& { return c.recon.planner.cache_capacity_min; }, 1));
        k.push_back(real("step_max", [](RunConfig& c) -> double& { return c.recon.planner.step_max; }, Range::Positive));
        k.push_back(real("standoff_min", [](RunConfig& c) -> double& { return c.recon.planner.standoff_min; }, Range::NonNegative));
        k.push_back({"orientation_candidates",
                     [](RunConfig& c, const std::string& text) {
                         const long long v = parse_int("orientation_candidates", text);
                         if (v != 1 && v != 5) reject("orientation_candidates", "must be 1 or 5");
                         c.recon.planner.orientation_candidates = static_cast<int>(v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.recon.planner.orientation_candidates); }});
        k.push_back(real("orientation_perturbation_deg", [](RunConfig& c) -> double& { return c.recon.planner.orientation_perturbation_deg; }, Range::NonNegative));
        k.push_back(integer("max_sampling_attempts", [](RunConfig& c) -> int& { return c.recon.planner.max_sampling_attempts; }, 1));
        k.push_back(integer("max_acquisitions_without_object", [](RunConfig& c) -> int& { return c.recon.planner.max_acquisitions_without_object; }, 1));

        k.push_back(real("fov_h_deg", [](RunConfig& c) -> double& { return c.recon.sensor.fov_h_deg; }, Range::Positive));
        k.push_back(real("fov_v_deg", [](RunConfig& c) -> double& { return c.recon.sensor.fov_v_deg; }, Range::Positive));
        k.push_back(integer("res_u", [](RunConfig& c) -> int& { return c.recon.sensor.res_u; }, 1));
        k.push_back(integer("res_v", [](RunConfig& c) -> int& { return c.recon.sensor.res_v; }, 1));
        k.push_back(real("max_range", [](RunConfig& c) -> double& { return c.recon.sensor.max_range; }, Range::Positive));
        k.push_back(real("noise_sigma", [](RunConfig& c) -> double& { return c.recon.sensor.noise_sigma; }, Range::NonNegative));

        k.push_back(real("coverage_distance", [](RunConfig& c) -> double& { return c.coverage_distance; }, Range::Positive));
        k.push_back(real("coverage_sample_spacing", [](RunConfig& c) -> double& { return c.coverage_sample_spacing; }, Range::Positive));
        k.push_back(real("heu_semi_axis_a", [](RunConfig& c) -> double& { return c.heu_semi_axis_a; }, Range::Positive));
        k.push_back(real("heu_semi_axis_b", [](RunConfig& c) -> double& { return c.heu_semi_axis_b; }, Range::Positive));
        k.push_back(real("heu_height_offset", [](RunConfig& c) -> double& { return c.heu_height_offset; }, Range::Any));
        k.push_back({"seed",
                     [](RunConfig& c, const std::string& text) {
                         std::uint64_t v = 0;
                         const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
                         if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
                             reject("seed", "must be a non-negative integer");
                         c.seed = v;
                     },
                     [](const RunConfig& c) { return std::to_string(c.seed); }});
        return k;
    }();
    return table;
}

const Key* find_key(const std::string& name) {
    for (const Key& k : keys())
        if (k.name == name) return &k;
    return nullptr;
}

}  // namespace

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
    const Key* k = find_key(key);
    if (!k) throw ConfigError(key, "unknown config key '" + key + "'");
    k->set(config, value);
}

void validate_config(const RunConfig& config) {
    const ReconstructionConfig& r = config.recon;
    if (!(r.occupancy.p_clamp_min < r.occupancy.p_clamp_max)) reject("p_clamp_min", "must be < p_clamp_max");
    if (!(r.occupancy.p_free < r.occupancy.p_occupied)) reject("p_free", "must be < p_occupied");
    if (r.sensor.fov_h_deg > 180.0) reject("fov_h_deg", "must be <= 180");
    if (r.sensor.fov_v_deg > 180.0) reject("fov_v_deg", "must be <= 180");
    if (r.utility.ray_range > r.sensor.max_range) reject("ray_range", "must be <= max_range");
    if (r.planner.cache_capacity_min > r.planner.cache_capacity_initial)
        reject("cache_capacity_min", "must be <= num_cached_nodes");
    try {
        r.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", e.what());
    }
}

RunConfig parse_config(const std::string& text) {
    RunConfig config;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, "line " + std::to_string(number) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            set_config_value(config, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(e.key(), "line " + std::to_string(number) + ": " + e.what());
        }
    }
    validate_config(config);
    return config;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Key& k : keys()) out.emplace_back(k.name, k.get(config));
    return out;
}

std::string echo_config(const RunConfig& config, const std::string& prefix) {
    std::string out;
    for (const auto& [key, value] : config_entries(config)) out += prefix + key + " = " + value + "\n";
    return out;
}

}  // namespace lrnbv
