#include "sparsesense/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace sparsesense {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string strip_value(const std::string &raw) {
    // drop a trailing comment that is not inside quotes
    bool quoted = false;
    std::size_t cut = raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '"') {
            quoted = !quoted;
        } else if (!quoted && (raw[i] == '#' || raw[i] == ';')) {
            cut = i;
            break;
        }
    }
    std::string v = trim(std::string_view(raw).substr(0, cut));
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        v = v.substr(1, v.size() - 2);
    }
    return v;
}

std::map<std::string, std::string> flatten(const std::string &text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error &e) {
        throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
    }
    std::map<std::string, std::string> out;
    for (const auto &[key, node] : tree) {
        if (node.empty()) {
            out[key] = strip_value(node.data());
            continue;
        }
        for (const auto &[child, leaf] : node) {
            out[key + "." + child] = strip_value(leaf.data());
        }
    }
    return out;
}

// Typed access to the flattened key set. Every consumed key is removed so
// the leftovers are exactly the unknown keys.
class Keys {
  public:
    explicit Keys(std::map<std::string, std::string> values) : values_(std::move(values)) {}

    template <typename T, typename Parse>
    bool take(const std::string &key, T &dst, Parse parse) {
        auto it = values_.find(key);
        if (it == values_.end()) {
            return false;
        }
        const std::string raw = it->second;
        values_.erase(it);
        dst = parse(key, raw);
        return true;
    }

    bool integer(const std::string &key, int &dst, int min) {
        if (!take(key, dst, parse_int)) {
            return false;
        }
        if (dst < min) {
            throw ConfigError(fmt::format("{}: value {} is out of range (must be >= {})",
                                          key, dst, min));
        }
        return true;
    }

    bool real(const std::string &key, double &dst) { return take(key, dst, parse_double); }

    bool boolean(const std::string &key, bool &dst) { return take(key, dst, parse_bool); }

    bool text(const std::string &key, std::string &dst) {
        return take(key, dst, [](const std::string &, const std::string &v) { return v; });
    }

    bool seed(const std::string &key, std::uint64_t &dst) {
        return take(key, dst, [](const std::string &k, const std::string &v) {
            std::uint64_t out = 0;
            const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
            if (ec != std::errc() || ptr != v.data() + v.size()) {
                throw ConfigError(fmt::format("{}: expected unsigned integer, got '{}'", k, v));
            }
            return out;
        });
    }

    bool int_list(const std::string &key, std::vector<int> &dst) {
        return take(key, dst, [](const std::string &k, const std::string &v) {
            std::vector<int> out;
            for (const auto &item : split_list(v)) {
                out.push_back(parse_int(k, item));
            }
            return out;
        });
    }

    bool real_list(const std::string &key, std::vector<double> &dst) {
        return take(key, dst, [](const std::string &k, const std::string &v) {
            std::vector<double> out;
            for (const auto &item : split_list(v)) {
                out.push_back(parse_double(k, item));
            }
            return out;
        });
    }

    std::vector<std::string> leftovers() const {
        std::vector<std::string> out;
        for (const auto &entry : values_) {
            out.push_back(entry.first);
        }
        return out;
    }

    static std::vector<std::string> split_list(std::string v) {
        if (!v.empty() && v.front() == '[' && v.back() == ']') {
            v = v.substr(1, v.size() - 2);
        }
        std::vector<std::string> out;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) {
                out.push_back(item);
            }
        }
        return out;
    }

    static int parse_int(const std::string &key, const std::string &v) {
        int out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size()) {
            throw ConfigError(fmt::format("{}: expected integer, got '{}'", key, v));
        }
        return out;
    }

    static double parse_double(const std::string &key, const std::string &v) {
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
            throw ConfigError(fmt::format("{}: expected number, got '{}'", key, v));
        }
        return out;
    }

    static bool parse_bool(const std::string &key, const std::string &v) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, v));
    }

  private:
    std::map<std::string, std::string> values_;
};

template <typename Fn>
auto with_key(const std::string &key, Fn fn) {
    try {
        return fn();
    } catch (const ConfigError &e) {
        throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
}

void finish(const Keys &keys, bool strict, std::vector<std::string> *unknown) {
    const auto rest = keys.leftovers();
    if (rest.empty()) {
        return;
    }
    if (strict) {
        throw ConfigError(fmt::format("unknown config key '{}'", rest.front()));
    }
    if (unknown) {
        *unknown = rest;
    }
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

ExperimentConfig parse_config_text(const std::string &text, bool strict) {
    Keys keys(flatten(text));
    ExperimentConfig out;
    SimulationConfig &sim = out.sim;
    std::string name;

    keys.integer("model.p", sim.model.p, 1);
    if (keys.real("model.ridge", sim.model.ridge) && sim.model.ridge < 0.0) {
        throw ConfigError("model.ridge: value must be >= 0");
    }
    keys.integer("model.refresh", sim.model.refresh_interval, 1);
    keys.integer("model.window", sim.model.weights.window, 1);
    if (keys.text("model.predictor", name)) {
        sim.predictor = with_key("model.predictor", [&] { return predictor_from_string(name); });
    }

    if (keys.text("weights.strategy", name)) {
        sim.model.weights.strategy =
            with_key("weights.strategy", [&] { return weight_strategy_from_string(name); });
    }
    keys.integer("weights.rank", sim.model.weights.rank, 1);
    keys.integer("weights.nmf_iters", sim.model.weights.nmf_iters, 0);
    if (keys.real("weights.bandwidth", sim.model.weights.bandwidth) &&
        !(sim.model.weights.bandwidth > 0.0)) {
        throw ConfigError("weights.bandwidth: value must be positive");
    }
    keys.boolean("weights.per_lag", sim.model.weights.per_lag);

    if (keys.text("alloc.strategy", name)) {
        sim.alloc.strategy =
            with_key("alloc.strategy", [&] { return alloc_strategy_from_string(name); });
    }
    keys.integer("alloc.k", sim.alloc.k, 1);
    if (keys.real("alloc.eta", sim.alloc.eta) && sim.alloc.eta < 0.0) {
        throw ConfigError("alloc.eta: value must be >= 0");
    }
    keys.integer("alloc.tu_window", sim.alloc.tu_window, 1);
    if (keys.real("alloc.hazard_threshold", sim.alloc.hazard_threshold) &&
        !(sim.alloc.hazard_threshold > 0.0)) {
        throw ConfigError("alloc.hazard_threshold: value must be positive");
    }
    keys.int_list("alloc.static_ids", sim.alloc.static_ids);
    if (keys.text("alloc.loss_scope", name)) {
        sim.alloc.loss_scope =
            with_key("alloc.loss_scope", [&] { return loss_scope_from_string(name); });
    }
    keys.boolean("alloc.sim_reversed", sim.alloc.sim_reversed);

    keys.integer("sim.cycles", sim.cycles, 1);
    keys.integer("sim.warmup", sim.warmup, 1);
    keys.seed("sim.seed", sim.seed);
    if (keys.real("sim.sparsity", sim.sparsity) &&
        !(sim.sparsity >= 0.0 && sim.sparsity < 1.0)) {
        throw ConfigError("sim.sparsity: value must be in [0, 1)");
    }

    keys.boolean("report.pooled", sim.pooled);

    finish(keys, strict, &out.unknown_keys);
    sim.validate();
    return out;
}

ExperimentConfig parse_config(const std::filesystem::path &path, bool strict) {
    return parse_config_text(read_file(path), strict);
}

std::string ExperimentConfig::canonical() const {
    const SimulationConfig &s = sim;
    std::map<std::string, std::string> kv;
    kv["model.p"] = fmt::format("{}", s.model.p);
    kv["model.ridge"] = fmt::format("{:.17g}", s.model.ridge);
    kv["model.refresh"] = fmt::format("{}", s.model.refresh_interval);
    kv["model.window"] = fmt::format("{}", s.model.weights.window);
    kv["model.predictor"] = std::string(to_string(s.predictor));
    kv["weights.strategy"] = std::string(to_string(s.model.weights.strategy));
    kv["weights.rank"] = fmt::format("{}", s.model.weights.rank);
    kv["weights.nmf_iters"] = fmt::format("{}", s.model.weights.nmf_iters);
    kv["weights.bandwidth"] = fmt::format("{:.17g}", s.model.weights.bandwidth);
    kv["weights.per_lag"] = s.model.weights.per_lag ? "true" : "false";
    kv["alloc.strategy"] = std::string(to_string(s.alloc.strategy));
    kv["alloc.k"] = fmt::format("{}", s.alloc.k);
    kv["alloc.eta"] = fmt::format("{:.17g}", s.alloc.eta);
    kv["alloc.tu_window"] = fmt::format("{}", s.alloc.tu_window);
    kv["alloc.hazard_threshold"] = fmt::format("{:.17g}", s.alloc.hazard_threshold);
    std::string ids;
    for (std::size_t i = 0; i < s.alloc.static_ids.size(); ++i) {
        ids += (i ? "," : "") + std::to_string(s.alloc.static_ids[i]);
    }
    kv["alloc.static_ids"] = ids;
    kv["alloc.loss_scope"] = std::string(to_string(s.alloc.loss_scope));
    kv["alloc.sim_reversed"] = s.alloc.sim_reversed ? "true" : "false";
    kv["sim.cycles"] = fmt::format("{}", s.cycles);
    kv["sim.warmup"] = fmt::format("{}", s.warmup);
    kv["sim.seed"] = fmt::format("{}", s.seed);
    kv["sim.sparsity"] = fmt::format("{:.17g}", s.sparsity);
    kv["report.pooled"] = s.pooled ? "true" : "false";

    std::string out;
    for (const auto &[k, v] : kv) {
        out += k + " = " + v + "\n";
    }
    return out;
}

std::string ExperimentConfig::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

SyntheticSpec parse_synthetic_spec_text(const std::string &text, bool strict) {
    Keys keys(flatten(text));
    SyntheticSpec spec;
    std::string name;
    keys.integer("synthetic.locations", spec.num_locations, 1);
    keys.integer("synthetic.cycles", spec.num_cycles, 1);
    keys.integer("synthetic.p", spec.p, 1);
    keys.real("synthetic.phi_min", spec.phi_min);
    keys.real("synthetic.phi_max", spec.phi_max);
    std::vector<double> phi;
    if (keys.real_list("synthetic.phi", phi)) {
        // lag-major: all locations for lag 1, then lag 2, ...
        const auto expected = static_cast<std::size_t>(spec.num_locations) * spec.p;
        if (phi.size() != expected) {
            throw ConfigError(fmt::format("synthetic.phi: expected {} values, got {}",
                                          expected, phi.size()));
        }
        spec.true_phi = Eigen::Map<const Matrix>(phi.data(), spec.num_locations, spec.p);
    }
    if (keys.text("synthetic.weight_kind", name)) {
        spec.weight_kind = with_key("synthetic.weight_kind",
                                    [&] { return synthetic_weights_from_string(name); });
    }
    keys.real("synthetic.bandwidth", spec.bandwidth);
    keys.real("synthetic.noise_sigma", spec.noise_sigma);
    keys.real("synthetic.base_level", spec.base_level);
    keys.seed("synthetic.seed", spec.seed);
    keys.boolean("hotspot.enabled", spec.hotspot.enabled);
    keys.real("hotspot.amplitude", spec.hotspot.amplitude);
    keys.real("hotspot.width", spec.hotspot.width);
    keys.real("hotspot.step", spec.hotspot.step);
    finish(keys, strict, nullptr);
    spec.validate();
    return spec;
}

SyntheticSpec parse_synthetic_spec(const std::filesystem::path &path, bool strict) {
    return parse_synthetic_spec_text(read_file(path), strict);
}

} // namespace sparsesense
