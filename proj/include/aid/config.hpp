#ifndef AID_CONFIG_HPP
#define AID_CONFIG_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aid/actor_critic.hpp"
#include "aid/backbone.hpp"
#include "aid/csv.hpp"
#include "aid/policy.hpp"
#include "aid/rng.hpp"
#include "aid/schedule.hpp"
#include "aid/task.hpp"

namespace aid {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& key, const std::string& what)
        : std::runtime_error("config: " + key + ": " + what) {}
};

// Line-oriented key = value format with [section] headers. '#' starts a
// comment; blank lines are ignored. Unknown sections or keys are errors so
// typos cannot silently fall back to defaults.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_text(ss.str());
    }

    static KeyValueConfig parse_text(const std::string& text) {
        KeyValueConfig cfg;
        std::stringstream ss(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(ss, line)) {
            ++lineno;
            std::size_t hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw std::runtime_error("config: malformed section header at line " +
                                             std::to_string(lineno));
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("config: expected key = value at line " +
                                         std::to_string(lineno));
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
            cfg.values_[section.empty() ? key : section + "." + key] = value;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        auto it = values_.find(key);
        consumed_.insert(consumed_.end(), key);
        if (it == values_.end()) return fallback;
        return it->second;
    }

    double get_double(const std::string& key, double fallback) {
        std::string s = get_string(key, format_double(fallback));
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(key, "not a number: '" + s + "'");
        }
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) {
        std::string s = get_string(key, std::to_string(fallback));
        try {
            std::size_t pos = 0;
            std::int64_t v = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(key, "not an integer: '" + s + "'");
        }
    }

    std::vector<std::string> get_list(const std::string& key, const std::string& fallback) {
        std::string s = get_string(key, fallback);
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    // Every key must have been read by a getter; catches misspelled keys.
    void check_all_consumed() const {
        for (const auto& [k, v] : values_) {
            bool seen = false;
            for (const std::string& c : consumed_)
                if (c == k) { seen = true; break; }
            if (!seen) throw ConfigError(k, "unknown key");
        }
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        std::size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        std::size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::string> values_;  // ordered, so hashing is canonical
    std::vector<std::string> consumed_;
};

// Fully validated run configuration assembled from the text format.
struct RunConfig {
    // backbone
    int dimension = 64;
    int component_count = 1;
    double component_variance = 0.05;
    double mean_scale = 1.0;
    std::uint64_t mean_seed = 7;
    std::vector<Vec> explicit_means;  // overrides seeded means when nonempty

    Schedule schedule;

    // task
    MaskFamily mask_family = MaskFamily::freeform;
    int height = 8;
    int width = 8;
    TerminalWeights weights;
    double data_range = 0.0;  // 0 = derive from the backbone
    std::vector<int> fixed_mask_bits;

    // policy
    double beta = 1e-3;
    double lambda = 1e-3;

    TrainConfig train;

    // eval
    int eval_task_count = 200;
    std::vector<MaskFamily> eval_families = {MaskFamily::freeform};
    std::vector<std::uint64_t> eval_seeds = {1, 2, 3};
    std::vector<int> deploy_steps = {18, 12};
    double dps_strength = 1.0;
    std::int64_t reference_backbone_params = 61800000;

    // sweep
    bool sweep_lq_mode = false;
    int sweep_iterations = 0;  // 0 = use train.iterations

    // paths
    std::string out_dir = "out";
    std::string checkpoint_path;

    std::uint64_t config_hash = 0;
};

inline RunConfig resolve_config(KeyValueConfig& kv) {
    RunConfig c;
    c.dimension = static_cast<int>(kv.get_int("backbone.dimension", c.dimension));
    if (c.dimension < 1) throw ConfigError("backbone.dimension", "must be >= 1");
    c.component_count = static_cast<int>(kv.get_int("backbone.component_count", c.component_count));
    if (c.component_count < 1) throw ConfigError("backbone.component_count", "must be >= 1");
    c.component_variance = kv.get_double("backbone.component_variance", c.component_variance);
    if (c.component_variance < 0.0) throw ConfigError("backbone.component_variance", "must be >= 0");
    c.mean_scale = kv.get_double("backbone.mean_scale", c.mean_scale);
    c.mean_seed = static_cast<std::uint64_t>(kv.get_int("backbone.mean_seed", static_cast<std::int64_t>(c.mean_seed)));
    std::string means = kv.get_string("backbone.means", "");
    if (!means.empty()) {
        std::stringstream comps(means);
        std::string comp;
        while (std::getline(comps, comp, ';')) {
            Vec m;
            std::stringstream vs(comp);
            double v;
            while (vs >> v) m.push_back(v);
            if (static_cast<int>(m.size()) != c.dimension)
                throw ConfigError("backbone.means", "component length does not match dimension");
            c.explicit_means.push_back(std::move(m));
        }
        if (static_cast<int>(c.explicit_means.size()) != c.component_count)
            throw ConfigError("backbone.means", "component count mismatch");
    }

    c.schedule.rho = kv.get_double("schedule.rho", c.schedule.rho);
    c.schedule.sigma_min = kv.get_double("schedule.sigma_min", c.schedule.sigma_min);
    c.schedule.sigma_max = kv.get_double("schedule.sigma_max", c.schedule.sigma_max);
    c.schedule.horizon = kv.get_double("schedule.horizon", c.schedule.horizon);
    try {
        c.schedule.validate();
    } catch (const std::exception& e) {
        throw ConfigError("schedule", e.what());
    }

    std::string fam = kv.get_string("task.mask_family", "freeform");
    std::string fixed_bits = kv.get_string("task.fixed_mask", "");
    if (fam == "fixed") {
        if (fixed_bits.empty()) throw ConfigError("task.fixed_mask", "required for mask_family = fixed");
        for (char ch : fixed_bits) {
            if (ch != '0' && ch != '1') throw ConfigError("task.fixed_mask", "bits must be 0/1");
            c.fixed_mask_bits.push_back(ch - '0');
        }
        if (static_cast<int>(c.fixed_mask_bits.size()) != c.dimension)
            throw ConfigError("task.fixed_mask", "length does not match dimension");
    } else {
        try {
            c.mask_family = mask_family_from_string(fam);
        } catch (const std::exception& e) {
            throw ConfigError("task.mask_family", e.what());
        }
    }
    c.height = static_cast<int>(kv.get_int("task.height", c.height));
    c.width = static_cast<int>(kv.get_int("task.width", c.width));
    if (c.fixed_mask_bits.empty() && c.height * c.width != c.dimension)
        throw ConfigError("task.height", "height * width must equal backbone.dimension");
    c.weights.alpha_vis = kv.get_double("task.alpha_vis", c.weights.alpha_vis);
    c.weights.alpha_hole = kv.get_double("task.alpha_hole", c.weights.alpha_hole);
    try {
        c.weights.validate();
    } catch (const std::exception& e) {
        throw ConfigError("task.alpha_vis", e.what());
    }
    c.data_range = kv.get_double("task.data_range", c.data_range);
    if (c.data_range < 0.0) throw ConfigError("task.data_range", "must be >= 0");

    c.beta = kv.get_double("policy.beta", c.beta);
    c.lambda = kv.get_double("policy.lambda", c.lambda);
    if (!(c.beta > 0.0)) throw ConfigError("policy.beta", "must be > 0");
    if (!(c.lambda > 0.0)) throw ConfigError("policy.lambda", "must be > 0");

    c.train.grid_steps = static_cast<int>(kv.get_int("train.steps", c.train.grid_steps));
    c.train.iterations = static_cast<int>(kv.get_int("train.iterations", c.train.iterations));
    c.train.critic_rate = kv.get_double("train.critic_rate", c.train.critic_rate);
    c.train.actor_rate = kv.get_double("train.actor_rate", c.train.actor_rate);
    c.train.clip_norm = kv.get_double("train.clip_norm", c.train.clip_norm);
    c.train.batch_size = static_cast<int>(kv.get_int("train.batch_size", c.train.batch_size));
    c.train.seed = static_cast<std::uint64_t>(kv.get_int("train.seed", 1));
    c.train.weights = c.weights;
    try {
        c.train.validate();
    } catch (const std::exception& e) {
        throw ConfigError("train", e.what());
    }

    c.eval_task_count = static_cast<int>(kv.get_int("eval.task_count", c.eval_task_count));
    if (c.eval_task_count < 1) throw ConfigError("eval.task_count", "must be >= 1");
    c.eval_families.clear();
    for (const std::string& f : kv.get_list("eval.families", "freeform")) {
        try {
            c.eval_families.push_back(mask_family_from_string(f));
        } catch (const std::exception& e) {
            throw ConfigError("eval.families", e.what());
        }
    }
    c.eval_seeds.clear();
    for (const std::string& s : kv.get_list("eval.seeds", "1,2,3")) {
        try {
            c.eval_seeds.push_back(std::stoull(s));
        } catch (const std::exception&) {
            throw ConfigError("eval.seeds", "not an integer: '" + s + "'");
        }
    }
    c.deploy_steps.clear();
    for (const std::string& s : kv.get_list("eval.deploy_steps", "18,12")) {
        int k = 0;
        try {
            k = std::stoi(s);
        } catch (const std::exception&) {
            throw ConfigError("eval.deploy_steps", "not an integer: '" + s + "'");
        }
        if (k < 2) throw ConfigError("eval.deploy_steps", "K must be >= 2");
        c.deploy_steps.push_back(k);
    }
    c.dps_strength = kv.get_double("eval.dps_strength", c.dps_strength);
    if (!(c.dps_strength > 0.0)) throw ConfigError("eval.dps_strength", "must be > 0");
    c.reference_backbone_params =
        kv.get_int("eval.reference_backbone_params", c.reference_backbone_params);
    if (c.reference_backbone_params < 1)
        throw ConfigError("eval.reference_backbone_params", "must be >= 1");

    std::string mode = kv.get_string("sweep.mode", "full");
    if (mode == "lq")
        c.sweep_lq_mode = true;
    else if (mode != "full")
        throw ConfigError("sweep.mode", "must be lq or full");
    c.sweep_iterations = static_cast<int>(kv.get_int("sweep.iterations", 0));
    if (c.sweep_iterations < 0) throw ConfigError("sweep.iterations", "must be >= 0");

    c.out_dir = kv.get_string("paths.out_dir", c.out_dir);
    c.checkpoint_path = kv.get_string("paths.checkpoint", "");

    kv.check_all_consumed();

    // Canonical serialization of the resolved values, hashed into every output.
    std::string canon;
    for (const auto& [k, v] : kv.values()) canon += k + "=" + v + "\n";
    canon += "resolved.dimension=" + std::to_string(c.dimension) + "\n";
    canon += "resolved.beta=" + format_double(c.beta) + "\n";
    canon += "resolved.lambda=" + format_double(c.lambda) + "\n";
    canon += "resolved.seed=" + std::to_string(c.train.seed) + "\n";
    c.config_hash = detail::fnv1a(canon);
    return c;
}

inline RunConfig load_config(const std::string& path) {
    KeyValueConfig kv = KeyValueConfig::parse_file(path);
    return resolve_config(kv);
}

// Component means drawn once from a dedicated seed, so the data
// distribution is part of the configuration, not the run.
inline ScoreBackbone make_backbone(const RunConfig& c) {
    ScoreBackbone b;
    b.dimension = c.dimension;
    b.component_variance = c.component_variance;
    int n = c.component_count;
    b.weights.assign(static_cast<std::size_t>(n), 1.0 / n);
    // nudge the last weight so the sum is exactly 1 under rounding
    double s = 0.0;
    for (int i = 0; i + 1 < n; ++i) s += b.weights[static_cast<std::size_t>(i)];
    b.weights[static_cast<std::size_t>(n - 1)] = 1.0 - s;
    if (!c.explicit_means.empty()) {
        b.means = c.explicit_means;
    } else {
        b.means.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Rng rng = Rng::stream(c.mean_seed, "means", static_cast<std::uint64_t>(i));
            Vec m(static_cast<std::size_t>(c.dimension));
            for (double& v : m) v = rng.uniform(-c.mean_scale, c.mean_scale);
            b.means[static_cast<std::size_t>(i)] = std::move(m);
        }
    }
    b.validate();
    return b;
}

// Max spread of the component means plus 3 standard deviations; synthetic
// data has no canonical range, so derive one from the distribution.
inline double derived_data_range(const ScoreBackbone& b) {
    double lo = 1e300, hi = -1e300;
    for (const Vec& m : b.means)
        for (double v : m) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    double spread = (hi > lo) ? hi - lo : 0.0;
    double r = spread + 3.0 * std::sqrt(b.component_variance);
    return r > 0.0 ? r : 1.0;
}

inline double effective_data_range(const RunConfig& c, const ScoreBackbone& b) {
    return c.data_range > 0.0 ? c.data_range : derived_data_range(b);
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace aid

#endif
