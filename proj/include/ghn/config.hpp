#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dynamics.hpp"

namespace ghn {

/// Every knob of one training run. Defaults follow the reference
/// hyperparameter table (hidden 64, K 64, β 1, λ 0.3, α 0.3, T 4, 2 layers,
/// G 8, dropout 0.3, gate bias 2, skip 0.1, lr 0.01, wd 5e-4, 300 epochs,
/// patience 50).
struct TrainConfig {
    Variant variant = Variant::lse;
    int hidden_dim = 64;
    int num_patterns = 64;
    double beta_init = 1.0;
    double lambda = 0.3;
    double alpha = 0.3;
    int iterations = 4;
    int num_layers = 2;
    int groups = 8;
    int heads = 1;
    double dropout = 0.3;
    double gate_bias = 2.0;
    double skip_weight = 0.1;
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    int epochs = 300;
    int patience = 50;
    std::uint64_t seed = 0;
    bool self_loops = true;
    bool freeze_beta = false;
    bool freeze_patterns = false;
    /// When positive, patterns are rescaled at initialization so ‖M‖²_σ equals it.
    double pattern_norm_sq = 0.0;

    DynamicsConfig dynamics() const { return {lambda, alpha, iterations, variant}; }

    void validate() const {
        dynamics().validate();
        if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
        if (num_layers < 0) throw ConfigError("num_layers must be >= 0");
        if (variant != Variant::nomem) {
            if (num_patterns < 1) throw ConfigError("num_patterns must be >= 1");
            if (heads < 1 || hidden_dim % heads != 0)
                throw ConfigError("hidden_dim=" + std::to_string(hidden_dim) +
                                  " is not divisible by heads=" + std::to_string(heads));
            if (variant == Variant::hier && (groups < 1 || num_patterns % groups != 0))
                throw ConfigError("num_patterns=" + std::to_string(num_patterns) +
                                  " is not divisible by groups=" + std::to_string(groups));
            if (!(beta_init > 0.0)) throw ConfigError("beta_init must be positive");
        }
        if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
        if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
        if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (patience < 1) throw ConfigError("patience must be >= 1");
        if (pattern_norm_sq < 0.0) throw ConfigError("pattern_norm_sq must be >= 0");
    }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("invalid boolean '" + text + "' for key '" + key + "'");
}

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                               prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

} // namespace detail

struct ConfigKey {
    std::string name;
    std::string help;
    std::function<void(TrainConfig&, const std::string&)> set;
    std::function<std::string(const TrainConfig&)> get;
};

/// The full key table, in display order.
inline const std::vector<ConfigKey>& config_keys() {
    using detail::format_double;
    using detail::parse_bool;
    using detail::parse_number;
#define GHN_INT_KEY(field, help)                                                                   \
    ConfigKey {                                                                                    \
        #field, help,                                                                              \
            [](TrainConfig& c, const std::string& v) { c.field = parse_number<int>(#field, v); }, \
            [](const TrainConfig& c) { return std::to_string(c.field); }                           \
    }
#define GHN_REAL_KEY(field, help)                                                                  \
    ConfigKey {                                                                                    \
        #field, help,                                                                              \
            [](TrainConfig& c, const std::string& v) {                                             \
                c.field = parse_number<double>(#field, v);                                         \
            },                                                                                     \
            [](const TrainConfig& c) { return format_double(c.field); }                            \
    }
#define GHN_BOOL_KEY(field, help)                                                                  \
    ConfigKey {                                                                                    \
        #field, help, [](TrainConfig& c, const std::string& v) { c.field = parse_bool(#field, v); }, \
            [](const TrainConfig& c) { return std::string(c.field ? "true" : "false"); }           \
    }
    static const std::vector<ConfigKey> keys = {
        ConfigKey{"variant", "retrieval variant: lse | lsr | hier | nomem",
                  [](TrainConfig& c, const std::string& v) { c.variant = parse_variant(v); },
                  [](const TrainConfig& c) { return to_string(c.variant); }},
        GHN_INT_KEY(hidden_dim, "hidden dimension d (grid {64, 128})"),
        GHN_INT_KEY(num_patterns, "number of memory patterns K (grid {64, 256})"),
        GHN_REAL_KEY(beta_init, "initial inverse temperature (learnable)"),
        GHN_REAL_KEY(lambda, "Laplacian weight; negative sharpens"),
        GHN_REAL_KEY(alpha, "damping in (0, 1]"),
        GHN_INT_KEY(iterations, "update iterations T per layer"),
        GHN_INT_KEY(num_layers, "number of stacked layers"),
        GHN_INT_KEY(groups, "pattern groups G (hier variant)"),
        GHN_INT_KEY(heads, "memory heads H (grid {1, 2, 4, 8})"),
        GHN_REAL_KEY(dropout, "dropout rate (grid {0.3, 0.5})"),
        GHN_REAL_KEY(gate_bias, "gate bias initialization"),
        GHN_REAL_KEY(skip_weight, "layer skip-connection weight"),
        GHN_REAL_KEY(learning_rate, "Adam learning rate (grid {0.001, 0.005, 0.01})"),
        GHN_REAL_KEY(weight_decay, "L2 weight decay (grid {1e-4, 5e-4, 1e-3})"),
        GHN_INT_KEY(epochs, "maximum training epochs"),
        GHN_INT_KEY(patience, "early-stopping patience in epochs"),
        ConfigKey{"seed", "random seed",
                  [](TrainConfig& c, const std::string& v) {
                      c.seed = parse_number<std::uint64_t>("seed", v);
                  },
                  [](const TrainConfig& c) { return std::to_string(c.seed); }},
        GHN_BOOL_KEY(self_loops, "add self-loops before normalizing the Laplacian"),
        GHN_BOOL_KEY(freeze_beta, "keep the inverse temperature at its initial value"),
        GHN_BOOL_KEY(freeze_patterns, "keep the pattern matrix at its initial value"),
        GHN_REAL_KEY(pattern_norm_sq, "if > 0, rescale initial patterns to this ||M||^2 (spectral)"),
    };
#undef GHN_INT_KEY
#undef GHN_REAL_KEY
#undef GHN_BOOL_KEY
    return keys;
}

inline const ConfigKey* find_key(const std::string& name) {
    for (const auto& k : config_keys())
        if (k.name == name) return &k;
    return nullptr;
}

inline std::string suggest_key(const std::string& name) {
    std::string best;
    std::size_t best_d = 4;
    for (const auto& k : config_keys()) {
        const auto d = detail::edit_distance(name, k.name);
        if (d < best_d) {
            best_d = d;
            best = k.name;
        }
    }
    return best;
}

inline const ConfigKey& require_key(const std::string& key) {
    const ConfigKey* k = find_key(key);
    if (k == nullptr) {
        const auto hint = suggest_key(key);
        throw ConfigError("unknown config key '" + key + "'" +
                          (hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
    }
    return *k;
}

inline void set_key(TrainConfig& cfg, const std::string& key, const std::string& value) {
    require_key(key).set(cfg, value);
}

/// Splits "key=value" (whitespace around either side is ignored).
inline std::pair<std::string, std::string> split_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + text + "'");
    return {detail::trim(text.substr(0, eq)), detail::trim(text.substr(eq + 1))};
}

/// Flat key=value lines; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_assignments(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        try {
            out.push_back(split_assignment(line));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(no) + ": " + e.what());
        }
    }
    return out;
}

inline void apply_config(TrainConfig& cfg, std::istream& in) {
    for (const auto& [k, v] : read_assignments(in)) set_key(cfg, k, v);
}

inline void apply_config_file(TrainConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    apply_config(cfg, in);
}

/// Sorted "key=value" pairs joined by ';'. Excludes the seed, so all seeds of
/// one configuration share a key.
inline std::string config_key(const TrainConfig& cfg) {
    std::map<std::string, std::string> kv;
    for (const auto& k : config_keys())
        if (k.name != "seed") kv[k.name] = k.get(cfg);
    std::string out;
    for (const auto& [k, v] : kv) out += (out.empty() ? "" : ";") + k + "=" + v;
    return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
    return s;
}

inline std::string config_hash(const TrainConfig& cfg) { return hex64(fnv1a(config_key(cfg))); }

/// Grid file: one "key = v1, v2, ..." per line; expands to the cartesian
/// product over `base`, in lexicographic order of the listed keys.
inline std::vector<TrainConfig> expand_grid(const TrainConfig& base, std::istream& in) {
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    for (const auto& [k, v] : read_assignments(in)) {
        require_key(k);
        std::vector<std::string> values;
        std::stringstream ss(v);
        for (std::string item; std::getline(ss, item, ',');) {
            item = detail::trim(item);
            if (!item.empty()) values.push_back(item);
        }
        if (values.empty()) throw ConfigError("grid key '" + k + "' has no values");
        axes.emplace_back(k, std::move(values));
    }
    std::vector<TrainConfig> out{base};
    for (const auto& [k, values] : axes) {
        std::vector<TrainConfig> next;
        for (const auto& c : out)
            for (const auto& v : values) {
                TrainConfig copy = c;
                set_key(copy, k, v);
                next.push_back(copy);
            }
        out = std::move(next);
    }
    return out;
}

inline std::string config_help() {
    const TrainConfig defaults;
    std::string out = "Config keys (key=value; defaults shown):\n";
    for (const auto& k : config_keys()) {
        std::string line = "  " + k.name + "=" + k.get(defaults);
        if (line.size() < 32) line.resize(32, ' ');
        out += line + " " + k.help + "\n";
    }
    return out;
}

} // namespace ghn
