#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "model.hpp"

namespace ghn {

// ---------------------------------------------------------------------------
// Corruption

enum class CorruptionKind { edge_drop, feature_mask, feature_noise };

inline std::string to_string(CorruptionKind k) {
    switch (k) {
    case CorruptionKind::edge_drop: return "edge_drop";
    case CorruptionKind::feature_mask: return "feature_mask";
    case CorruptionKind::feature_noise: return "feature_noise";
    }
    return "?";
}

inline CorruptionKind parse_corruption(const std::string& s) {
    if (s == "edge_drop") return CorruptionKind::edge_drop;
    if (s == "feature_mask") return CorruptionKind::feature_mask;
    if (s == "feature_noise") return CorruptionKind::feature_noise;
    throw ConfigError("unknown corruption kind '" + s +
                      "' (expected edge_drop, feature_mask or feature_noise)");
}

/// Entry masking zeroes individual feature values; row masking zeroes whole nodes.
enum class MaskMode { entries, rows };

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::edge_drop;
    double level = 0.0;
    std::uint64_t seed = 0;
    MaskMode mask_mode = MaskMode::entries;

    void validate() const {
        if (!(level >= 0.0 && level <= 1.0))
            throw ConfigError("corruption level must be in [0, 1], got " +
                              detail::format_double(level));
    }
};

namespace detail {
    /// floor(level * n), guarded against 0.5*10 landing on 4.999...
    inline std::size_t corrupted_count(double level, std::size_t n) {
        return static_cast<std::size_t>(std::floor(level * static_cast<double>(n) + 1e-9));
    }

    /// The first `k` entries of a seeded uniform permutation of 0..n-1.
    inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                               Rng& rng) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        // Partial Fisher-Yates so the result does not depend on std::shuffle internals.
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        idx.resize(k);
        return idx;
    }
}

/// Returns a corrupted copy. Labels and split are never touched.
inline Graph corrupt(const Graph& g, const CorruptionSpec& spec) {
    spec.validate();
    Graph out = g;
    Rng rng(spec.seed);
    switch (spec.kind) {
    case CorruptionKind::edge_drop: {
        const std::size_t k = detail::corrupted_count(spec.level, g.edges.size());
        std::vector<char> drop(g.edges.size(), 0);
        for (std::size_t i : detail::sample_without_replacement(g.edges.size(), k, rng)) drop[i] = 1;
        out.edges.clear();
        for (std::size_t i = 0; i < g.edges.size(); ++i)
            if (!drop[i]) out.edges.push_back(g.edges[i]);
        break;
    }
    case CorruptionKind::feature_mask: {
        const std::size_t cols = static_cast<std::size_t>(g.features.cols());
        if (spec.mask_mode == MaskMode::entries) {
            const std::size_t n = static_cast<std::size_t>(g.features.size());
            for (std::size_t i :
                 detail::sample_without_replacement(n, detail::corrupted_count(spec.level, n), rng))
                out.features(static_cast<Index>(i / cols), static_cast<Index>(i % cols)) = 0.0;
        } else {
            const std::size_t n = static_cast<std::size_t>(g.features.rows());
            for (std::size_t r :
                 detail::sample_without_replacement(n, detail::corrupted_count(spec.level, n), rng))
                out.features.row(static_cast<Index>(r)).setZero();
        }
        break;
    }
    case CorruptionKind::feature_noise: {
        if (spec.level == 0.0) break;
        const Index n = g.features.rows();
        const RowVector mean = g.features.colwise().mean();
        // Population std per feature column.
        const RowVector sd =
            ((g.features.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n))
                .sqrt();
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Index r = 0; r < n; ++r)
            for (Index c = 0; c < g.features.cols(); ++c)
                out.features(r, c) += spec.level * sd(c) * gauss(rng);
        break;
    }
    }
    return out;
}

/// Signed relative change in percent: clean 80, corrupted 72 gives -10.
inline double relative_drop(double clean, double corrupted) {
    if (clean == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (corrupted - clean) / clean * 100.0;
}

// ---------------------------------------------------------------------------
// Seed statistics

struct SeedSummary {
    std::size_t count = 0;
    double mean = std::numeric_limits<double>::quiet_NaN();
    /// Sample standard deviation; absent for fewer than two values.
    std::optional<double> stddev;
    /// std > 0.10; absent whenever stddev is.
    std::optional<bool> bimodal;
};

inline constexpr double kBimodalStd = 0.10;

inline SeedSummary summarize(const std::vector<double>& values) {
    SeedSummary s;
    s.count = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
        s.bimodal = *s.stddev > kBimodalStd;
    }
    return s;
}

inline std::optional<bool> is_bimodal(const std::vector<double>& accuracies) {
    return summarize(accuracies).bimodal;
}

/// "0.727 ± 0.039", or just the mean when there is no spread.
inline std::string format_mean_std(const SeedSummary& s, int precision = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << s.mean;
    if (s.stddev) os << " ± " << *s.stddev;
    return os.str();
}

// ---------------------------------------------------------------------------
// Runner

/// Runs fn(0..n-1) on up to `threads` workers. Results land by index, so the
/// output never depends on scheduling.
template <class T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& fn,
                            unsigned threads = 0) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::vector<std::optional<T>> slots(n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) slots[i] = fn(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(n);
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                    try {
                        slots[i] = fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        // Rethrow the lowest-index failure so errors are deterministic too.
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    std::vector<T> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

inline CsrMatrix laplacian_for(const Graph& g, const TrainConfig& cfg) {
    return normalized_laplacian(g, cfg.self_loops);
}

/// Trains every (config, seed) pair. Records come back sorted by config key,
/// then seed.
inline std::vector<RunRecord> run_all(const Graph& g, const std::vector<TrainConfig>& configs,
                                      const std::vector<std::uint64_t>& seeds,
                                      unsigned threads = 1) {
    std::vector<TrainConfig> jobs;
    for (const auto& c : configs)
        for (auto s : seeds) {
            TrainConfig j = c;
            j.seed = s;
            j.validate();
            jobs.push_back(j);
        }
    const CsrMatrix lap_loops = normalized_laplacian(g, true);
    std::optional<CsrMatrix> lap_plain;
    for (const auto& j : jobs)
        if (!j.self_loops && !lap_plain) lap_plain = normalized_laplacian(g, false);
    auto records = parallel_map<RunRecord>(
        jobs.size(),
        [&](std::size_t i) {
            return train_run(g, jobs[i].self_loops ? lap_loops : *lap_plain, jobs[i]);
        },
        threads);
    std::stable_sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
        return a.config_key != b.config_key ? a.config_key < b.config_key : a.seed < b.seed;
    });
    return records;
}

// ---------------------------------------------------------------------------
// Grid search

struct GridResult {
    TrainConfig best;
    std::string best_key;
    SeedSummary best_val;
    SeedSummary best_test;
    std::vector<RunRecord> records;
};

/// Picks the configuration with the highest mean validation accuracy; ties go
/// to the lexicographically smallest config key.
inline GridResult grid_search(const Graph& g, const std::vector<TrainConfig>& grid,
                              const std::vector<std::uint64_t>& seeds, unsigned threads = 1) {
    if (grid.empty()) throw ConfigError("grid search needs at least one configuration");
    if (seeds.empty()) throw ConfigError("grid search needs at least one seed");
    GridResult out;
    out.records = run_all(g, grid, seeds, threads);
    std::map<std::string, std::vector<const RunRecord*>> by_key;
    for (const auto& r : out.records) by_key[r.config_key].push_back(&r);
    double best_mean = -std::numeric_limits<double>::infinity();
    for (const auto& [key, runs] : by_key) {  // map order is the tie-break
        std::vector<double> val;
        for (auto* r : runs) val.push_back(r->best_val_acc);
        const SeedSummary s = summarize(val);
        if (s.mean > best_mean) {
            best_mean = s.mean;
            out.best_key = key;
            out.best_val = s;
        }
    }
    std::vector<double> test;
    for (auto* r : by_key[out.best_key]) test.push_back(r->test_acc);
    out.best_test = summarize(test);
    out.best = by_key[out.best_key].front()->config;
    return out;
}

// ---------------------------------------------------------------------------
// Ablation sweep

enum class AblationAxis { lambda, iterations, heads, negative_lambda };

inline std::string to_string(AblationAxis a) {
    switch (a) {
    case AblationAxis::lambda: return "lambda";
    case AblationAxis::iterations: return "T";
    case AblationAxis::heads: return "H";
    case AblationAxis::negative_lambda: return "negative_lambda";
    }
    return "?";
}

inline AblationAxis parse_axis(const std::string& s) {
    if (s == "lambda") return AblationAxis::lambda;
    if (s == "T" || s == "iterations") return AblationAxis::iterations;
    if (s == "H" || s == "heads") return AblationAxis::heads;
    if (s == "negative_lambda") return AblationAxis::negative_lambda;
    throw ConfigError("unknown ablation axis '" + s +
                      "' (expected lambda, T, H or negative_lambda)");
}

/// Applies one axis value; integer axes reject fractional values.
inline TrainConfig with_axis(TrainConfig cfg, AblationAxis axis, double value) {
    auto as_int = [&](const char* what) {
        if (value != std::floor(value))
            throw ConfigError(std::string(what) + " must be an integer, got " +
                              detail::format_double(value));
        return static_cast<int>(value);
    };
    switch (axis) {
    case AblationAxis::lambda:
        if (value < 0.0)
            throw ConfigError("lambda axis takes non-negative values; use negative_lambda");
        cfg.lambda = value;
        break;
    case AblationAxis::negative_lambda: cfg.lambda = value; break;
    case AblationAxis::iterations: cfg.iterations = as_int("T"); break;
    case AblationAxis::heads: cfg.heads = as_int("H"); break;
    }
    cfg.validate();
    return cfg;
}

struct AblationRow {
    double value = 0.0;
    std::string config_hash;
    SeedSummary test;
    int collapsed = 0;
};

inline std::vector<AblationRow> ablation_sweep(const Graph& g, const TrainConfig& base,
                                               AblationAxis axis, const std::vector<double>& values,
                                               const std::vector<std::uint64_t>& seeds,
                                               unsigned threads = 1,
                                               std::vector<RunRecord>* records = nullptr) {
    if (values.empty()) throw ConfigError("ablation sweep needs at least one value");
    std::vector<TrainConfig> configs;
    for (double v : values) configs.push_back(with_axis(base, axis, v));
    auto runs = run_all(g, configs, seeds, threads);
    std::vector<AblationRow> rows;
    for (std::size_t i = 0; i < values.size(); ++i) {
        AblationRow row;
        row.value = values[i];
        row.config_hash = config_hash(configs[i]);
        const std::string key = config_key(configs[i]);
        std::vector<double> acc;
        for (const auto& r : runs)
            if (r.config_key == key) {
                acc.push_back(r.test_acc);
                row.collapsed += r.collapsed ? 1 : 0;
            }
        row.test = summarize(acc);
        rows.push_back(row);
    }
    if (records) *records = std::move(runs);
    return rows;
}

// ---------------------------------------------------------------------------
// Phase diagram

struct PhaseCell {
    double beta_init = 0.0;
    int num_patterns = 0;
    std::string config_hash;
    SeedSummary test;
    int collapsed = 0;
};

/// Trains every (β_init, K) cell over the seeds; β stays learnable.
inline std::vector<PhaseCell> phase_diagram(const Graph& g, TrainConfig base,
                                            const std::vector<double>& beta_grid,
                                            const std::vector<int>& k_grid,
                                            const std::vector<std::uint64_t>& seeds,
                                            unsigned threads = 1,
                                            std::vector<RunRecord>* records = nullptr) {
    if (base.variant != Variant::lse && base.variant != Variant::lsr)
        throw ConfigError("phase diagram compares lse and lsr, got " + to_string(base.variant));
    if (beta_grid.empty() || k_grid.empty()) throw ConfigError("phase diagram grids must be non-empty");
    std::vector<TrainConfig> configs;
    for (double b : beta_grid)
        for (int k : k_grid) {
            TrainConfig c = base;
            c.beta_init = b;
            c.num_patterns = k;
            c.validate();
            configs.push_back(c);
        }
    auto runs = run_all(g, configs, seeds, threads);
    std::vector<PhaseCell> cells;
    for (const auto& c : configs) {
        PhaseCell cell;
        cell.beta_init = c.beta_init;
        cell.num_patterns = c.num_patterns;
        cell.config_hash = config_hash(c);
        const std::string key = config_key(c);
        std::vector<double> acc;
        for (const auto& r : runs)
            if (r.config_key == key) {
                acc.push_back(r.test_acc);
                cell.collapsed += r.collapsed ? 1 : 0;
            }
        cell.test = summarize(acc);
        cells.push_back(cell);
    }
    if (records) *records = std::move(runs);
    return cells;
}

// ---------------------------------------------------------------------------
// Robustness

struct RobustnessRow {
    Variant variant = Variant::lse;
    CorruptionKind kind = CorruptionKind::edge_drop;
    double level = 0.0;
    SeedSummary test;
    /// Relative change of the mean against the level-0 mean of the same series.
    double relative_drop = 0.0;
};

/// Test accuracy of an already trained model on a corrupted copy of `g`.
inline double corrupted_accuracy(GhnModel& model, const Graph& g, const CorruptionSpec& spec) {
    const Graph bad = corrupt(g, spec);
    const CsrMatrix lap = laplacian_for(bad, model.config);
    try {
        return evaluate(model, bad, lap).test_acc;
    } catch (const NumericError&) {
        return 0.0;
    }
}

/// One clean-trained model per (variant, seed), evaluated on corrupted copies.
/// The corruption stream is seeded from the run seed.
inline std::vector<RobustnessRow> robustness_curve(const Graph& g, const TrainConfig& base,
                                                   const std::vector<Variant>& variants,
                                                   const std::vector<CorruptionKind>& kinds,
                                                   const std::vector<double>& levels,
                                                   const std::vector<std::uint64_t>& seeds,
                                                   unsigned threads = 1,
                                                   MaskMode mask_mode = MaskMode::entries) {
    if (variants.empty() || kinds.empty() || levels.empty() || seeds.empty())
        throw ConfigError("robustness curve needs variants, kinds, levels and seeds");
    for (double l : levels) CorruptionSpec{CorruptionKind::edge_drop, l}.validate();
    const CsrMatrix clean_lap = laplacian_for(g, base);

    struct Job {
        Variant variant;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (auto v : variants)
        for (auto s : seeds) jobs.push_back({v, s});
    // acc[job][kind][level]
    auto acc = parallel_map<std::vector<std::vector<double>>>(
        jobs.size(),
        [&](std::size_t i) {
            TrainConfig cfg = base;
            cfg.variant = jobs[i].variant;
            cfg.seed = jobs[i].seed;
            GhnModel model;
            train_run(g, clean_lap, cfg, &model);
            std::vector<std::vector<double>> out;
            for (auto k : kinds) {
                std::vector<double> row;
                for (double l : levels)
                    row.push_back(corrupted_accuracy(model, g, {k, l, jobs[i].seed, mask_mode}));
                out.push_back(row);
            }
            return out;
        },
        threads);

    std::vector<RobustnessRow> rows;
    for (std::size_t vi = 0; vi < variants.size(); ++vi)
        for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
            const std::size_t first = rows.size();
            for (std::size_t li = 0; li < levels.size(); ++li) {
                std::vector<double> values;
                for (std::size_t si = 0; si < seeds.size(); ++si)
                    values.push_back(acc[vi * seeds.size() + si][ki][li]);
                rows.push_back({variants[vi], kinds[ki], levels[li], summarize(values), 0.0});
            }
            // Reference is the level-0 row if present, otherwise the first level.
            std::size_t ref = first;
            for (std::size_t r = first; r < rows.size(); ++r)
                if (rows[r].level == 0.0) ref = r;
            for (std::size_t r = first; r < rows.size(); ++r)
                rows[r].relative_drop = relative_drop(rows[ref].test.mean, rows[r].test.mean);
        }
    return rows;
}

// ---------------------------------------------------------------------------
// Gate analysis

struct GateLevel {
    double level = 0.0;
    double gate_mean = 0.0;
    double accuracy = 0.0;
};

/// Mean gate (over nodes, coordinates, iterations and layers) and test accuracy
/// of one trained model under increasing feature masking.
inline std::vector<GateLevel> gate_profile(GhnModel& model, const Graph& g,
                                           const std::vector<double>& levels, std::uint64_t seed,
                                           MaskMode mask_mode = MaskMode::entries) {
    if (model.config.variant == Variant::nomem)
        throw ConfigError("gate analysis needs a memory variant; nomem has no gates");
    if (levels.empty()) throw ConfigError("gate analysis needs at least one mask level");
    std::vector<GateLevel> out;
    for (double level : levels) {
        const Graph bad = corrupt(g, {CorruptionKind::feature_mask, level, seed, mask_mode});
        const Evaluation e = evaluate(model, bad, laplacian_for(bad, model.config));
        out.push_back({level, e.diagnostics.mean_gate(), e.test_acc});
    }
    return out;
}

struct GateRow {
    double level = 0.0;
    SeedSummary gate;
    SeedSummary accuracy;
};

inline std::vector<GateRow> gate_analysis(const Graph& g, const TrainConfig& base,
                                          const std::vector<double>& levels,
                                          const std::vector<std::uint64_t>& seeds,
                                          unsigned threads = 1,
                                          MaskMode mask_mode = MaskMode::entries) {
    if (base.variant == Variant::nomem)
        throw ConfigError("gate analysis needs a memory variant; nomem has no gates");
    if (levels.empty()) throw ConfigError("gate analysis needs at least one mask level");
    if (seeds.empty()) throw ConfigError("gate analysis needs at least one seed");
    const CsrMatrix lap = laplacian_for(g, base);
    auto profiles = parallel_map<std::vector<GateLevel>>(
        seeds.size(),
        [&](std::size_t i) {
            TrainConfig cfg = base;
            cfg.seed = seeds[i];
            GhnModel model;
            train_run(g, lap, cfg, &model);
            return gate_profile(model, g, levels, seeds[i], mask_mode);
        },
        threads);
    std::vector<GateRow> rows;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        std::vector<double> gates, accs;
        for (const auto& p : profiles) {
            gates.push_back(p[li].gate_mean);
            accs.push_back(p[li].accuracy);
        }
        rows.push_back({levels[li], summarize(gates), summarize(accs)});
    }
    return rows;
}

} // namespace ghn
