#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "record.hpp"
#include "synthetic.hpp"
#include "verification.hpp"

namespace ghn::cli {

namespace fs = std::filesystem;

/// Options shared by every subcommand.
struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string data_dir;
    std::string synthetic;
    std::uint64_t graph_seed = 0;
    std::string out_dir = "ghn-out";
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
    std::string seeds;
    bool emit_plot_data = false;
};

inline constexpr const char* kGraphFiles[] = {"edges.txt", "features.txt", "labels.txt",
                                              "splits.txt"};

inline std::vector<std::string> split_list(const std::string& name, const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        item = detail::trim(item);
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw ConfigError("--" + name + " needs at least one value");
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& name, const std::string& text) {
    std::vector<T> out;
    for (const auto& item : split_list(name, text)) out.push_back(detail::parse_number<T>(name, item));
    return out;
}

/// Shared state of one command invocation.
class Context {
public:
    Context(std::string command, std::vector<std::string> arguments, const CommonOptions& opt,
            std::ostream& out)
        : opt_(opt), out_(out) {
        manifest_.command = std::move(command);
        manifest_.arguments = std::move(arguments);
        manifest_.config_path = opt.config_path;
        manifest_.output_dir = opt.out_dir;
        cfg_ = TrainConfig{};
        if (!opt.config_path.empty()) apply_config_file(cfg_, opt.config_path);
        for (const auto& o : opt.overrides) {
            auto [k, v] = split_assignment(o);
            set_key(cfg_, k, v);
        }
        if (opt.seed) cfg_.seed = *opt.seed;
        cfg_.validate();
    }

    TrainConfig& config() { return cfg_; }
    std::ostream& out() { return out_; }
    const CommonOptions& options() const { return opt_; }
    unsigned threads() const { return std::max(1u, opt_.threads); }

    /// Explicit --seeds, else --seed (or the config seed), else 0..fallback-1.
    std::vector<std::uint64_t> seeds(std::size_t fallback) {
        std::vector<std::uint64_t> s;
        if (!opt_.seeds.empty()) s = parse_list<std::uint64_t>("seeds", opt_.seeds);
        else if (opt_.seed || fallback == 1) s = {cfg_.seed};
        else
            for (std::size_t i = 0; i < fallback; ++i) s.push_back(i);
        manifest_.seeds = s;
        return s;
    }

    Graph graph() {
        if (!opt_.data_dir.empty() && !opt_.synthetic.empty())
            throw ConfigError("pass either --data or --synthetic, not both");
        if (!opt_.data_dir.empty()) {
            std::vector<std::string> paths;
            for (const char* f : kGraphFiles) paths.push_back((fs::path(opt_.data_dir) / f).string());
            manifest_.data_paths = paths;
            return load_graph(paths[0], paths[1], paths[2], paths[3]);
        }
        if (opt_.synthetic.empty())
            throw ConfigError("no graph given: pass --data DIR or --synthetic homophilous|heterophilous");
        manifest_.data_paths = {"synthetic:" + opt_.synthetic + ":" + std::to_string(opt_.graph_seed)};
        return block_graph(synthetic_spec(opt_.synthetic, opt_.graph_seed));
    }

    static BlockGraphSpec synthetic_spec(const std::string& kind, std::uint64_t seed) {
        if (kind == "homophilous") return homophilous_spec(seed);
        if (kind == "heterophilous") return heterophilous_spec(seed);
        throw ConfigError("unknown synthetic graph '" + kind +
                          "' (expected homophilous or heterophilous)");
    }

    std::string hash() const { return manifest_.hash(); }

    /// Path inside the output directory, tagged with the manifest hash.
    std::string output(const std::string& stem, const std::string& ext) {
        ensure_out_dir();
        return (fs::path(opt_.out_dir) / (stem + "-" + hash() + "." + ext)).string();
    }

    /// Writes the manifest; call once all inputs (graph, seeds) are resolved.
    void write_manifest() {
        ensure_out_dir();
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        manifest_.timestamp = buf;
        write_text(output("manifest", "json"), manifest_.to_json().dump(2) + "\n");
    }

    void write_table(const std::string& stem, const Table& t) {
        write_text(output(stem, "tsv"), t.to_tsv());
        out_ << t.to_tsv();
    }

    void write_plot(const Table& t) {
        if (opt_.emit_plot_data) write_text(output("plot", "tsv"), t.to_tsv());
    }

    void write_records(const std::vector<RunRecord>& records) {
        append_records(output("runs", "jsonl"), records);
    }

private:
    void ensure_out_dir() {
        std::error_code ec;
        fs::create_directories(opt_.out_dir, ec);
        if (ec) throw DataError("cannot create output directory " + opt_.out_dir + ": " + ec.message());
    }

    CommonOptions opt_;
    std::ostream& out_;
    TrainConfig cfg_;
    RunManifest manifest_;
};

// ---------------------------------------------------------------------------
// Commands

inline int cmd_train(Context& ctx) {
    const Graph g = ctx.graph();
    const auto seeds = ctx.seeds(1);
    ctx.write_manifest();
    const CsrMatrix lap = laplacian_for(g, ctx.config());
    Table t{{"seed", "config_hash", "epochs", "best_epoch", "val_acc", "test_acc", "collapsed"}, {}};
    std::vector<RunRecord> records;
    for (auto s : seeds) {
        TrainConfig cfg = ctx.config();
        cfg.seed = s;
        GhnModel model;
        RunRecord r = train_run(g, lap, cfg, &model);
        save_checkpoint(model, ctx.output("model-seed" + std::to_string(s), "json"));
        t.add({std::to_string(s), r.config_hash, std::to_string(r.epochs_run),
               std::to_string(r.best_epoch), cell(r.val_acc), cell(r.test_acc),
               r.collapsed ? "yes" : "no"});
        records.push_back(std::move(r));
    }
    ctx.write_records(records);
    ctx.write_table("train", t);
    return 0;
}

struct EvaluateOptions {
    std::string checkpoint;
    std::string corruption;
    double level = 0.0;
    bool mask_rows = false;
};

inline int cmd_evaluate(Context& ctx, const EvaluateOptions& eo) {
    Graph g = ctx.graph();
    const auto seeds = ctx.seeds(1);
    ctx.write_manifest();
    GhnModel model = load_checkpoint(eo.checkpoint);
    if (!eo.corruption.empty())
        g = corrupt(g, {parse_corruption(eo.corruption), eo.level, seeds.front(),
                        eo.mask_rows ? MaskMode::rows : MaskMode::entries});
    const Evaluation e = evaluate(model, g, laplacian_for(g, model.config));
    Table t{{"train_acc", "val_acc", "test_acc", "mean_gate"}, {}};
    t.add({cell(e.train_acc), cell(e.val_acc), cell(e.test_acc), cell(e.diagnostics.mean_gate())});
    ctx.write_table("evaluate", t);
    return 0;
}

inline int cmd_sweep(Context& ctx, const std::string& axis_name, const std::string& values) {
    const AblationAxis axis = parse_axis(axis_name);
    const auto vals = parse_list<double>("values", values);
    const Graph g = ctx.graph();
    const auto seeds = ctx.seeds(5);
    ctx.write_manifest();
    std::vector<RunRecord> records;
    const auto rows = ablation_sweep(g, ctx.config(), axis, vals, seeds, ctx.threads(), &records);
    ctx.write_records(records);
    Table t{{"axis", "value", "config_hash", "mean_test_acc", "std_test_acc", "seeds", "collapsed"}, {}};
    Table plot{{"x", "mean", "std"}, {}};
    for (const auto& r : rows) {
        t.add({to_string(axis), detail::format_double(r.value), r.config_hash, cell(r.test.mean),
               cell(r.test.stddev), std::to_string(r.test.count), std::to_string(r.collapsed)});
        plot.add({detail::format_double(r.value), cell(r.test.mean), cell(r.test.stddev)});
    }
    ctx.write_table("sweep", t);
    ctx.write_plot(plot);
    return 0;
}

inline int cmd_grid_search(Context& ctx, const std::string& grid_path) {
    std::ifstream in(grid_path);
    if (!in) throw ConfigError("cannot open grid file " + grid_path);
    const auto grid = expand_grid(ctx.config(), in);
    const Graph g = ctx.graph();
    const auto seeds = ctx.seeds(5);
    ctx.write_manifest();
    const GridResult res = grid_search(g, grid, seeds, ctx.threads());
    ctx.write_records(res.records);
    Table t{{"config_hash", "mean_val_acc", "mean_test_acc", "std_test_acc", "selected"}, {}};
    std::map<std::string, std::vector<const RunRecord*>> by_key;
    for (const auto& r : res.records) by_key[r.config_key].push_back(&r);
    for (const auto& [key, runs] : by_key) {
        std::vector<double> val, test;
        for (auto* r : runs) {
            val.push_back(r->best_val_acc);
            test.push_back(r->test_acc);
        }
        const SeedSummary v = summarize(val), te = summarize(test);
        t.add({runs.front()->config_hash, cell(v.mean), cell(te.mean), cell(te.stddev),
               key == res.best_key ? "yes" : "no"});
    }
    ctx.write_table("grid", t);
    write_text(ctx.output("best-config", "txt"), [&] {
        std::string s;
        for (const auto& k : config_keys()) s += k.name + "=" + k.get(res.best) + "\n";
        return s;
    }());
    return 0;
}

struct CorruptOptions {
    std::string variants = "lse,nomem";
    std::string kinds = "edge_drop";
    std::string levels = "0,0.25,0.5,0.75,1";
    bool mask_rows = false;
};

inline int cmd_corrupt(Context& ctx, const CorruptOptions& co) {
    std::vector<Variant> variants;
    for (const auto& v : split_list("variants", co.variants)) variants.push_back(parse_variant(v));
    std::vector<CorruptionKind> kinds;
    for (const auto& k : split_list("kinds", co.kinds)) kinds.push_back(parse_corruption(k));
    const auto levels = parse_list<double>("levels", co.levels);
    const Graph g = ctx.graph();
    const auto seeds = ctx.seeds(5);
    ctx.write_manifest();
    const auto rows = robustness_curve(g, ctx.config(), variants, kinds, levels, seeds,
                                       ctx.threads(), co.mask_rows ? MaskMode::rows : MaskMode::entries);
    Table t{{"variant", "kind", "level", "mean_test_acc", "std_test_acc", "relative_drop_pct"}, {}};
    Table plot{{"series", "x", "mean", "std"}, {}};
    for (const auto& r : rows) {
        t.add({to_string(r.variant), to_string(r.kind), detail::format_double(r.level),
               cell(r.test.mean), cell(r.test.stddev), cell(r.relative_drop)});
        plot.add({to_string(r.variant) + "/" + to_string(r.kind), detail::format_double(r.level),
                  cell(r.test.mean), cell(r.test.stddev)});
    }
    ctx.write_table("robustness", t);
    ctx.write_plot(plot);
    return 0;
}

inline int cmd_phase_diagram(Context& ctx, const std::string& betas, const std::string& patterns) {
    const auto beta_grid = parse_list<double>("betas", betas);
    const auto k_grid = parse_list<int>("patterns", patterns);
    const Graph g = ctx.graph();
    const auto seeds = ctx.seeds(5);
    ctx.write_manifest();
    std::vector<RunRecord> records;
    const auto cells = phase_diagram(g, ctx.config(), beta_grid, k_grid, seeds, ctx.threads(), &records);
    ctx.write_records(records);
    Table t{{"variant", "beta_init", "num_patterns", "config_hash", "mean_test_acc", "std_test_acc",
             "bimodal", "collapsed"},
            {}};
    Table plot{{"series", "x", "mean", "std"}, {}};
    for (const auto& c : cells) {
        t.add({to_string(ctx.config().variant), detail::format_double(c.beta_init),
               std::to_string(c.num_patterns), c.config_hash, cell(c.test.mean), cell(c.test.stddev),
               cell(c.test.bimodal), std::to_string(c.collapsed)});
        plot.add({"K=" + std::to_string(c.num_patterns), detail::format_double(c.beta_init),
                  cell(c.test.mean), cell(c.test.stddev)});
    }
    ctx.write_table("phase", t);
    ctx.write_plot(plot);
    return 0;
}

inline int cmd_gate_analysis(Context& ctx, const std::string& levels, bool mask_rows) {
    const auto lv = parse_list<double>("levels", levels);
    const Graph g = ctx.graph();
    const auto seeds = ctx.seeds(5);
    ctx.write_manifest();
    const auto rows = gate_analysis(g, ctx.config(), lv, seeds, ctx.threads(),
                                    mask_rows ? MaskMode::rows : MaskMode::entries);
    Table t{{"mask_level", "gate_mean", "gate_std", "test_acc_mean", "test_acc_std", "gate"}, {}};
    Table plot{{"x", "mean", "std"}, {}};
    for (const auto& r : rows) {
        t.add({detail::format_double(r.level), cell(r.gate.mean), cell(r.gate.stddev),
               cell(r.accuracy.mean), cell(r.accuracy.stddev), format_mean_std(r.gate)});
        plot.add({detail::format_double(r.level), cell(r.gate.mean), cell(r.gate.stddev)});
    }
    ctx.write_table("gates", t);
    ctx.write_plot(plot);
    return 0;
}

inline Json certificate_json(const Certificate& c) {
    Json constants = Json::object();
    for (const auto& [k, v] : c.constants) constants[k] = detail::real(v);
    return {{"name", c.name},
            {"passed", c.passed},
            {"slack", detail::real(c.slack)},
            {"detail", c.detail},
            {"constants", constants}};
}

/// Exit code 5 when any certificate fails.
inline int cmd_verify_theory(Context& ctx) {
    VerifyOptions vo;
    vo.seed = ctx.seeds(1).front();
    ctx.write_manifest();
    const auto certs = verify_theory(vo);
    std::string lines;
    bool ok = true;
    for (const auto& c : certs) {
        lines += certificate_json(c).dump() + "\n";
        ok = ok && c.passed;
    }
    write_text(ctx.output("theory", "jsonl"), lines);
    ctx.out() << lines;
    if (!ok) throw CertificateError("one or more certificates failed");
    return 0;
}

/// β‖M‖²_σ per memory layer, from a checkpoint or by training over seeds.
inline int cmd_operating_point(Context& ctx, const std::string& checkpoint) {
    const Graph g = ctx.graph();
    std::vector<std::vector<LayerOperatingPoint>> per_seed;
    if (!checkpoint.empty()) {
        ctx.seeds(1);
        ctx.write_manifest();
        GhnModel model = load_checkpoint(checkpoint);
        const Evaluation e = evaluate(model, g, laplacian_for(g, model.config));
        per_seed.push_back(operating_points(model, &e.diagnostics));
    } else {
        const auto seeds = ctx.seeds(5);
        ctx.write_manifest();
        const auto records = run_all(g, {ctx.config()}, seeds, ctx.threads());
        ctx.write_records(records);
        for (const auto& r : records) per_seed.push_back(r.layers);
    }
    if (per_seed.empty() || per_seed.front().empty())
        throw ConfigError("operating point needs a memory variant; nomem has no patterns");
    Table t{{"layer", "beta", "memory_norm_sq", "product", "product_std", "regime", "gate_mean"}, {}};
    for (std::size_t l = 0; l < per_seed.front().size(); ++l) {
        std::vector<double> beta, norm, product, gate;
        for (const auto& s : per_seed) {
            beta.push_back(s[l].beta);
            norm.push_back(s[l].memory_norm_sq);
            product.push_back(s[l].product);
            gate.push_back(s[l].gate_mean);
        }
        const SeedSummary p = summarize(product);
        t.add({std::to_string(l), cell(summarize(beta).mean), cell(summarize(norm).mean),
               cell(p.mean), cell(p.stddev), to_string(classify_regime(p.mean)),
               cell(summarize(gate).mean)});
    }
    ctx.write_table("operating-point", t);
    return 0;
}

inline int cmd_synthesize(const std::string& kind, std::uint64_t graph_seed, const std::string& out_dir,
                          std::ostream& out) {
    const Graph g = block_graph(Context::synthetic_spec(kind, graph_seed));
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create " + out_dir + ": " + ec.message());
    std::vector<std::string> p;
    for (const char* f : kGraphFiles) p.push_back((fs::path(out_dir) / f).string());
    save_graph(g, p[0], p[1], p[2], p[3]);
    out << "wrote " << g.num_nodes << " nodes, " << g.edges.size() << " edges to " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Dispatch

/// Drops options that do not affect results (output location, thread count).
inline std::vector<std::string> replayable_arguments(const std::vector<std::string>& args) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--out" || a == "--threads") {
            ++i;
            continue;
        }
        if (a.rfind("--out=", 0) == 0 || a.rfind("--threads=", 0) == 0) continue;
        out.push_back(a);
    }
    return out;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr);

inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Graph Hopfield network toolkit: training, sweeps, robustness and theory checks", "ghn"};
    app.footer(config_help());
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Expand help for all subcommands");

    CommonOptions common;
    auto add_common = [&](CLI::App* sub, bool seeds) {
        sub->add_option("--config", common.config_path, "flat key=value config file");
        sub->add_option("--set", common.overrides, "override a config key (key=value), repeatable");
        sub->add_option("--data", common.data_dir,
                        "graph directory with edges.txt, features.txt, labels.txt, splits.txt");
        sub->add_option("--synthetic", common.synthetic, "generate a graph: homophilous | heterophilous");
        sub->add_option("--graph-seed", common.graph_seed, "seed of the synthetic graph");
        sub->add_option("--out", common.out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", common.threads, "worker threads for independent runs")
            ->capture_default_str();
        sub->add_option("--seed", common.seed, "random seed");
        if (seeds) sub->add_option("--seeds", common.seeds, "comma-separated seed list");
        sub->add_flag("--emit-plot-data", common.emit_plot_data, "write (x, mean, std) series");
        sub->footer(config_help());
    };

    auto* train = app.add_subcommand("train", "train models and write run records and checkpoints");
    add_common(train, true);

    EvaluateOptions eo;
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint, optionally on a corrupted graph");
    add_common(evaluate, false);
    evaluate->add_option("--checkpoint", eo.checkpoint, "model checkpoint (JSON)")->required();
    evaluate->add_option("--corruption", eo.corruption, "edge_drop | feature_mask | feature_noise");
    evaluate->add_option("--level", eo.level, "corruption level in [0, 1]");
    evaluate->add_flag("--mask-rows", eo.mask_rows, "mask whole node rows instead of entries");

    std::string axis, values;
    auto* sweep = app.add_subcommand("sweep", "ablation sweep over lambda, T, H or negative_lambda");
    add_common(sweep, true);
    sweep->add_option("--axis", axis, "lambda | T | H | negative_lambda")->required();
    sweep->add_option("--values", values, "comma-separated axis values")->required();

    std::string grid_path;
    auto* grid = app.add_subcommand("grid-search", "select the best configuration by validation accuracy");
    add_common(grid, true);
    grid->add_option("--grid", grid_path, "grid file: one 'key = v1, v2' per line")->required();

    CorruptOptions co;
    auto* corr = app.add_subcommand("corrupt", "robustness curves: clean training, corrupted evaluation");
    add_common(corr, true);
    corr->add_option("--variants", co.variants, "comma-separated variants")->capture_default_str();
    corr->add_option("--kinds", co.kinds, "comma-separated corruption kinds")->capture_default_str();
    corr->add_option("--levels", co.levels, "comma-separated levels in [0, 1]")->capture_default_str();
    corr->add_flag("--mask-rows", co.mask_rows, "mask whole node rows instead of entries");

    std::string betas = "0.1,1,10", patterns = "16,64";
    auto* phase = app.add_subcommand("phase-diagram", "accuracy over initial beta and pattern count");
    add_common(phase, true);
    phase->add_option("--betas", betas, "initial beta grid")->capture_default_str();
    phase->add_option("--patterns", patterns, "pattern count grid")->capture_default_str();

    std::string gate_levels = "0,0.25,0.5,0.75";
    bool gate_rows = false;
    auto* gates = app.add_subcommand("gate-analysis", "mean gate value under feature masking");
    add_common(gates, true);
    gates->add_option("--levels", gate_levels, "mask levels")->capture_default_str();
    gates->add_flag("--mask-rows", gate_rows, "mask whole node rows instead of entries");

    auto* theory = app.add_subcommand("verify-theory", "run the convergence and bound certificates");
    add_common(theory, false);

    std::string op_checkpoint;
    auto* op = app.add_subcommand("operating-point", "report beta*||M||^2 and the convexity regime");
    add_common(op, true);
    op->add_option("--checkpoint", op_checkpoint, "report a saved model instead of training");

    std::string syn_kind = "homophilous", syn_out;
    std::uint64_t syn_seed = 0;
    auto* syn = app.add_subcommand("synthesize", "write a synthetic block graph to a directory");
    syn->add_option("--kind", syn_kind, "homophilous | heterophilous")->capture_default_str();
    syn->add_option("--graph-seed", syn_seed, "graph seed")->capture_default_str();
    syn->add_option("--out", syn_out, "output directory")->required();

    std::string manifest_path, replay_out;
    auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    replay->add_option("manifest", manifest_path, "manifest JSON")->required();
    replay->add_option("--out", replay_out, "output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        throw ConfigError(e.what());
    }

    if (syn->parsed()) return cmd_synthesize(syn_kind, syn_seed, syn_out, out);
    if (replay->parsed()) {
        const RunManifest m = load_manifest(manifest_path);
        std::vector<std::string> again{m.command};
        again.insert(again.end(), m.arguments.begin(), m.arguments.end());
        again.push_back("--out");
        again.push_back(replay_out);
        return run(again, out, err);
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::vector<std::string> tail(args.begin() + 1, args.end());
    Context ctx(sub->get_name(), replayable_arguments(tail), common, out);
    if (sub == train) return cmd_train(ctx);
    if (sub == evaluate) return cmd_evaluate(ctx, eo);
    if (sub == sweep) return cmd_sweep(ctx, axis, values);
    if (sub == grid) return cmd_grid_search(ctx, grid_path);
    if (sub == corr) return cmd_corrupt(ctx, co);
    if (sub == phase) return cmd_phase_diagram(ctx, betas, patterns);
    if (sub == gates) return cmd_gate_analysis(ctx, gate_levels, gate_rows);
    if (sub == theory) return cmd_verify_theory(ctx);
    if (sub == op) return cmd_operating_point(ctx, op_checkpoint);
    throw ConfigError("unhandled subcommand " + sub->get_name());
}

/// Runs one command line (without the program name). Errors are reported on
/// `err` and mapped to exit codes: config 2, data 3, numeric 4, certificate 5.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace ghn::cli
