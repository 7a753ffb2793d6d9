#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

using namespace ghn;

namespace {

Graph small_graph(std::uint64_t seed) {
    BlockGraphSpec s = homophilous_spec(seed);
    s.nodes = 60;
    s.feature_dim = 6;
    s.train_per_class = 10;
    s.val_nodes = 20;
    return block_graph(s);
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.hidden_dim = 8;
    cfg.num_patterns = 8;
    cfg.groups = 2;
    cfg.epochs = 30;
    cfg.patience = 10;
    return cfg;
}

Graph tiny_features(Index n, Index d) {
    Graph g;
    g.num_nodes = n;
    g.features = Matrix::Constant(n, d, 1.0);
    g.labels.assign(n, 0);
    g.split.assign(n, Split::train);
    for (Index v = 0; v + 1 < n; ++v) g.edges.emplace_back(v, v + 1);
    return g;
}

} // namespace

TEST(Corruption, LevelZeroIsIdentity) {
    const Graph g = small_graph(1);
    for (auto kind : {CorruptionKind::edge_drop, CorruptionKind::feature_mask, CorruptionKind::feature_noise}) {
        const Graph c = corrupt(g, {kind, 0.0, 3});
        EXPECT_EQ(c.edges, g.edges) << to_string(kind);
        EXPECT_EQ(c.features, g.features) << to_string(kind);
    }
}

TEST(Corruption, FullEdgeDropLeavesZeroLaplacian) {
    const Graph g = small_graph(2);
    const Graph c = corrupt(g, {CorruptionKind::edge_drop, 1.0, 0});
    EXPECT_TRUE(c.edges.empty());
    EXPECT_EQ(normalized_laplacian(c, true).to_dense().norm(), 0.0);
    EXPECT_EQ(c.labels, g.labels);
    EXPECT_EQ(c.split, g.split);
}

TEST(Corruption, EdgeDropRemovesFloorOfLevelTimesEdges) {
    const Graph g = small_graph(3);
    const Graph c = corrupt(g, {CorruptionKind::edge_drop, 0.3, 5});
    const auto dropped = static_cast<std::size_t>(std::floor(0.3 * g.edges.size()));
    EXPECT_EQ(c.edges.size(), g.edges.size() - dropped);
    const std::set<std::pair<Index, Index>> original(g.edges.begin(), g.edges.end());
    for (const auto& e : c.edges) EXPECT_TRUE(original.count(e));
}

TEST(Corruption, EntryMaskZeroesExactCount) {
    const Graph g = tiny_features(10, 4);
    const Graph c = corrupt(g, {CorruptionKind::feature_mask, 0.5, 1});
    EXPECT_EQ((c.features.array() == 0.0).count(), 20);
    EXPECT_EQ(c.edges, g.edges);
}

TEST(Corruption, RowMaskZeroesWholeRows) {
    const Graph g = tiny_features(10, 4);
    const Graph c = corrupt(g, {CorruptionKind::feature_mask, 0.3, 1, MaskMode::rows});
    int zero_rows = 0;
    for (Index r = 0; r < 10; ++r) {
        const auto zeros = (c.features.row(r).array() == 0.0).count();
        EXPECT_TRUE(zeros == 0 || zeros == 4);
        zero_rows += zeros == 4;
    }
    EXPECT_EQ(zero_rows, 3);
}

TEST(Corruption, NoiseScalesWithColumnSpread) {
    Rng rng(4);
    Graph g = tiny_features(4000, 2);
    g.features.col(0) = random_normal(4000, 1, rng, 2.0);
    g.features.col(1).setConstant(5.0);  // zero spread: no noise
    const Graph c = corrupt(g, {CorruptionKind::feature_noise, 0.5, 9});
    const Vector diff = c.features.col(0) - g.features.col(0);
    const double sd = std::sqrt(diff.squaredNorm() / diff.size());
    EXPECT_NEAR(sd, 0.5 * 2.0, 0.05);
    EXPECT_EQ(c.features.col(1), g.features.col(1));
}

TEST(Corruption, DeterministicAndValidated) {
    const Graph g = small_graph(5);
    for (auto kind : {CorruptionKind::edge_drop, CorruptionKind::feature_mask, CorruptionKind::feature_noise}) {
        const Graph a = corrupt(g, {kind, 0.4, 11}), b = corrupt(g, {kind, 0.4, 11});
        EXPECT_EQ(a.edges, b.edges);
        EXPECT_EQ(a.features, b.features);
    }
    EXPECT_THROW(corrupt(g, {CorruptionKind::edge_drop, 1.5, 0}), ConfigError);
    EXPECT_THROW(corrupt(g, {CorruptionKind::edge_drop, -0.1, 0}), ConfigError);
    EXPECT_EQ(parse_corruption("feature_noise"), CorruptionKind::feature_noise);
    EXPECT_THROW(parse_corruption("noise"), ConfigError);
}

TEST(Statistics, RelativeDropSign) {
    EXPECT_NEAR(relative_drop(80.0, 72.0), -10.0, 1e-12);
    EXPECT_NEAR(relative_drop(0.5, 0.6), 20.0, 1e-12);
    EXPECT_TRUE(std::isnan(relative_drop(0.0, 0.5)));
}

TEST(Statistics, BimodalityFlag) {
    std::vector<double> split(5, 0.94);
    split.insert(split.end(), 5, 0.50);
    EXPECT_EQ(is_bimodal(split), std::optional<bool>(true));
    EXPECT_EQ(is_bimodal(std::vector<double>(10, 0.94)), std::optional<bool>(false));
    EXPECT_FALSE(is_bimodal({0.94}).has_value());
    const SeedSummary s = summarize({0.7, 0.8, 0.9});
    EXPECT_NEAR(s.mean, 0.8, 1e-15);
    EXPECT_NEAR(*s.stddev, 0.1, 1e-15);
    EXPECT_EQ(format_mean_std(s), "0.800 ± 0.100");
    EXPECT_EQ(format_mean_std(summarize({0.5})), "0.500");
}

TEST(Runner, ParallelMapKeepsOrderAndRethrowsLowestIndex) {
    const std::function<int(std::size_t)> sq = [](std::size_t i) { return static_cast<int>(i * i); };
    EXPECT_EQ(parallel_map<int>(5, sq, 3), (std::vector<int>{0, 1, 4, 9, 16}));
    const std::function<int(std::size_t)> bad = [](std::size_t i) -> int {
        if (i % 2 == 1) throw ConfigError("job " + std::to_string(i));
        return 0;
    };
    try {
        parallel_map<int>(6, bad, 3);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_STREQ(e.what(), "job 1");
    }
}

TEST(Runner, ThreadCountDoesNotChangeRecords) {
    const Graph g = small_graph(6);
    TrainConfig a = small_config(), b = small_config();
    b.lambda = 0.0;
    const auto one = run_all(g, {a, b}, {0, 1}, 1);
    const auto two = run_all(g, {a, b}, {0, 1}, 2);
    ASSERT_EQ(one.size(), 4u);
    ASSERT_EQ(two.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(one[i].config_key, two[i].config_key);
        EXPECT_EQ(one[i].seed, two[i].seed);
        EXPECT_EQ(one[i].test_acc, two[i].test_acc);
        ASSERT_EQ(one[i].curve.size(), two[i].curve.size());
        for (std::size_t e = 0; e < one[i].curve.size(); ++e)
            EXPECT_EQ(one[i].curve[e].train_loss, two[i].curve[e].train_loss);
    }
    for (std::size_t i = 1; i < 4; ++i)
        EXPECT_TRUE(one[i - 1].config_key < one[i].config_key ||
                    (one[i - 1].config_key == one[i].config_key && one[i - 1].seed < one[i].seed));
}

TEST(GridSearch, SingletonTieBreakAndDominance) {
    const Graph g = small_graph(7);
    TrainConfig base = small_config();
    const GridResult single = grid_search(g, {base}, {0});
    EXPECT_EQ(single.best_key, config_key(base));
    EXPECT_EQ(single.records.size(), 1u);

    // With a zero learning rate the decay setting cannot matter: a pure tie.
    TrainConfig frozen = base, frozen2 = base;
    frozen.learning_rate = frozen2.learning_rate = 0.0;
    frozen.weight_decay = 1e-3;
    frozen2.weight_decay = 1e-4;
    const GridResult tie = grid_search(g, {frozen, frozen2}, {0, 1});
    EXPECT_EQ(tie.best_key, std::min(config_key(frozen), config_key(frozen2)));

    const GridResult dom = grid_search(g, {frozen, base}, {0, 1});
    EXPECT_EQ(dom.best_key, config_key(base));
    EXPECT_GT(dom.best_val.mean, tie.best_val.mean);

    EXPECT_THROW(grid_search(g, {}, {0}), ConfigError);
    EXPECT_THROW(grid_search(g, {base}, {}), ConfigError);
}

TEST(Ablation, AxisParsingAndValidation) {
    EXPECT_EQ(parse_axis("T"), AblationAxis::iterations);
    EXPECT_EQ(parse_axis("H"), AblationAxis::heads);
    EXPECT_THROW(parse_axis("beta"), ConfigError);
    const TrainConfig base;
    EXPECT_THROW(with_axis(base, AblationAxis::lambda, -0.1), ConfigError);
    EXPECT_EQ(with_axis(base, AblationAxis::negative_lambda, -0.1).lambda, -0.1);
    EXPECT_THROW(with_axis(base, AblationAxis::iterations, 2.5), ConfigError);
    EXPECT_THROW(with_axis(base, AblationAxis::heads, 3), ConfigError);  // 64 % 3
    EXPECT_EQ(with_axis(base, AblationAxis::heads, 4).heads, 4);
}

TEST(Ablation, ForcedCollapseIsCountedNotFatal) {
    const Graph g = small_graph(8);
    TrainConfig base = small_config();
    base.epochs = 5;
    std::vector<RunRecord> records;
    const auto rows = ablation_sweep(g, base, AblationAxis::negative_lambda, {0.0, -1e300}, {0, 1}, 1,
                                     &records);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].collapsed, 0);
    EXPECT_EQ(rows[1].collapsed, 2);
    EXPECT_EQ(rows[1].test.mean, 0.0);
    EXPECT_EQ(rows[1].test.bimodal, std::optional<bool>(false));
    EXPECT_EQ(records.size(), 4u);
    EXPECT_NE(rows[0].config_hash, rows[1].config_hash);
}

TEST(PhaseDiagram, CellsAndPreconditions) {
    const Graph g = small_graph(9);
    TrainConfig base = small_config();
    base.epochs = 3;
    const auto cells = phase_diagram(g, base, {0.5, 2.0}, {4, 8}, {0});
    ASSERT_EQ(cells.size(), 4u);
    EXPECT_EQ(cells[1].beta_init, 0.5);
    EXPECT_EQ(cells[1].num_patterns, 8);
    EXPECT_EQ(cells[2].beta_init, 2.0);
    base.variant = Variant::nomem;
    EXPECT_THROW(phase_diagram(g, base, {1.0}, {4}, {0}), ConfigError);
    base.variant = Variant::lse;
    EXPECT_THROW(phase_diagram(g, base, {}, {4}, {0}), ConfigError);
}

TEST(Robustness, RelativeDropAgainstCleanRow) {
    const Graph g = small_graph(10);
    TrainConfig base = small_config();
    const auto rows = robustness_curve(g, base, {Variant::lse, Variant::nomem},
                                       {CorruptionKind::edge_drop}, {0.0, 0.5, 1.0}, {0, 1});
    ASSERT_EQ(rows.size(), 6u);
    for (std::size_t series = 0; series < 2; ++series) {
        const auto& clean = rows[3 * series];
        EXPECT_EQ(clean.level, 0.0);
        EXPECT_EQ(clean.relative_drop, 0.0);
        for (std::size_t i = 1; i < 3; ++i) {
            const auto& r = rows[3 * series + i];
            EXPECT_NEAR(r.relative_drop, (r.test.mean - clean.test.mean) / clean.test.mean * 100.0, 1e-12);
        }
    }
    // Level 0 reproduces ordinary clean evaluation.
    TrainConfig cfg = base;
    cfg.seed = 0;
    const RunRecord r0 = train_run(g, laplacian_for(g, cfg), cfg);
    cfg.seed = 1;
    const RunRecord r1 = train_run(g, laplacian_for(g, cfg), cfg);
    EXPECT_NEAR(rows[0].test.mean, 0.5 * (r0.test_acc + r1.test_acc), 1e-12);
}

TEST(Gates, ZeroWeightsReportSigmoidOfBias) {
    const Graph g = small_graph(11);
    Rng rng(0);
    GhnModel model = GhnModel::create(small_config(), 6, 2, rng);
    for (auto& layer : model.layers) {
        layer.gate->weight.value.setZero();
        layer.gate->bias.value.setConstant(2.0);
    }
    const auto profile = gate_profile(model, g, {0.0, 0.5}, 3);
    ASSERT_EQ(profile.size(), 2u);
    for (const auto& p : profile) EXPECT_NEAR(p.gate_mean, 1.0 / (1.0 + std::exp(-2.0)), 1e-12);
    EXPECT_NEAR(profile[0].gate_mean, 0.8808, 1e-4);
    EXPECT_THROW(gate_profile(model, g, {}, 3), ConfigError);
    TrainConfig nomem = small_config();
    nomem.variant = Variant::nomem;
    GhnModel plain = GhnModel::create(nomem, 6, 2, rng);
    EXPECT_THROW(gate_profile(plain, g, {0.0}, 3), ConfigError);
    TrainConfig three = TrainConfig{};
    three.heads = 3;
    EXPECT_THROW(gate_analysis(g, three, {0.0}, {0}), ConfigError);
}
