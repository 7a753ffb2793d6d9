#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"

using namespace ghn;

namespace {

Matrix layer_norm_rows(const Matrix& x, double eps = 1e-5) {
    Matrix out(x.rows(), x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).mean();
        const double var = (x.row(r).array() - mean).square().mean();
        out.row(r) = (x.row(r).array() - mean) / std::sqrt(var + eps);
    }
    return out;
}

Matrix eval_logits(GhnModel& model, const Graph& g, const CsrMatrix& lap) {
    Tape t;
    return forward(t, model, g.features, lap, false, nullptr, false).logits.value();
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.hidden_dim = 8;
    cfg.num_patterns = 8;
    cfg.groups = 2;
    cfg.epochs = 20;
    return cfg;
}

BlockGraphSpec small_spec(std::uint64_t seed) {
    BlockGraphSpec s = homophilous_spec(seed);
    s.nodes = 60;
    s.feature_dim = 6;
    s.train_per_class = 10;
    s.val_nodes = 20;
    return s;
}

} // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
    Parameter p("w", Matrix::Constant(1, 3, 2.0));
    p.grad << 0.5, -3.0, 0.0;
    Adam opt({&p}, 0.1, 0.0);
    opt.step();
    EXPECT_NEAR(p.value(0, 0), 2.0 - 0.1, 1e-6);
    EXPECT_NEAR(p.value(0, 1), 2.0 + 0.1, 1e-6);
    EXPECT_EQ(p.value(0, 2), 2.0);
    EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, WeightDecayAndFrozenParameters) {
    Parameter decayed("a", Matrix::Constant(1, 1, 1.0));
    Parameter exempt("b", Matrix::Constant(1, 1, 1.0), false);
    Parameter frozen("c", Matrix::Constant(1, 1, 1.0));
    frozen.trainable = false;
    for (Parameter* p : {&decayed, &exempt, &frozen}) p->grad.setZero();
    frozen.grad(0, 0) = 5.0;
    Adam opt({&decayed, &exempt, &frozen}, 0.01, 0.5);
    opt.step();
    EXPECT_NEAR(decayed.value(0, 0), 0.99, 1e-6);  // decay gradient 0.5 → one lr step
    EXPECT_EQ(exempt.value(0, 0), 1.0);
    EXPECT_EQ(frozen.value(0, 0), 1.0);
}

TEST(Config, DefaultsMatchReferenceTable) {
    const TrainConfig c;
    EXPECT_EQ(c.hidden_dim, 64);
    EXPECT_EQ(c.num_patterns, 64);
    EXPECT_EQ(c.beta_init, 1.0);
    EXPECT_EQ(c.lambda, 0.3);
    EXPECT_EQ(c.alpha, 0.3);
    EXPECT_EQ(c.iterations, 4);
    EXPECT_EQ(c.num_layers, 2);
    EXPECT_EQ(c.groups, 8);
    EXPECT_EQ(c.heads, 1);
    EXPECT_EQ(c.dropout, 0.3);
    EXPECT_EQ(c.gate_bias, 2.0);
    EXPECT_EQ(c.skip_weight, 0.1);
    EXPECT_EQ(c.learning_rate, 0.01);
    EXPECT_EQ(c.weight_decay, 5e-4);
    EXPECT_EQ(c.epochs, 300);
    EXPECT_EQ(c.patience, 50);
}

TEST(Config, FileParsingAndErrors) {
    TrainConfig c;
    std::istringstream in("# comment\nlambda = 0.5\nvariant=lsr\n\nheads = 2  # trailing\n");
    apply_config(c, in);
    EXPECT_EQ(c.lambda, 0.5);
    EXPECT_EQ(c.variant, Variant::lsr);
    EXPECT_EQ(c.heads, 2);

    std::istringstream typo("lamda=0.3\n");
    try {
        apply_config(c, typo);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("did you mean 'lambda'"), std::string::npos) << e.what();
    }
    std::istringstream bad_value("alpha = fast\n");
    EXPECT_THROW(apply_config(c, bad_value), ConfigError);
    std::istringstream no_equals("alpha 0.3\n");
    EXPECT_THROW(apply_config(c, no_equals), ConfigError);
    EXPECT_THROW(set_key(c, "epochs", "1.5"), ConfigError);
    EXPECT_THROW(set_key(c, "self_loops", "maybe"), ConfigError);
}

TEST(Config, KeyHashAndHelp) {
    TrainConfig a, b;
    b.seed = 99;
    EXPECT_EQ(config_key(a), config_key(b));
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.lambda = 0.30000000000000004;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    const std::string help = config_help();
    for (const auto& k : config_keys())
        EXPECT_NE(help.find(k.name + "=" + k.get(a)), std::string::npos) << k.name;
    // Every value round-trips through its text form.
    for (const auto& k : config_keys()) {
        TrainConfig c;
        set_key(c, k.name, k.get(b));
        EXPECT_EQ(k.get(c), k.get(b));
    }
}

TEST(Config, GridExpansion) {
    std::istringstream in("lambda = 0, 0.3\nheads = 1, 2, 4\n");
    const auto grid = expand_grid(TrainConfig{}, in);
    ASSERT_EQ(grid.size(), 6u);
    EXPECT_EQ(grid[0].lambda, 0.0);
    EXPECT_EQ(grid[0].heads, 1);
    EXPECT_EQ(grid[5].lambda, 0.3);
    EXPECT_EQ(grid[5].heads, 4);
    std::istringstream bad("lamda = 0\n");
    EXPECT_THROW(expand_grid(TrainConfig{}, bad), ConfigError);
}

TEST(Config, Validation) {
    TrainConfig c;
    c.heads = 3;
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainConfig{};
    c.variant = Variant::hier;
    c.num_patterns = 60;
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainConfig{};
    c.dropout = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainConfig{};
    c.variant = Variant::nomem;
    c.heads = 3;  // irrelevant without memory
    EXPECT_NO_THROW(c.validate());
}

TEST(Forward, ShapesAndParameterCount) {
    const Graph g = block_graph(small_spec(1));
    const CsrMatrix lap = normalized_laplacian(g, true);
    Rng rng(0);
    TrainConfig cfg = small_config();
    GhnModel model = GhnModel::create(cfg, 6, 2, rng);
    const Matrix logits = eval_logits(model, g, lap);
    EXPECT_EQ(logits.rows(), 60);
    EXPECT_EQ(logits.cols(), 2);
    // encoder 6·8+8, per layer M 8·8 + log β + gate 8·16+8 + norm 16, classifier 8·2+2
    const std::size_t per_layer = 64 + 1 + 128 + 8 + 16;
    EXPECT_EQ(model.parameter_count(), 56 + 2 * per_layer + 18);
    EXPECT_THROW(GhnModel::create(cfg, 6, 0, rng), DataError);
    Matrix wrong = Matrix::Zero(60, 5);
    Tape t;
    EXPECT_THROW(forward(t, model, wrong, lap, false, nullptr), ShapeError);
}

TEST(Forward, ZeroLayersIsEncoderThenClassifier) {
    const Graph g = block_graph(small_spec(2));
    const CsrMatrix lap = normalized_laplacian(g, true);
    Rng rng(1);
    TrainConfig cfg = small_config();
    cfg.num_layers = 0;
    GhnModel m = GhnModel::create(cfg, 6, 2, rng);
    const Matrix h = ((g.features * m.encoder_weight.value).rowwise() +
                      RowVector(m.encoder_bias.value.row(0)))
                         .cwiseMax(0.0);
    const Matrix want = (h * m.classifier_weight.value).rowwise() + RowVector(m.classifier_bias.value.row(0));
    EXPECT_LT((eval_logits(m, g, lap) - want).norm(), 1e-12);
}

TEST(Forward, NoMemWithoutSmoothingIsScaledLayerNorm) {
    const Graph g = block_graph(small_spec(3));
    const CsrMatrix lap = normalized_laplacian(g, true);
    Rng rng(2);
    TrainConfig cfg = small_config();
    cfg.variant = Variant::nomem;
    cfg.lambda = 0.0;
    cfg.num_layers = 1;
    GhnModel m = GhnModel::create(cfg, 6, 2, rng);
    const Matrix h = ((g.features * m.encoder_weight.value).rowwise() +
                      RowVector(m.encoder_bias.value.row(0)))
                         .cwiseMax(0.0);
    const Matrix ln = layer_norm_rows(1.1 * h);
    const Matrix want = (ln * m.classifier_weight.value).rowwise() + RowVector(m.classifier_bias.value.row(0));
    EXPECT_LT((eval_logits(m, g, lap) - want).norm(), 1e-10);
}

TEST(Forward, DeterministicGivenSeed) {
    const Graph g = block_graph(small_spec(4));
    const CsrMatrix lap = normalized_laplacian(g, true);
    for (Variant v : {Variant::lse, Variant::lsr, Variant::hier, Variant::nomem}) {
        TrainConfig cfg = small_config();
        cfg.variant = v;
        Rng r1(7), r2(7);
        GhnModel a = GhnModel::create(cfg, 6, 2, r1), b = GhnModel::create(cfg, 6, 2, r2);
        EXPECT_EQ(eval_logits(a, g, lap), eval_logits(b, g, lap)) << to_string(v);
    }
}

TEST(Forward, MemoryGradientIsNonzeroAndMatchesFiniteDifferences) {
    const Graph g = block_graph(small_spec(5));
    const CsrMatrix lap = normalized_laplacian(g, true);
    Rng rng(3);
    TrainConfig cfg = small_config();
    cfg.iterations = 4;
    GhnModel m = GhnModel::create(cfg, 6, 2, rng);
    const auto rows = g.nodes_in(Split::train);
    auto loss_value = [&]() {
        Tape t;
        return ad::cross_entropy_with_logits(
                   forward(t, m, g.features, lap, false, nullptr, false).logits, g.labels, rows)
            .value()(0, 0);
    };
    Tape t;
    for (Parameter* p : m.parameters()) p->zero_grad();
    t.backward(ad::cross_entropy_with_logits(forward(t, m, g.features, lap, false, nullptr).logits,
                                             g.labels, rows));
    Parameter& patterns = m.layers[0].bank->patterns;
    EXPECT_GT(patterns.grad.norm(), 0.0);
    Rng pick(4);
    std::uniform_int_distribution<Index> idx(0, patterns.value.size() - 1);
    for (int i = 0; i < 5; ++i) {
        const Index k = idx(pick);
        const double orig = patterns.value.data()[k], h = 1e-6;
        patterns.value.data()[k] = orig + h;
        const double up = loss_value();
        patterns.value.data()[k] = orig - h;
        const double down = loss_value();
        patterns.value.data()[k] = orig;
        const double fd = (up - down) / (2 * h);
        const double an = patterns.grad.data()[k];
        EXPECT_LE(std::abs(fd - an), 1e-4 * std::max(std::abs(fd), 1e-3)) << "coordinate " << k;
    }
    EXPECT_GT(m.layers[0].bank->log_beta.grad.norm(), 0.0);
}

TEST(Accuracy, NonFiniteRowsCountAsWrong) {
    Matrix z(3, 2);
    z << 1, 0, 0, 1, std::nan(""), 0;
    EXPECT_NEAR(accuracy(z, {0, 1, 1}, {0, 1, 2}), 2.0 / 3.0, 1e-15);
    EXPECT_TRUE(std::isnan(accuracy(z, {0, 1, 1}, {})));
}

TEST(Train, ZeroLearningRateKeepsParameters) {
    const Graph g = block_graph(small_spec(6));
    const CsrMatrix lap = normalized_laplacian(g, true);
    TrainConfig cfg = small_config();
    cfg.learning_rate = 0.0;
    cfg.weight_decay = 0.0;
    cfg.epochs = 5;
    cfg.patience = 10;
    Rng rng(cfg.seed);
    GhnModel m = GhnModel::create(cfg, 6, 2, rng);
    const auto before = m.snapshot();
    const RunRecord r = train(m, g, lap, cfg);
    const auto after = m.snapshot();
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i], after[i]);
    ASSERT_EQ(r.curve.size(), 5u);
    for (const auto& e : r.curve) EXPECT_EQ(e.val_acc, r.curve.front().val_acc);
}

TEST(Train, PatienceOneStopsAtEpochTwo) {
    const Graph g = block_graph(small_spec(7));
    const CsrMatrix lap = normalized_laplacian(g, true);
    TrainConfig cfg = small_config();
    cfg.learning_rate = 0.0;
    cfg.patience = 1;
    const RunRecord r = train_run(g, lap, cfg);
    EXPECT_EQ(r.epochs_run, 2);
    EXPECT_EQ(r.best_epoch, 1);
}

TEST(Train, RestoresBestValidationParameters) {
    const Graph g = block_graph(small_spec(8));
    const CsrMatrix lap = normalized_laplacian(g, true);
    TrainConfig cfg = small_config();
    cfg.epochs = 40;
    cfg.patience = 10;
    const RunRecord r = train_run(g, lap, cfg);
    double best = 0.0;
    for (const auto& e : r.curve) best = std::max(best, e.val_acc);
    EXPECT_EQ(r.best_val_acc, best);
    EXPECT_EQ(r.val_acc, best);
    EXPECT_FALSE(r.collapsed);
    EXPECT_EQ(r.layers.size(), 2u);
}

TEST(Train, DivergenceIsRecordedAsCollapse) {
    const Graph g = block_graph(small_spec(9));
    const CsrMatrix lap = normalized_laplacian(g, true);
    TrainConfig cfg = small_config();
    cfg.lambda = -1e300;
    cfg.alpha = 1.0;
    const RunRecord r = train_run(g, lap, cfg);
    EXPECT_TRUE(r.collapsed);
    EXPECT_NE(r.collapse_reason.find("epoch 1"), std::string::npos) << r.collapse_reason;
    EXPECT_EQ(r.epochs_run, 1);
}

TEST(Train, BitIdenticalAcrossRuns) {
    const Graph g = block_graph(small_spec(10));
    const CsrMatrix lap = normalized_laplacian(g, true);
    TrainConfig cfg = small_config();
    cfg.seed = 3;
    const RunRecord a = train_run(g, lap, cfg), b = train_run(g, lap, cfg);
    ASSERT_EQ(a.curve.size(), b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
        EXPECT_EQ(a.curve[i].train_loss, b.curve[i].train_loss);
        EXPECT_EQ(a.curve[i].val_acc, b.curve[i].val_acc);
    }
    EXPECT_EQ(a.test_acc, b.test_acc);
}

TEST(Train, LearnsSeparableBlocks) {
    const Graph g = block_graph(homophilous_spec(100));
    const CsrMatrix lap = normalized_laplacian(g, true);
    const RunRecord r = train_run(g, lap, TrainConfig{});
    EXPECT_GE(r.test_acc, 0.9);
}

TEST(Train, FrozenOperatingPoint) {
    const Graph g = block_graph(small_spec(11));
    const CsrMatrix lap = normalized_laplacian(g, true);
    TrainConfig cfg = small_config();
    cfg.freeze_beta = true;
    cfg.freeze_patterns = true;
    cfg.pattern_norm_sq = 2.0;
    cfg.epochs = 5;
    const RunRecord r = train_run(g, lap, cfg);
    for (const auto& p : r.layers) {
        EXPECT_EQ(p.beta, 1.0);
        EXPECT_NEAR(p.product, 2.0, 1e-8);
        EXPECT_EQ(classify_regime(p.product), Regime::convex_boundary);
    }
}
