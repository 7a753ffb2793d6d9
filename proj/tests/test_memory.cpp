#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace ghn;
using ghn::testing::finite_difference;
using ghn::testing::relative_error;

namespace {

// Loop-based Mᵀ softmax(β M x) for a single query row.
std::vector<double> brute_lse(const Matrix& m, const std::vector<double>& x, double beta) {
    const Index k = m.rows(), d = m.cols();
    std::vector<double> logits(k);
    double mx = -1e300;
    for (Index i = 0; i < k; ++i) {
        double dot = 0.0;
        for (Index j = 0; j < d; ++j) dot += m(i, j) * x[j];
        logits[i] = beta * dot;
        mx = std::max(mx, logits[i]);
    }
    double z = 0.0;
    for (auto& l : logits) z += (l = std::exp(l - mx));
    std::vector<double> out(d, 0.0);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < d; ++j) out[j] += logits[i] / z * m(i, j);
    return out;
}

// Loop-based truncated-quadratic retrieval for a single query row.
std::vector<double> brute_lsr(const Matrix& m, const std::vector<double>& x, double beta) {
    const Index k = m.rows(), d = m.cols();
    std::vector<double> w(k);
    double total = 0.0;
    for (Index i = 0; i < k; ++i) {
        double dist = 0.0;
        for (Index j = 0; j < d; ++j) dist += (x[j] - m(i, j)) * (x[j] - m(i, j));
        w[i] = std::max(0.0, 1.0 - beta / 2.0 * dist);
        total += w[i];
    }
    if (total == 0.0) return x;
    std::vector<double> out(d, 0.0);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < d; ++j) out[j] += w[i] / total * m(i, j);
    return out;
}

std::vector<double> row(const Matrix& x, Index r) {
    return std::vector<double>(x.row(r).data(), x.row(r).data() + x.cols());
}

void expect_row_near(const Matrix& got, Index r, const std::vector<double>& want, double tol) {
    for (Index j = 0; j < got.cols(); ++j) EXPECT_NEAR(got(r, j), want[j], tol) << "col " << j;
}

} // namespace

TEST(Retrieval, LseMatchesBruteForce) {
    Rng rng(1);
    const Matrix m = random_normal(7, 5, rng);
    const Matrix x = random_normal(4, 5, rng, 2.0);
    const MemoryBank bank = MemoryBank::from_patterns(m, 1.7);
    const Matrix got = retrieve_lse(bank, x);
    for (Index r = 0; r < 4; ++r) expect_row_near(got, r, brute_lse(m, row(x, r), 1.7), 1e-12);
    const Matrix w = lse_weights(bank, x);
    EXPECT_LT((w.rowwise().sum() - Vector::Ones(4)).norm(), 1e-14);
}

TEST(Retrieval, LseLargeBetaSelectsNearestByInnerProduct) {
    Matrix m(3, 2);
    m << 1, 0, 0, 1, -1, 0;
    const MemoryBank bank = MemoryBank::from_patterns(m, 200.0);
    Matrix x(1, 2);
    x << 0.2, 0.9;
    EXPECT_LT((retrieve_lse(bank, x) - m.row(1)).norm(), 1e-12);
}

TEST(Retrieval, LsrMatchesBruteForceIncludingFallback) {
    Rng rng(2);
    const Matrix m = random_normal(6, 3, rng, 0.5);
    Matrix x = random_normal(5, 3, rng, 0.5);
    x.row(4).setConstant(50.0);  // outside every kernel: returned unchanged
    const MemoryBank bank = MemoryBank::from_patterns(m, 2.0, RetrievalKind::lsr);
    const Matrix got = retrieve_lsr(bank, x);
    for (Index r = 0; r < 5; ++r) expect_row_near(got, r, brute_lsr(m, row(x, r), 2.0), 1e-12);
    EXPECT_EQ(got.row(4), x.row(4));
}

TEST(Retrieval, LsrExactPatternIsFixed) {
    Rng rng(3);
    Matrix m = random_normal(4, 3, rng, 5.0);  // far apart, so each support holds one pattern
    const MemoryBank bank = MemoryBank::from_patterns(m, 1.0, RetrievalKind::lsr);
    EXPECT_LT((retrieve_lsr(bank, m) - m).norm(), 1e-12);
}

TEST(Retrieval, HierarchicalMatchesTwoStageOracle) {
    Rng rng(4);
    const Matrix m = random_normal(8, 3, rng);
    const Matrix x = random_normal(3, 3, rng);
    const double beta = 1.3;
    const int groups = 4;
    const MemoryBank bank = MemoryBank::from_patterns(m, beta, RetrievalKind::lse, groups);
    const Matrix got = retrieve_hier(bank, x);
    for (Index r = 0; r < 3; ++r) {
        // Route over centroids, then LSE inside each group of two patterns.
        std::vector<double> scores(groups);
        double mx = -1e300;
        for (int g = 0; g < groups; ++g) {
            double dot = 0.0;
            for (Index j = 0; j < 3; ++j) dot += 0.5 * (m(2 * g, j) + m(2 * g + 1, j)) * x(r, j);
            scores[g] = beta * dot;
            mx = std::max(mx, scores[g]);
        }
        double z = 0.0;
        for (auto& s : scores) z += (s = std::exp(s - mx));
        std::vector<double> want(3, 0.0);
        for (int g = 0; g < groups; ++g) {
            const auto inner = brute_lse(m.middleRows(2 * g, 2), row(x, r), beta);
            for (Index j = 0; j < 3; ++j) want[j] += scores[g] / z * inner[j];
        }
        expect_row_near(got, r, want, 1e-12);
    }
}

TEST(Retrieval, SingleGroupHierarchyIsFlat) {
    Rng rng(5);
    const Matrix m = random_normal(4, 3, rng);
    const Matrix x = random_normal(2, 3, rng);
    Tape t;
    const Var flat = lse_retrieval(t.constant(x), t.constant(m), t.constant(Matrix::Constant(1, 1, 0.7))).output;
    const Var hier = hier_retrieval(t.constant(x), t.constant(m), t.constant(Matrix::Constant(1, 1, 0.7)), 1);
    EXPECT_LT((flat.value() - hier.value()).norm(), 1e-14);
}

TEST(Retrieval, MultiHeadUsesColumnBlocks) {
    Rng rng(6);
    const Matrix m = random_normal(5, 6, rng);
    const Matrix x = random_normal(3, 6, rng);
    const MemoryBank bank = MemoryBank::from_patterns(m, 0.9, RetrievalKind::lse, 1, 3);
    const Matrix got = retrieve_multihead(bank, x);
    for (Index r = 0; r < 3; ++r)
        for (int h = 0; h < 3; ++h) {
            const Matrix mh = m.middleCols(2 * h, 2);
            const auto want = brute_lse(mh, {x(r, 2 * h), x(r, 2 * h + 1)}, 0.9);
            EXPECT_NEAR(got(r, 2 * h), want[0], 1e-12);
            EXPECT_NEAR(got(r, 2 * h + 1), want[1], 1e-12);
        }
    EXPECT_THROW(retrieve_lse(bank, x), ConfigError);
}

TEST(Retrieval, BankPreconditions) {
    Rng rng(7);
    EXPECT_THROW(MemoryBank::create(6, 64, 1.0, rng, RetrievalKind::lse, 4), ConfigError);
    EXPECT_THROW(MemoryBank::create(8, 64, 1.0, rng, RetrievalKind::lse, 1, 3), ConfigError);
    EXPECT_THROW(MemoryBank::create(8, 4, 1.0, rng, RetrievalKind::lsr, 2), ConfigError);
    EXPECT_THROW(MemoryBank::create(8, 4, 0.0, rng), ConfigError);
    const MemoryBank b = MemoryBank::create(8, 4, 2.5, rng);
    EXPECT_NEAR(b.beta(), 2.5, 1e-15);
    EXPECT_FALSE(b.log_beta.decay);
}

TEST(Gate, ZeroWeightsGiveSigmoidOfBias) {
    Rng rng(8);
    const Gate gate = Gate::constant(4, 2.0);
    const Matrix x = random_normal(3, 4, rng), r = random_normal(3, 4, rng);
    const Matrix g = gate_values(gate, x, r);
    const double s = 1.0 / (1.0 + std::exp(-2.0));
    EXPECT_LT((g.array() - s).abs().maxCoeff(), 1e-15);
    EXPECT_NEAR(s, 0.8808, 1e-4);
    EXPECT_LT((gate_blend(gate, x, r) - (s * r + (1 - s) * x)).norm(), 1e-14);
}

TEST(Gate, MatchesExplicitFormula) {
    Rng rng(9);
    const Gate gate = Gate::create(3, 2.0, rng);
    EXPECT_EQ(gate.weight.value.rows(), 3);
    EXPECT_EQ(gate.weight.value.cols(), 6);
    const Matrix x = random_normal(2, 3, rng), r = random_normal(2, 3, rng);
    const Matrix got = gate_blend(gate, x, r);
    for (Index n = 0; n < 2; ++n)
        for (Index j = 0; j < 3; ++j) {
            double pre = gate.bias.value(0, j);
            for (Index c = 0; c < 3; ++c)
                pre += gate.weight.value(j, c) * x(n, c) + gate.weight.value(j, 3 + c) * r(n, c);
            const double g = 1.0 / (1.0 + std::exp(-pre));
            EXPECT_NEAR(got(n, j), g * r(n, j) + (1 - g) * x(n, j), 1e-14);
        }
}

TEST(Retrieval, TapeGradientsMatchFiniteDifferences) {
    Rng rng(10);
    const Matrix x0 = random_normal(3, 4, rng, 0.5);
    const Matrix w = random_normal(3, 4, rng);
    for (RetrievalKind kind : {RetrievalKind::lse, RetrievalKind::lsr}) {
        for (int groups : {1, 2}) {
            if (kind == RetrievalKind::lsr && groups > 1) continue;
            const Matrix m0 = random_normal(4, 4, rng, 0.5);
            auto f = [&](const Matrix& m) {
                Tape t;
                BoundBank b{t.constant(m), t.constant(Matrix::Constant(1, 1, 0.8)), groups, 2, kind};
                return (retrieve(b, t.constant(x0)).value().array() * w.array()).sum();
            };
            Tape t;
            Var mv = t.variable(m0);
            BoundBank b{mv, t.constant(Matrix::Constant(1, 1, 0.8)), groups, 2, kind};
            t.backward(ad::sum(ad::elementwise_mul(retrieve(b, t.constant(x0)), t.constant(w))));
            EXPECT_LT(relative_error(t.grad(mv), finite_difference(f, m0)), 1e-7)
                << "kind " << static_cast<int>(kind) << " groups " << groups;
        }
    }
}

TEST(Retrieval, BetaGradientMatchesFiniteDifference) {
    Rng rng(11);
    const Matrix m = random_normal(5, 3, rng), x = random_normal(4, 3, rng);
    MemoryBank bank = MemoryBank::from_patterns(m, 1.2);
    auto f = [&](const Matrix& lb) {
        Tape t;
        BoundBank b{t.constant(m), t.constant(lb.array().exp().matrix()), 1, 1, RetrievalKind::lse};
        return retrieve(b, t.constant(x)).value().sum();
    };
    Tape t;
    BoundBank b = bind(t, bank);
    t.backward(ad::sum(retrieve(b, t.constant(x))));
    EXPECT_LT(relative_error(bank.log_beta.grad, finite_difference(f, bank.log_beta.value)), 1e-7);
}
