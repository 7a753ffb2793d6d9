#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"

using namespace ghn;

namespace {

Graph path_graph(Index n) {
    Graph g;
    g.num_nodes = n;
    for (Index v = 0; v + 1 < n; ++v) g.edges.emplace_back(v, v + 1);
    g.features = Matrix::Zero(n, 1);
    g.labels.assign(n, -1);
    g.split.assign(n, Split::none);
    return g;
}

// Dense I - D^{-1/2}(A + sI)D^{-1/2} from an adjacency matrix built pair by pair.
Matrix dense_laplacian(const Graph& g, bool self_loops) {
    const Index n = g.num_nodes;
    Matrix a = Matrix::Zero(n, n);
    for (Index u = 0; u < n; ++u)
        for (Index v = 0; v < n; ++v)
            for (auto [p, q] : g.edges)
                if ((p == u && q == v) || (p == v && q == u)) a(u, v) = 1.0;
    if (self_loops) a += Matrix::Identity(n, n);
    Matrix out = Matrix::Identity(n, n);
    for (Index u = 0; u < n; ++u)
        for (Index v = 0; v < n; ++v)
            out(u, v) -= a(u, v) / std::sqrt(a.row(u).sum() * a.row(v).sum());
    return out;
}

} // namespace

TEST(Csr, MultiplyMatchesDense) {
    Rng rng(3);
    Matrix dense = random_normal(5, 4, rng);
    for (Index i = 0; i < dense.size(); ++i)
        if (i % 3 == 0) dense.data()[i] = 0.0;
    std::vector<Index> offsets{0}, idx;
    std::vector<double> vals;
    for (Index r = 0; r < 5; ++r) {
        for (Index c = 0; c < 4; ++c)
            if (dense(r, c) != 0.0) {
                idx.push_back(c);
                vals.push_back(dense(r, c));
            }
        offsets.push_back(static_cast<Index>(idx.size()));
    }
    CsrMatrix s(5, 4, offsets, idx, vals);
    EXPECT_EQ(s.to_dense(), dense);
    const Matrix x = random_normal(4, 3, rng);
    EXPECT_LT((s.multiply(x) - dense * x).norm(), 1e-12);
    const Matrix y = random_normal(5, 2, rng);
    EXPECT_LT((s.multiply_transposed(y) - dense.transpose() * y).norm(), 1e-12);
    EXPECT_EQ(s.nnz(), static_cast<std::size_t>(vals.size()));
    EXPECT_EQ(s.at(0, 0), 0.0);
}

TEST(Csr, RejectsUnsortedColumns) {
    EXPECT_THROW(CsrMatrix(1, 3, {0, 2}, {2, 1}, {1.0, 1.0}), Error);
    EXPECT_THROW(CsrMatrix(1, 3, {0, 1}, {3}, {1.0}), Error);
}

TEST(Csr, PowerIterationMatchesEigenSolver) {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        Graph g = random_graph(12, 0.3, rng);
        const CsrMatrix lap = normalized_laplacian(g, trial % 2 == 0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap.to_dense());
        const double oracle = es.eigenvalues().cwiseAbs().maxCoeff();
        EXPECT_NEAR(symmetric_norm(lap).value, oracle, 1e-8);
    }
}

TEST(Laplacian, MatchesDenseConstruction) {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Graph g = random_graph(3 + trial, 0.4, rng);
        for (bool loops : {true, false}) {
            const Matrix got = normalized_laplacian(g, loops).to_dense();
            EXPECT_LT((got - dense_laplacian(g, loops)).cwiseAbs().maxCoeff(), 1e-14);
            EXPECT_LT((got - got.transpose()).norm(), 1e-15);
        }
    }
}

TEST(Laplacian, TraceIdentityAndNormBound) {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Graph g = random_graph(2 + trial, 0.25, rng);
        const bool loops = trial % 2 == 1;
        const CsrMatrix lap = normalized_laplacian(g, loops);
        const Matrix x = random_normal(g.num_nodes, 3, rng);
        const double pairwise = ghn::testing::pairwise_smoothness(g, x, loops);
        EXPECT_NEAR(laplacian_quadratic(lap, x), pairwise, 1e-10 * std::max(1.0, pairwise));
        EXPECT_LE(symmetric_norm(lap).value, 2.0 + 1e-8);
    }
}

TEST(Laplacian, IsolatedNodeNeedsSelfLoops) {
    Graph g = path_graph(3);
    g.edges.clear();
    EXPECT_THROW(normalized_laplacian(g, false), DataError);
    // With self-loops every isolated node gets a zero row.
    EXPECT_EQ(normalized_laplacian(g, true).to_dense(), Matrix::Zero(3, 3));
}

TEST(Laplacian, PathGraphEntries) {
    const Matrix l = normalized_laplacian(path_graph(3), false).to_dense();
    EXPECT_DOUBLE_EQ(l(0, 0), 1.0);
    EXPECT_NEAR(l(0, 1), -1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_EQ(l(0, 2), 0.0);
}

TEST(Edges, SymmetrizeDropsLoopsAndDuplicates) {
    auto e = symmetrize_edges({{2, 1}, {1, 2}, {0, 0}, {0, 3}, {3, 0}});
    const std::vector<std::pair<Index, Index>> expected{{0, 3}, {1, 2}};
    EXPECT_EQ(e, expected);
}

TEST(Parsers, RoundTripThroughStreams) {
    std::istringstream edges("# comment\n0 1\n2 1\n1 0\n2 2\n");
    std::istringstream feats("1 2\n3 4\n5 6\n");
    std::istringstream labels("0\n1\n-1\n");
    std::istringstream splits("train\ntest\nnone\n");
    const Graph g = parse_graph(edges, feats, labels, splits);
    EXPECT_EQ(g.num_nodes, 3);
    const std::vector<std::pair<Index, Index>> expected{{0, 1}, {1, 2}};
    EXPECT_EQ(g.edges, expected);
    EXPECT_EQ(g.features(2, 1), 6.0);
    EXPECT_EQ(g.num_classes(), 2);
    EXPECT_EQ(g.nodes_in(Split::train), std::vector<Index>{0});
}

TEST(Parsers, ErrorsNameTheProblem) {
    auto expect_data_error = [](const std::string& e, const std::string& f, const std::string& l,
                                const std::string& s, const std::string& needle) {
        std::istringstream es(e), fs(f), ls(l), ss(s);
        try {
            parse_graph(es, fs, ls, ss);
            FAIL() << "expected DataError containing " << needle;
        } catch (const DataError& err) {
            EXPECT_NE(std::string(err.what()).find(needle), std::string::npos) << err.what();
        }
    };
    expect_data_error("0 1 0.5\n", "1\n2\n", "0\n0\n", "train\ntrain\n", "weight");
    expect_data_error("0 5\n", "1\n2\n", "0\n0\n", "train\ntrain\n", "range");
    expect_data_error("0 1\n", "1\nnan\n", "0\n0\n", "train\ntrain\n", "row");
    expect_data_error("0 1\n", "1 2\n3\n", "0\n0\n", "train\ntrain\n", "");
    expect_data_error("0 1\n", "1\n2\n", "0\n", "train\ntrain\n", "labels");
    expect_data_error("0 1\n", "1\n2\n", "0\n0\n", "train\nbogus\n", "bogus");
    expect_data_error("0 1\n", "1\n2\n", "0\n-1\n", "train\ntest\n", "unlabeled");
}

TEST(Parsers, SaveLoadRoundTrip) {
    const Graph g = block_graph(homophilous_spec(4));
    const std::string dir = ::testing::TempDir();
    const std::string e = dir + "/e.txt", f = dir + "/f.txt", l = dir + "/l.txt", s = dir + "/s.txt";
    save_graph(g, e, f, l, s);
    const Graph back = load_graph(e, f, l, s);
    EXPECT_EQ(back.edges, g.edges);
    EXPECT_EQ(back.features, g.features);  // 17 significant digits round-trip
    EXPECT_EQ(back.labels, g.labels);
    EXPECT_EQ(back.split, g.split);
    EXPECT_THROW(load_graph(dir + "/missing.txt", f, l, s), DataError);
}

TEST(Synthetic, BlockGraphShape) {
    const Graph g = block_graph(homophilous_spec(1));
    EXPECT_EQ(g.num_nodes, 200);
    EXPECT_EQ(g.features.cols(), 16);
    EXPECT_EQ(g.num_classes(), 2);
    EXPECT_EQ(g.nodes_in(Split::train).size(), 40u);
    EXPECT_EQ(g.nodes_in(Split::val).size(), 60u);
    EXPECT_EQ(g.nodes_in(Split::test).size(), 100u);
    std::size_t same = 0;
    for (auto [u, v] : g.edges) same += g.labels[u] == g.labels[v];
    EXPECT_GT(static_cast<double>(same) / g.edges.size(), 0.8);

    const Graph h = block_graph(heterophilous_spec(1));
    same = 0;
    for (auto [u, v] : h.edges) same += h.labels[u] == h.labels[v];
    EXPECT_LT(static_cast<double>(same) / h.edges.size(), 0.2);
}

TEST(Synthetic, Deterministic) {
    const Graph a = block_graph(homophilous_spec(8));
    const Graph b = block_graph(homophilous_spec(8));
    EXPECT_EQ(a.edges, b.edges);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.split, b.split);
}
