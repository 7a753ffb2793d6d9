#pragma once

#include <algorithm>
#include <numeric>

#include "graph.hpp"

namespace ghn {

/// Stochastic block model with Gaussian class-conditional features.
struct BlockGraphSpec {
    Index nodes = 200;
    Index feature_dim = 16;
    int classes = 2;
    /// Expected same-class and cross-class neighbors per node.
    double intra_degree = 6.0;
    double inter_degree = 0.6;
    /// Distance of each class mean from the origin, in noise standard deviations.
    double signal = 1.5;
    int train_per_class = 20;
    Index val_nodes = 60;
    std::uint64_t seed = 0;
};

inline BlockGraphSpec homophilous_spec(std::uint64_t seed = 0) {
    BlockGraphSpec s;
    s.seed = seed;
    return s;
}

inline BlockGraphSpec heterophilous_spec(std::uint64_t seed = 0) {
    BlockGraphSpec s;
    s.intra_degree = 0.6;
    s.inter_degree = 6.0;
    s.seed = seed;
    return s;
}

/// Nodes are assigned to classes round-robin; the split is a seeded shuffle
/// with `train_per_class` training nodes per class, `val_nodes` validation
/// nodes and the rest test.
inline Graph block_graph(const BlockGraphSpec& spec) {
    if (spec.classes < 2 || spec.nodes < spec.classes)
        throw ConfigError("block graph needs at least two classes and one node per class");
    Rng rng(spec.seed);
    Graph g;
    g.num_nodes = spec.nodes;
    g.labels.resize(spec.nodes);
    std::vector<Index> per_class(spec.classes, 0);
    for (Index v = 0; v < spec.nodes; ++v) {
        g.labels[v] = static_cast<int>(v % spec.classes);
        ++per_class[g.labels[v]];
    }

    const double n_same = static_cast<double>(spec.nodes) / spec.classes - 1.0;
    const double n_other = static_cast<double>(spec.nodes) - n_same - 1.0;
    std::bernoulli_distribution same(std::min(1.0, spec.intra_degree / std::max(1.0, n_same)));
    std::bernoulli_distribution other(std::min(1.0, spec.inter_degree / std::max(1.0, n_other)));
    std::vector<std::pair<Index, Index>> raw;
    for (Index u = 0; u < spec.nodes; ++u)
        for (Index v = u + 1; v < spec.nodes; ++v)
            if (g.labels[u] == g.labels[v] ? same(rng) : other(rng)) raw.emplace_back(u, v);
    g.edges = symmetrize_edges(std::move(raw));

    Matrix means = random_normal(spec.classes, spec.feature_dim, rng);
    for (Index c = 0; c < means.rows(); ++c) means.row(c) *= spec.signal / means.row(c).norm();
    g.features = random_normal(spec.nodes, spec.feature_dim, rng);
    for (Index v = 0; v < spec.nodes; ++v) g.features.row(v) += means.row(g.labels[v]);

    std::vector<Index> order(spec.nodes);
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    g.split.assign(spec.nodes, Split::test);
    std::vector<int> taken(spec.classes, 0);
    Index val = 0;
    for (Index v : order) {
        if (taken[g.labels[v]] < spec.train_per_class) {
            ++taken[g.labels[v]];
            g.split[v] = Split::train;
        } else if (val < spec.val_nodes) {
            ++val;
            g.split[v] = Split::val;
        }
    }
    validate(g);
    return g;
}

} // namespace ghn
