#pragma once

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sparse.hpp"

namespace ghn {

enum class Split { none, train, val, test };

/// Undirected, unweighted, node-attributed graph with a semi-supervised split.
struct Graph {
    Index num_nodes = 0;
    /// Unordered pairs stored as (u, v) with u < v, sorted, unique.
    std::vector<std::pair<Index, Index>> edges;
    Matrix features;
    /// -1 marks an unlabeled node.
    std::vector<int> labels;
    std::vector<Split> split;

    int num_classes() const {
        int c = 0;
        for (int l : labels) c = std::max(c, l + 1);
        return c;
    }

    std::vector<Index> nodes_in(Split s) const {
        std::vector<Index> out;
        for (Index v = 0; v < num_nodes; ++v)
            if (split[v] == s) out.push_back(v);
        return out;
    }

    std::vector<Index> degrees() const {
        std::vector<Index> deg(num_nodes, 0);
        for (auto [u, v] : edges) {
            ++deg[u];
            ++deg[v];
        }
        return deg;
    }

    std::size_t isolated_nodes() const {
        const auto deg = degrees();
        return static_cast<std::size_t>(std::count(deg.begin(), deg.end(), Index{0}));
    }
};

/// Sorts each pair so u < v, drops self-pairs and duplicates.
inline std::vector<std::pair<Index, Index>>
symmetrize_edges(std::vector<std::pair<Index, Index>> raw) {
    std::vector<std::pair<Index, Index>> out;
    out.reserve(raw.size());
    for (auto [u, v] : raw) {
        if (u == v) continue;
        out.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Checks every Graph invariant; throws DataError naming the first violation.
inline void validate(const Graph& g) {
    if (g.features.rows() != g.num_nodes)
        throw DataError("feature matrix has " + std::to_string(g.features.rows()) +
                        " rows, expected " + std::to_string(g.num_nodes));
    if (static_cast<Index>(g.labels.size()) != g.num_nodes ||
        static_cast<Index>(g.split.size()) != g.num_nodes)
        throw DataError("labels/splits must have one entry per node");
    for (Index i = 0; i < static_cast<Index>(g.edges.size()); ++i) {
        const auto [u, v] = g.edges[i];
        if (u < 0 || v < 0 || u >= g.num_nodes || v >= g.num_nodes)
            throw DataError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") out of range for " + std::to_string(g.num_nodes) + " nodes");
        if (u >= v || (i > 0 && g.edges[i - 1] >= g.edges[i]))
            throw DataError("edge list is not symmetrized");
    }
    for (Index r = 0; r < g.features.rows(); ++r)
        if (!g.features.row(r).allFinite())
            throw DataError("non-finite feature in row " + std::to_string(r));
    for (Index v = 0; v < g.num_nodes; ++v) {
        if (g.labels[v] < -1) throw DataError("invalid label at node " + std::to_string(v));
        if (g.split[v] != Split::none && g.labels[v] < 0)
            throw DataError("node " + std::to_string(v) + " is in a split but unlabeled");
    }
}

namespace detail {

inline std::string strip_comment(const std::string& line) {
    const auto hash = line.find('#');
    return hash == std::string::npos ? line : line.substr(0, hash);
}

inline std::vector<std::string> tokens(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

inline std::string where(const std::string& source, std::size_t line_no) {
    return source + ":" + std::to_string(line_no) + ": ";
}

inline long long parse_int(const std::string& tok, const std::string& source, std::size_t line_no) {
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(tok.c_str(), &end, 10);
    if (errno != 0 || end == tok.c_str() || *end != '\0')
        throw DataError(where(source, line_no) + "expected integer, got '" + tok + "'");
    return v;
}

inline double parse_real(const std::string& tok, const std::string& source, std::size_t line_no) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw DataError(where(source, line_no) + "expected real, got '" + tok + "'");
    return v;
}

/// Non-empty lines with their 1-based numbers; comments stripped.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>>
content_lines(std::istream& in, bool allow_comments) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> out;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        auto toks = tokens(allow_comments ? strip_comment(line) : line);
        if (!toks.empty()) out.emplace_back(no, std::move(toks));
    }
    return out;
}

} // namespace detail

inline Matrix parse_features(std::istream& in, const std::string& source = "features") {
    const auto lines = detail::content_lines(in, false);
    if (lines.empty()) throw DataError(source + ": empty feature file");
    const std::size_t dim = lines.front().second.size();
    Matrix x(static_cast<Index>(lines.size()), static_cast<Index>(dim));
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const auto& [no, toks] = lines[r];
        if (toks.size() != dim)
            throw DataError(detail::where(source, no) + "row " + std::to_string(r) + " has " +
                            std::to_string(toks.size()) + " values, expected " +
                            std::to_string(dim));
        for (std::size_t c = 0; c < dim; ++c) {
            const double v = detail::parse_real(toks[c], source, no);
            if (!std::isfinite(v))
                throw DataError(detail::where(source, no) + "non-finite feature in row " +
                                std::to_string(r));
            x(static_cast<Index>(r), static_cast<Index>(c)) = v;
        }
    }
    return x;
}

inline std::vector<std::pair<Index, Index>> parse_edges(std::istream& in, Index num_nodes,
                                                        const std::string& source = "edges") {
    std::vector<std::pair<Index, Index>> raw;
    for (const auto& [no, toks] : detail::content_lines(in, true)) {
        if (toks.size() != 2)
            throw DataError(detail::where(source, no) + "expected 'u v' (edge weights are not "
                                                        "supported), got " +
                            std::to_string(toks.size()) + " fields");
        const auto u = detail::parse_int(toks[0], source, no);
        const auto v = detail::parse_int(toks[1], source, no);
        if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
            throw DataError(detail::where(source, no) + "edge index out of range [0, " +
                            std::to_string(num_nodes) + ")");
        raw.emplace_back(static_cast<Index>(u), static_cast<Index>(v));
    }
    return symmetrize_edges(std::move(raw));
}

inline std::vector<int> parse_labels(std::istream& in, const std::string& source = "labels") {
    std::vector<int> out;
    for (const auto& [no, toks] : detail::content_lines(in, false)) {
        if (toks.size() != 1) throw DataError(detail::where(source, no) + "expected one label");
        const auto l = detail::parse_int(toks[0], source, no);
        if (l < -1) throw DataError(detail::where(source, no) + "label must be >= -1");
        out.push_back(static_cast<int>(l));
    }
    return out;
}

inline std::vector<Split> parse_splits(std::istream& in, const std::string& source = "splits") {
    std::vector<Split> out;
    for (const auto& [no, toks] : detail::content_lines(in, false)) {
        if (toks.size() != 1) throw DataError(detail::where(source, no) + "expected one token");
        const auto& t = toks[0];
        if (t == "train") out.push_back(Split::train);
        else if (t == "val") out.push_back(Split::val);
        else if (t == "test") out.push_back(Split::test);
        else if (t == "none") out.push_back(Split::none);
        else throw DataError(detail::where(source, no) + "unknown split '" + t + "'");
    }
    return out;
}

/// Builds a validated Graph from in-memory streams.
inline Graph parse_graph(std::istream& edges, std::istream& features, std::istream& labels,
                         std::istream& splits) {
    Graph g;
    g.features = parse_features(features);
    g.num_nodes = g.features.rows();
    g.edges = parse_edges(edges, g.num_nodes);
    g.labels = parse_labels(labels);
    g.split = parse_splits(splits);
    if (static_cast<Index>(g.labels.size()) != g.num_nodes)
        throw DataError("labels: " + std::to_string(g.labels.size()) + " lines, expected " +
                        std::to_string(g.num_nodes));
    if (static_cast<Index>(g.split.size()) != g.num_nodes)
        throw DataError("splits: " + std::to_string(g.split.size()) + " lines, expected " +
                        std::to_string(g.num_nodes));
    validate(g);
    return g;
}

inline Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                        const std::string& label_path, const std::string& split_path) {
    auto open = [](const std::string& p) {
        std::ifstream f(p);
        if (!f) throw DataError("cannot open " + p);
        return f;
    };
    auto e = open(edge_path);
    auto f = open(feature_path);
    auto l = open(label_path);
    auto s = open(split_path);
    Graph g;
    g.features = parse_features(f, feature_path);
    g.num_nodes = g.features.rows();
    g.edges = parse_edges(e, g.num_nodes, edge_path);
    g.labels = parse_labels(l, label_path);
    g.split = parse_splits(s, split_path);
    if (static_cast<Index>(g.labels.size()) != g.num_nodes)
        throw DataError(label_path + ": expected " + std::to_string(g.num_nodes) + " lines");
    if (static_cast<Index>(g.split.size()) != g.num_nodes)
        throw DataError(split_path + ": expected " + std::to_string(g.num_nodes) + " lines");
    validate(g);
    return g;
}

inline void save_graph(const Graph& g, const std::string& edge_path,
                       const std::string& feature_path, const std::string& label_path,
                       const std::string& split_path) {
    auto open = [](const std::string& p) {
        std::ofstream f(p);
        if (!f) throw DataError("cannot write " + p);
        f.precision(17);
        return f;
    };
    auto e = open(edge_path);
    for (auto [u, v] : g.edges) e << u << ' ' << v << '\n';
    auto f = open(feature_path);
    for (Index r = 0; r < g.features.rows(); ++r) {
        for (Index c = 0; c < g.features.cols(); ++c) f << (c ? " " : "") << g.features(r, c);
        f << '\n';
    }
    auto l = open(label_path);
    for (int lab : g.labels) l << lab << '\n';
    auto s = open(split_path);
    static constexpr const char* names[] = {"none", "train", "val", "test"};
    for (Split sp : g.split) s << names[static_cast<int>(sp)] << '\n';
}

/// L = I - D^{-1/2} (A + sI) D^{-1/2}, s = 1 when self_loops is set.
inline CsrMatrix normalized_laplacian(const Graph& g, bool self_loops = true) {
    const Index n = g.num_nodes;
    std::vector<std::vector<Index>> nbrs(n);
    for (auto [u, v] : g.edges) {
        nbrs[u].push_back(v);
        nbrs[v].push_back(u);
    }
    const double s = self_loops ? 1.0 : 0.0;
    std::vector<double> inv_sqrt(n);
    for (Index v = 0; v < n; ++v) {
        const double d = static_cast<double>(nbrs[v].size()) + s;
        if (d <= 0.0)
            throw DataError("node " + std::to_string(v) +
                            " has zero degree; enable self-loops or remove the node");
        inv_sqrt[v] = 1.0 / std::sqrt(d);
    }
    std::vector<Index> offsets{0}, indices;
    std::vector<double> values;
    for (Index v = 0; v < n; ++v) {
        auto& row = nbrs[v];
        row.push_back(v);
        std::sort(row.begin(), row.end());
        for (Index u : row) {
            indices.push_back(u);
            values.push_back(u == v ? 1.0 - s * inv_sqrt[v] * inv_sqrt[v]
                                    : -inv_sqrt[v] * inv_sqrt[u]);
        }
        offsets.push_back(static_cast<Index>(indices.size()));
    }
    return CsrMatrix(n, n, std::move(offsets), std::move(indices), std::move(values));
}

/// tr(Xᵀ L X).
inline double laplacian_quadratic(const CsrMatrix& lap, const Matrix& x) {
    require_shape(lap.rows() == lap.cols() && lap.cols() == x.rows(),
                  "laplacian_quadratic: L " + std::to_string(lap.rows()) + "x" +
                      std::to_string(lap.cols()) + ", X " + shape_str(x));
    return (x.array() * lap.multiply(x).array()).sum();
}

} // namespace ghn
