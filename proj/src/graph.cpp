#include "groupsei/graph.h"
#include "groupsei/parse.h"

#include <algorithm>
#include <limits>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace groupsei {

graph graph::from_edges(std::size_t nodes, std::vector<edge> edges, std::vector<std::string> labels,
                        bool merge_duplicates)
{
    if (!labels.empty() && labels.size() != nodes)
        throw std::invalid_argument("graph: label count does not match node count");
    if (nodes >= std::numeric_limits<node_t>::max())
        throw std::invalid_argument("graph: too many nodes");

    for (auto &e : edges) {
        if (e.a >= nodes || e.b >= nodes)
            throw std::invalid_argument("graph: edge endpoint out of range");
        if (e.a == e.b)
            throw std::invalid_argument("graph: self-loop on node " + std::to_string(e.a));
        if (e.a > e.b)
            std::swap(e.a, e.b);
    }
    std::sort(edges.begin(), edges.end(),
              [](const edge &x, const edge &y) { return x.a != y.a ? x.a < y.a : x.b < y.b; });

    std::vector<edge> unique;
    unique.reserve(edges.size());
    for (const auto &e : edges) {
        if (!unique.empty() && unique.back().a == e.a && unique.back().b == e.b) {
            if (!merge_duplicates)
                throw std::invalid_argument("graph: parallel edge " + std::to_string(e.a) + "-" +
                                            std::to_string(e.b));
            unique.back().weight += e.weight;
            continue;
        }
        unique.push_back(e);
    }

    graph g;
    g.offsets_.assign(nodes + 1, 0);
    for (const auto &e : unique) {
        ++g.offsets_[e.a + 1];
        ++g.offsets_[e.b + 1];
    }
    for (std::size_t v = 0; v < nodes; ++v)
        g.offsets_[v + 1] += g.offsets_[v];

    g.targets_.resize(2 * unique.size());
    g.weights_.resize(2 * unique.size());
    std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto &e : unique) {
        g.targets_[fill[e.a]] = e.b;
        g.weights_[fill[e.a]++] = e.weight;
        g.targets_[fill[e.b]] = e.a;
        g.weights_[fill[e.b]++] = e.weight;
    }
    /* sorted input by (a,b) leaves every list sorted except the entries
     * contributed as the larger endpoint; sort each list with its weights */
    for (std::size_t v = 0; v < nodes; ++v) {
        const auto lo = g.offsets_[v], hi = g.offsets_[v + 1];
        if (std::is_sorted(g.targets_.begin() + lo, g.targets_.begin() + hi))
            continue;
        std::vector<std::pair<node_t, std::uint32_t>> tmp;
        tmp.reserve(hi - lo);
        for (auto i = lo; i < hi; ++i)
            tmp.emplace_back(g.targets_[i], g.weights_[i]);
        std::sort(tmp.begin(), tmp.end());
        for (auto i = lo; i < hi; ++i) {
            g.targets_[i] = tmp[i - lo].first;
            g.weights_[i] = tmp[i - lo].second;
        }
    }

    g.labels_ = std::move(labels);
    for (node_t v = 0; v < g.labels_.size(); ++v)
        g.index_.emplace(g.labels_[v], v);
    return g;
}

bool graph::has_edge(node_t a, node_t b) const
{
    const auto nb = neighbors(a);
    return std::binary_search(nb.begin(), nb.end(), b);
}

std::optional<std::uint32_t> graph::edge_weight(node_t a, node_t b) const
{
    const auto nb = neighbors(a);
    const auto it = std::lower_bound(nb.begin(), nb.end(), b);
    if (it == nb.end() || *it != b)
        return std::nullopt;
    return weights_[offsets_[a] + static_cast<std::size_t>(it - nb.begin())];
}

std::string graph::name(node_t v) const
{
    return labels_.empty() ? std::to_string(v) : labels_[v];
}

std::optional<node_t> graph::find(const std::string &label) const
{
    if (labels_.empty()) {
        node_t v = 0;
        if (!parse_uint(label, v) || v >= num_nodes())
            return std::nullopt;
        return v;
    }
    const auto it = index_.find(label);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

std::vector<edge> graph::edge_list() const
{
    std::vector<edge> out;
    out.reserve(num_edges());
    for (node_t v = 0; v < num_nodes(); ++v) {
        const auto nb = neighbors(v);
        const auto w = weights(v);
        for (std::size_t i = 0; i < nb.size(); ++i)
            if (nb[i] > v)
                out.push_back({v, nb[i], w[i]});
    }
    return out;
}

graph graph::induced(std::span<const node_t> nodes) const
{
    std::vector<node_t> remap(num_nodes(), std::numeric_limits<node_t>::max());
    for (node_t i = 0; i < nodes.size(); ++i)
        remap[nodes[i]] = i;

    std::vector<edge> edges;
    for (node_t i = 0; i < nodes.size(); ++i) {
        const node_t v = nodes[i];
        const auto nb = neighbors(v);
        const auto w = weights(v);
        for (std::size_t k = 0; k < nb.size(); ++k) {
            const node_t j = remap[nb[k]];
            if (j != std::numeric_limits<node_t>::max() && i < j)
                edges.push_back({i, j, w[k]});
        }
    }
    std::vector<std::string> labels;
    if (has_labels()) {
        labels.reserve(nodes.size());
        for (node_t v : nodes)
            labels.push_back(labels_[v]);
    }
    return from_edges(nodes.size(), std::move(edges), std::move(labels));
}

void write_edge_list(std::ostream &out, const graph &g)
{
    out << "group_a,group_b,weight\n";
    for (const auto &e : g.edge_list())
        out << g.name(e.a) << ',' << g.name(e.b) << ',' << e.weight << '\n';
}

graph read_edge_list(std::istream &in)
{
    std::vector<std::string> labels;
    std::unordered_map<std::string, node_t> index;
    auto intern = [&](const std::string &s) {
        auto [it, inserted] = index.emplace(s, static_cast<node_t>(labels.size()));
        if (inserted)
            labels.push_back(s);
        return it->second;
    };

    std::vector<edge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if (text.empty())
            continue;
        const auto fields = split_csv(text);
        if (lineno == 1 && fields.size() >= 2 && fields[0] == "group_a" && fields[1] == "group_b")
            continue;
        if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty())
            throw parse_error("expected `a,b[,weight]`", lineno);
        std::uint32_t w = 1;
        if (fields.size() == 3 && !parse_uint(fields[2], w))
            throw parse_error("bad weight `" + fields[2] + "`", lineno);
        if (fields[0] == fields[1])
            throw parse_error("self-loop on `" + fields[0] + "`", lineno);
        const node_t a = intern(fields[0]);
        const node_t b = intern(fields[1]);
        edges.push_back({a, b, w});
    }
    /* duplicates in a file carry the same shared-member count; keep one */
    for (auto &e : edges)
        if (e.a > e.b)
            std::swap(e.a, e.b);
    std::sort(edges.begin(), edges.end(),
              [](const edge &x, const edge &y) { return x.a != y.a ? x.a < y.a : x.b < y.b; });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const edge &x, const edge &y) { return x.a == y.a && x.b == y.b; }),
                edges.end());
    const auto n = labels.size();
    return graph::from_edges(n, std::move(edges), std::move(labels));
}

graph read_edge_list_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("unable to open file: " + path);
    return read_edge_list(in);
}

} // namespace groupsei
