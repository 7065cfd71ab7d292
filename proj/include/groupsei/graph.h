#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace groupsei {

using node_t = std::uint32_t;

struct edge {
    node_t a;
    node_t b;
    std::uint32_t weight = 1;
};

/* Undirected simple graph in compressed sparse row form. Neighbour lists are
 * sorted ascending. Immutable after construction. */
class graph {
public:
    graph() = default;

    /* Builds from an edge list. Self-loops and out-of-range endpoints throw
     * std::invalid_argument. Parallel edges throw unless merge_duplicates is
     * set, in which case their weights are summed. */
    static graph from_edges(std::size_t nodes, std::vector<edge> edges,
                            std::vector<std::string> labels = {}, bool merge_duplicates = false);

    std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t num_edges() const { return targets_.size() / 2; }

    std::span<const node_t> neighbors(node_t v) const
    {
        return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
    }
    std::span<const std::uint32_t> weights(node_t v) const
    {
        return {weights_.data() + offsets_[v], weights_.data() + offsets_[v + 1]};
    }
    std::size_t degree(node_t v) const { return offsets_[v + 1] - offsets_[v]; }

    bool has_edge(node_t a, node_t b) const;
    std::optional<std::uint32_t> edge_weight(node_t a, node_t b) const;

    bool has_labels() const { return !labels_.empty(); }
    /* label if present, otherwise the decimal index */
    std::string name(node_t v) const;
    std::optional<node_t> find(const std::string &label) const;

    /* each undirected edge once, a < b, lexicographic order */
    std::vector<edge> edge_list() const;

    /* subgraph induced by `nodes` (kept in the given order) */
    graph induced(std::span<const node_t> nodes) const;

private:
    std::vector<std::size_t> offsets_;
    std::vector<node_t> targets_;
    std::vector<std::uint32_t> weights_;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, node_t> index_;
};

/* Edge-list CSV `group_a,group_b,weight`; header written. */
void write_edge_list(std::ostream &out, const graph &g);

/* Reads `a,b[,weight]` lines with optional header `group_a,group_b,weight`.
 * Labels are interned in first-appearance order; duplicate and reversed
 * pairs are merged. */
graph read_edge_list(std::istream &in);
graph read_edge_list_file(const std::string &path);

} // namespace groupsei
