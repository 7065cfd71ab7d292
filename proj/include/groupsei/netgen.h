#pragma once

#include "groupsei/graph.h"
#include "groupsei/netmodel.h"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <variant>

namespace groupsei {

graph gen_er(std::size_t n, double p, std::uint64_t seed);

/* Preferential attachment seeded by a clique on the first m nodes; every
 * later node attaches to m distinct existing nodes chosen proportionally to
 * degree. Edge count is m(m-1)/2 + m(n-m). */
graph gen_ba(std::size_t n, std::size_t m, std::uint64_t seed);

/* Watts-Strogatz ring of degree k with each lattice edge rewired with
 * probability p_rewire. Rewiring keeps the edge count at nk/2. */
graph gen_small_world(std::size_t n, std::size_t k, double p_rewire, std::uint64_t seed);

/* Undirected forest fire: links created by a new node are remembered as
 * out-links of that node so that forward and backward burning keep their
 * directed meaning; the emitted graph is undirected. */
graph gen_forest_fire(std::size_t n, double p_fwd, double p_bwd, std::uint64_t seed);

struct forest_fire_fit {
    double p_fwd = 0;
    double p_bwd = 0;
    std::size_t edges = 0;
    int probes = 0;
};

/* Bisection on p_fwd (p_bwd = backward_ratio * p_fwd) so that the generated
 * graph for `seed` has close to target_edges edges. */
forest_fire_fit fit_forest_fire(std::size_t n, std::size_t target_edges, double backward_ratio,
                                std::uint64_t seed);

struct count_distribution {
    enum class kind { fixed, uniform, zipf };
    kind type = kind::fixed;
    std::uint32_t value = 1;   /* fixed */
    std::uint32_t lo = 1;      /* uniform, inclusive */
    std::uint32_t hi = 1;      /* uniform, inclusive; zipf upper bound */
    double exponent = 2.5;     /* zipf, P(k) ~ k^-exponent on [1, hi] */
};

struct bipartite_spec {
    std::uint32_t groups = 1;
    count_distribution group_size;   /* members per group, truncated at group_cap */
    count_distribution memberships;  /* groups per user */
    std::uint32_t group_cap = 256;
};

/* Group sizes are drawn first; users are then drawn with their membership
 * counts until every group slot is used (the last user takes what is left)
 * and slots are matched to users so that no user joins a group twice.
 * Throws std::invalid_argument for infeasible specs. */
bipartite_network gen_bipartite(const bipartite_spec &spec, std::uint64_t seed);

enum class gen_model { erdos_renyi, barabasi_albert, small_world, forest_fire, bipartite_synth };

struct gen_spec {
    gen_model model = gen_model::erdos_renyi;
    std::size_t n = 1;
    std::uint64_t seed = 1;
    double p = 0;                  /* erdos_renyi */
    std::size_t m = 1;             /* barabasi_albert */
    std::size_t k = 2;             /* small_world */
    double p_rewire = 0.1;         /* small_world */
    double p_fwd = 0, p_bwd = 0;   /* forest_fire */
    double backward_ratio = 0.32;  /* forest_fire fitting */
    std::size_t target_edges = 0;  /* 0: use explicit parameters */
    bipartite_spec bipartite;
};

gen_spec gen_spec_from_json(const nlohmann::json &j);
nlohmann::json to_json(const gen_spec &spec);

struct generated_network {
    std::variant<graph, bipartite_network> network;
    /* model, resolved parameters and how any of them were derived */
    nlohmann::json metadata;
};

generated_network generate(const gen_spec &spec);

} // namespace groupsei
