#pragma once

#include "groupsei/graph.h"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace groupsei {

double mean_degree(const graph &g);

/* Average local clustering; nodes of degree < 2 contribute 0. */
double clustering(const graph &g);

/* per-node triangle counts */
std::vector<std::uint64_t> triangles(const graph &g);

std::optional<double> density(const graph &g);

/* Newman degree assortativity; undefined without edges or when every edge
 * endpoint has the same degree. */
std::optional<double> assortativity(const graph &g);

enum class distance_mode { automatic, exact, sampled };

struct distance_stats {
    std::uint32_t diameter = 0;
    double apl = 0;
    bool sampled = false;
    std::size_t sources = 0;
};

/* Shortest-path statistics inside the largest connected component. Exact
 * mode runs a BFS from every node, 64 sources per bit-parallel sweep.
 * Sampled mode uses `samples` random sources; automatic switches to it
 * above 50,000 LCC nodes. */
distance_stats diameter_and_apl(const graph &g, distance_mode mode = distance_mode::automatic,
                                std::size_t samples = 1000, std::uint64_t seed = 1, unsigned workers = 0);

struct metrics_report {
    std::size_t n_nodes = 0;
    std::size_t n_edges = 0;
    double mean_degree = 0;
    double clustering = 0;
    std::uint32_t diameter = 0;
    double apl = 0;
    std::optional<double> density;
    double lcc_fraction = 0;
    std::optional<double> assortativity;
    bool distances_sampled = false;
};

metrics_report full_report(const graph &g, distance_mode mode = distance_mode::automatic, unsigned workers = 0,
                           std::size_t samples = 1000, std::uint64_t seed = 1);

/* Column order: nodes, edges, mean degree, clustering, diameter, APL,
 * density, LCC, Pearson. Undefined values are written as empty fields. */
std::string csv_header();
std::string to_csv_row(const metrics_report &r);
nlohmann::json to_json(const metrics_report &r);

/* Which mean-degree convention a published (nodes, edges, mean degree)
 * triple follows, at the precision it was printed with. */
enum class degree_convention { two_e_over_n, e_over_n, neither };

degree_convention classify_mean_degree(std::size_t nodes, std::size_t edges, double published,
                                       double precision = 0.01);
const char *to_string(degree_convention c);

} // namespace groupsei
