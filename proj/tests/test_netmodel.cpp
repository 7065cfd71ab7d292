#include "groupsei/graph.h"
#include "groupsei/netmodel.h"
#include "groupsei/parse.h"
#include "oracles.h"

#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

using namespace groupsei;

namespace {

bipartite_network from_text(const std::string &text)
{
    std::istringstream in(text);
    return load_memberships(in);
}

struct random_bipartite {
    std::vector<std::set<std::uint32_t>> members; /* per group */
    bipartite_network net;
};

random_bipartite make_random_bipartite(std::size_t users, std::size_t groups, double p, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::bernoulli_distribution coin(p);
    random_bipartite r;
    r.members.resize(groups);
    membership_builder b;
    for (std::size_t u = 0; u < users; ++u)
        b.add_user("u" + std::to_string(u));
    for (std::size_t g = 0; g < groups; ++g)
        b.add_group("g" + std::to_string(g));
    for (std::size_t u = 0; u < users; ++u)
        for (std::size_t g = 0; g < groups; ++g)
            if (coin(gen)) {
                b.add("u" + std::to_string(u), "g" + std::to_string(g));
                r.members[g].insert(static_cast<std::uint32_t>(u));
            }
    r.net = std::move(b).build();
    return r;
}

} // namespace

TEST_CASE("load_memberships deduplicates records")
{
    const auto net = from_text("u1,g1\nu1,g1\nu2,g1\n");
    CHECK(net.num_users() == 2);
    CHECK(net.num_groups() == 1);
    CHECK(net.num_memberships() == 2);
}

TEST_CASE("load_memberships header, blanks and empty input")
{
    const auto net = from_text("user_id,group_id\nu1,g1\n\n  \nu2,g2\n");
    CHECK(net.num_users() == 2);
    CHECK(net.num_groups() == 2);
    CHECK(from_text("").empty());
    CHECK(from_text("user_id,group_id\n").num_memberships() == 0);
}

TEST_CASE("load_memberships reports the line of a malformed record")
{
    for (const auto *bad : {"u1,g1\nu2\n", "u1,g1\nu2,g2,g3\n", "u1,g1\n,g2\n"}) {
        try {
            from_text(bad);
            FAIL("expected parse_error");
        } catch (const parse_error &e) {
            CHECK(e.line() == 2);
        }
    }
}

TEST_CASE("membership count equals the number of distinct pairs")
{
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<int> pick(0, 39);
    std::set<std::pair<int, int>> distinct;
    std::ostringstream text;
    for (int i = 0; i < 1000; ++i) {
        const int u = pick(gen), g = pick(gen) % 25;
        distinct.insert({u, g});
        text << "user" << u << ",group" << g << '\n';
    }
    const auto net = from_text(text.str());
    CHECK(net.num_memberships() == distinct.size());
    std::size_t listed = 0;
    for (user_t u = 0; u < net.num_users(); ++u)
        for (group_t g : net.groups_of(u)) {
            CHECK(distinct.count({std::stoi(net.user_id(u).substr(4)), std::stoi(net.group_id(g).substr(5))}) == 1);
            ++listed;
        }
    CHECK(listed == distinct.size());
}

TEST_CASE("write_memberships round trip")
{
    const auto a = from_text("x,g1\ny,g1\ny,g2\n");
    std::ostringstream out;
    write_memberships(out, a);
    const auto b = from_text(out.str());
    CHECK(b.num_users() == a.num_users());
    CHECK(b.num_memberships() == a.num_memberships());
    std::ostringstream again;
    write_memberships(again, b);
    CHECK(again.str() == out.str());
}

TEST_CASE("projection of small cases")
{
    SUBCASE("shared user gives one edge of weight 1")
    {
        const auto g = project_groups(from_text("u,gA\nu,gB\n"));
        REQUIRE(g.num_edges() == 1);
        CHECK(g.edge_weight(*g.find("gA"), *g.find("gB")) == 1u);
    }
    SUBCASE("disjoint groups give no edges")
    {
        CHECK(project_groups(from_text("u1,gA\nu2,gB\n")).num_edges() == 0);
    }
    SUBCASE("weight counts shared users")
    {
        const auto g = project_groups(from_text("u1,gA\nu1,gB\nu2,gA\nu2,gB\nu3,gB\n"));
        CHECK(g.edge_weight(*g.find("gA"), *g.find("gB")) == 2u);
    }
}

TEST_CASE("projection equals the pairwise-intersection oracle")
{
    /* 50 users, 20 groups, plus a sweep over networks up to 30 groups */
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        const std::size_t groups = seed == 1 ? 20 : 1 + seed % 30;
        const auto r = make_random_bipartite(50, groups, 0.04 + 0.002 * static_cast<double>(seed), seed);
        const auto g = project_groups(r.net);
        const auto expected = oracle::pairwise_overlaps(r.members);
        CHECK(g.num_nodes() == groups);
        CHECK(g.num_edges() == expected.size());
        for (node_t a = 0; a < g.num_nodes(); ++a)
            for (node_t b = 0; b < g.num_nodes(); ++b) {
                if (a == b)
                    continue;
                CHECK(g.has_edge(a, b) == g.has_edge(b, a));
                const auto ga = static_cast<std::uint32_t>(std::stoi(g.name(a).substr(1)));
                const auto gb = static_cast<std::uint32_t>(std::stoi(g.name(b).substr(1)));
                const auto it = expected.find({std::min(ga, gb), std::max(ga, gb)});
                CHECK(g.has_edge(a, b) == (it != expected.end()));
                if (it != expected.end())
                    CHECK(*g.edge_weight(a, b) == it->second);
            }
    }
}

TEST_CASE("components: sizes 3 and 2 give LCC fraction 0.6")
{
    const auto g = graph::from_edges(5, {{0, 1}, {1, 2}, {3, 4}});
    const auto comps = connected_components(g);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0] == std::vector<node_t>{0, 1, 2});
    CHECK(lcc_fraction(g) == doctest::Approx(0.6));
    CHECK(largest_component(g).num_nodes() == 3);
    CHECK(connected_components(graph{}).empty());
}

TEST_CASE("components tie-break by smallest node")
{
    const auto g = graph::from_edges(4, {{2, 3}, {0, 1}});
    CHECK(connected_components(g)[0] == std::vector<node_t>{0, 1});
    const auto h = graph::from_edges(4, {{1, 3}, {0, 2}}, {"d", "c", "b", "a"});
    /* labelled: smallest identifier is "a" (node 3) */
    CHECK(largest_component(h).find("a").has_value());
}

TEST_CASE("components equal the flood-fill oracle on random graphs")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 gen(seed);
        std::bernoulli_distribution coin(0.004 + 0.0005 * static_cast<double>(seed));
        const std::size_t n = 200;
        std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
        std::vector<edge> list;
        for (std::uint32_t a = 0; a < n; ++a)
            for (std::uint32_t b = a + 1; b < n; ++b)
                if (coin(gen)) {
                    edges.insert({a, b});
                    list.push_back({a, b});
                }
        const auto g = graph::from_edges(n, list);
        const auto comps = connected_components(g);
        const auto labels = oracle::flood_fill(oracle::adjacency(n, edges));

        std::vector<int> seen(n, 0);
        for (const auto &c : comps)
            for (node_t v : c) {
                ++seen[v];
                CHECK(labels[v] == labels[c.front()]);
            }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
        CHECK(comps.size() == static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end()) + 1));
        for (std::size_t i = 1; i < comps.size(); ++i)
            CHECK(comps[i - 1].size() >= comps[i].size());
        const auto best = oracle::largest_component(oracle::adjacency(n, edges));
        CHECK(comps.front() == best);
    }
}

TEST_CASE("restrict to component")
{
    const auto net = from_text("a,g1\nb,g1\nc,g1\nc,g2\nd,g2\ne,g3\n");
    const auto g = project_groups(net);

    SUBCASE("all groups keep the network")
    {
        const auto r = restrict_bipartite_to_component(net, g);
        CHECK(r.num_users() == net.num_users());
        CHECK(r.num_groups() == net.num_groups());
        CHECK(r.num_memberships() == net.num_memberships());
    }
    SUBCASE("one group with three members")
    {
        const auto one = graph::from_edges(1, {}, {"g1"});
        const auto r = restrict_bipartite_to_component(net, one);
        CHECK(r.num_users() == 3);
        CHECK(r.num_groups() == 1);
    }
    SUBCASE("unknown group")
    {
        const auto bogus = graph::from_edges(1, {}, {"nope"});
        CHECK_THROWS_AS(restrict_bipartite_to_component(net, bogus), std::invalid_argument);
    }
    SUBCASE("users equal the union of component members")
    {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto r = make_random_bipartite(60, 25, 0.03, seed);
            const auto lcc = largest_component(project_groups(r.net));
            std::set<std::string> expected;
            for (node_t v = 0; v < lcc.num_nodes(); ++v) {
                const auto gi = static_cast<std::size_t>(std::stoi(lcc.name(v).substr(1)));
                for (auto u : r.members[gi])
                    expected.insert("u" + std::to_string(u));
            }
            const auto sub = restrict_bipartite_to_component(r.net, lcc);
            std::set<std::string> got;
            for (user_t u = 0; u < sub.num_users(); ++u)
                got.insert(sub.user_id(u));
            CHECK(got == expected);
            CHECK(sub.num_groups() == lcc.num_nodes());
        }
    }
}

TEST_CASE("load, project, restrict is deterministic")
{
    const auto r = make_random_bipartite(80, 30, 0.03, 99);
    std::ostringstream text;
    write_memberships(text, r.net);
    auto pipeline = [&] {
        const auto net = from_text(text.str());
        const auto sub = restrict_bipartite_to_component(net, largest_component(project_groups(net)));
        std::ostringstream out;
        write_memberships(out, sub);
        write_edge_list(out, project_groups(sub));
        return out.str();
    };
    CHECK(pipeline() == pipeline());
}

TEST_CASE("edge list round trip and graph validation")
{
    const auto g = project_groups(from_text("u,a\nu,b\nv,b\nv,c\nv,a\n"));
    std::ostringstream out;
    write_edge_list(out, g);
    std::istringstream in(out.str());
    const auto h = read_edge_list(in);
    CHECK(h.num_edges() == g.num_edges());
    CHECK(out.str().rfind("group_a,group_b,weight\n", 0) == 0);
    CHECK_THROWS_AS(graph::from_edges(3, {{1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(graph::from_edges(3, {{0, 3}}), std::invalid_argument);
    CHECK_THROWS_AS(graph::from_edges(3, {{0, 1}, {1, 0}}), std::invalid_argument);
    CHECK(graph::from_edges(3, {{0, 1}, {1, 0}}, {}, true).edge_weight(0, 1) == 2u);
}

TEST_CASE("users may belong to more than 256 groups")
{
    std::ostringstream text;
    for (int g = 0; g < 300; ++g)
        text << "hub,g" << g << '\n';
    const auto net = from_text(text.str());
    CHECK(net.max_memberships_per_user() == 300);
}
