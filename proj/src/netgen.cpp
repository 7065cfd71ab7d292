#include "groupsei/netgen.h"
#include "groupsei/rng.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace groupsei {

namespace {

void require(bool ok, const std::string &msg)
{
    if (!ok)
        throw std::invalid_argument(msg);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

} // namespace

graph gen_er(std::size_t n, double p, std::uint64_t seed)
{
    require(n >= 1, "erdos_renyi: n must be >= 1");
    require(is_probability(p), "erdos_renyi: p must lie in [0,1]");
    std::vector<edge> edges;
    if (p >= 1.0) {
        for (node_t v = 1; v < n; ++v)
            for (node_t w = 0; w < v; ++w)
                edges.push_back({w, v});
        return graph::from_edges(n, std::move(edges));
    }
    if (p > 0.0) {
        /* geometric skipping over the lower triangle (Batagelj-Brandes) */
        counter_rng rng(seed, 0x4552);
        const double lq = std::log1p(-p);
        edges.reserve(static_cast<std::size_t>(p * n * (n - 1) / 2 * 1.01) + 16);
        std::int64_t v = 1, w = -1;
        const auto nn = static_cast<std::int64_t>(n);
        while (v < nn) {
            const double r = 1.0 - rng.uniform();
            w += 1 + static_cast<std::int64_t>(std::floor(std::log(r) / lq));
            while (w >= v && v < nn) {
                w -= v;
                ++v;
            }
            if (v < nn)
                edges.push_back({static_cast<node_t>(w), static_cast<node_t>(v)});
        }
    }
    return graph::from_edges(n, std::move(edges));
}

graph gen_ba(std::size_t n, std::size_t m, std::uint64_t seed)
{
    require(m >= 1 && m < n, "barabasi_albert: need 1 <= m < n");
    counter_rng rng(seed, 0x4241);
    std::vector<edge> edges;
    edges.reserve(m * (m - 1) / 2 + m * (n - m));
    /* every node appears once per unit of degree */
    std::vector<node_t> repeated;
    repeated.reserve(2 * edges.capacity());
    for (node_t a = 0; a < m; ++a)
        for (node_t b = a + 1; b < m; ++b) {
            edges.push_back({a, b});
            repeated.push_back(a);
            repeated.push_back(b);
        }

    std::vector<std::uint32_t> chosen_at(n, std::numeric_limits<std::uint32_t>::max());
    std::vector<node_t> targets;
    for (node_t v = static_cast<node_t>(m); v < n; ++v) {
        targets.clear();
        if (repeated.empty()) {
            targets.push_back(0); /* m == 1: the lone seed node has degree 0 */
        } else {
            while (targets.size() < m) {
                const node_t t = repeated[rng.below(repeated.size())];
                if (chosen_at[t] == v)
                    continue;
                chosen_at[t] = v;
                targets.push_back(t);
            }
        }
        for (node_t t : targets) {
            edges.push_back({t, v});
            repeated.push_back(t);
            repeated.push_back(v);
        }
    }
    return graph::from_edges(n, std::move(edges));
}

graph gen_small_world(std::size_t n, std::size_t k, double p_rewire, std::uint64_t seed)
{
    require(n >= 1, "small_world: n must be >= 1");
    require(k % 2 == 0 && k < n, "small_world: k must be even and < n");
    require(is_probability(p_rewire), "small_world: p_rewire must lie in [0,1]");
    counter_rng rng(seed, 0x5753);

    std::vector<std::unordered_set<node_t>> adj(n);
    for (node_t i = 0; i < n; ++i)
        for (std::size_t j = 1; j <= k / 2; ++j) {
            const auto t = static_cast<node_t>((i + j) % n);
            adj[i].insert(t);
            adj[t].insert(i);
        }
    for (std::size_t j = 1; j <= k / 2; ++j)
        for (node_t i = 0; i < n; ++i) {
            const auto t = static_cast<node_t>((i + j) % n);
            if (!rng.bernoulli(p_rewire))
                continue;
            if (adj[i].size() >= n - 1)
                continue;
            node_t w;
            do {
                w = static_cast<node_t>(rng.below(n));
            } while (w == i || adj[i].count(w));
            adj[i].erase(t);
            adj[t].erase(i);
            adj[i].insert(w);
            adj[w].insert(i);
        }

    std::vector<edge> edges;
    edges.reserve(n * k / 2);
    for (node_t i = 0; i < n; ++i)
        for (node_t t : adj[i])
            if (i < t)
                edges.push_back({i, t});
    return graph::from_edges(n, std::move(edges));
}

graph gen_forest_fire(std::size_t n, double p_fwd, double p_bwd, std::uint64_t seed)
{
    require(n >= 1, "forest_fire: n must be >= 1");
    require(p_fwd >= 0 && p_fwd < 1 && p_bwd >= 0 && p_bwd < 1, "forest_fire: probabilities must lie in [0,1)");
    counter_rng rng(seed, 0x4646);

    std::vector<std::vector<node_t>> out(n), in(n);
    std::vector<node_t> burned_at(n, std::numeric_limits<node_t>::max());
    std::vector<node_t> burned, candidates;
    std::vector<edge> edges;

    auto burn_some = [&](const std::vector<node_t> &links, std::uint64_t count, node_t v) {
        if (count == 0)
            return;
        candidates.clear();
        for (node_t y : links)
            if (burned_at[y] != v)
                candidates.push_back(y);
        const auto take = std::min<std::uint64_t>(count, candidates.size());
        for (std::size_t i = 0; i < take; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
            std::swap(candidates[i], candidates[j]);
            burned_at[candidates[i]] = v;
            burned.push_back(candidates[i]);
        }
    };

    for (node_t v = 1; v < n; ++v) {
        const auto ambassador = static_cast<node_t>(rng.below(v));
        burned.assign(1, ambassador);
        burned_at[ambassador] = v;
        for (std::size_t head = 0; head < burned.size(); ++head) {
            const node_t x = burned[head];
            const auto nf = rng.geometric_failures(p_fwd);
            const auto nb = rng.geometric_failures(p_bwd);
            burn_some(out[x], nf, v);
            burn_some(in[x], nb, v);
        }
        for (node_t b : burned) {
            out[v].push_back(b);
            in[b].push_back(v);
            edges.push_back({b, v});
        }
    }
    return graph::from_edges(n, std::move(edges));
}

forest_fire_fit fit_forest_fire(std::size_t n, std::size_t target_edges, double backward_ratio,
                                std::uint64_t seed)
{
    require(target_edges + 1 >= n, "forest_fire: target below the n-1 edges of a tree");
    require(backward_ratio >= 0 && backward_ratio <= 1, "forest_fire: backward_ratio must lie in [0,1]");
    forest_fire_fit best;
    double lo = 0.0, hi = 0.95;
    std::size_t best_gap = std::numeric_limits<std::size_t>::max();
    for (int probe = 0; probe < 40; ++probe) {
        const double mid = 0.5 * (lo + hi);
        const auto e = gen_forest_fire(n, mid, mid * backward_ratio, seed).num_edges();
        const auto gap = e > target_edges ? e - target_edges : target_edges - e;
        if (gap < best_gap) {
            best_gap = gap;
            best = {mid, mid * backward_ratio, e, probe + 1};
        }
        if (e < target_edges)
            lo = mid;
        else
            hi = mid;
        if (gap == 0 || hi - lo < 1e-7)
            break;
    }
    return best;
}

namespace {

class count_sampler {
public:
    explicit count_sampler(const count_distribution &d) : dist_(d)
    {
        if (d.type == count_distribution::kind::zipf) {
            cdf_.resize(d.hi);
            double acc = 0;
            for (std::uint32_t k = 1; k <= d.hi; ++k) {
                acc += std::pow(static_cast<double>(k), -d.exponent);
                cdf_[k - 1] = acc;
            }
            for (auto &c : cdf_)
                c /= acc;
        }
    }

    std::uint32_t operator()(counter_rng &rng) const
    {
        switch (dist_.type) {
        case count_distribution::kind::fixed:
            return dist_.value;
        case count_distribution::kind::uniform:
            return dist_.lo + static_cast<std::uint32_t>(rng.below(dist_.hi - dist_.lo + 1));
        case count_distribution::kind::zipf: {
            const double u = rng.uniform();
            const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
            return static_cast<std::uint32_t>(std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1)) + 1;
        }
        }
        return 1;
    }

private:
    count_distribution dist_;
    std::vector<double> cdf_;
};

void validate_distribution(const count_distribution &d, const std::string &what)
{
    using K = count_distribution::kind;
    switch (d.type) {
    case K::fixed:
        require(d.value >= 1, what + ": fixed value must be >= 1");
        break;
    case K::uniform:
        require(d.lo >= 1 && d.hi >= d.lo, what + ": uniform needs 1 <= lo <= hi");
        break;
    case K::zipf:
        require(d.hi >= 1, what + ": zipf upper bound must be >= 1");
        require(d.exponent > 0, what + ": zipf exponent must be > 0");
        break;
    }
}

std::uint32_t distribution_max(const count_distribution &d)
{
    return d.type == count_distribution::kind::fixed ? d.value : d.hi;
}

} // namespace

bipartite_network gen_bipartite(const bipartite_spec &spec, std::uint64_t seed)
{
    require(spec.groups >= 1, "bipartite_synth: groups must be >= 1");
    require(spec.group_cap >= 1, "bipartite_synth: group_cap must be >= 1");
    validate_distribution(spec.group_size, "bipartite_synth group_size");
    validate_distribution(spec.memberships, "bipartite_synth memberships");
    require(distribution_max(spec.memberships) <= spec.groups,
            "bipartite_synth: memberships per user exceed the number of groups");

    counter_rng rng(seed, 0x4250);
    const count_sampler size_of(spec.group_size);
    const count_sampler count_of(spec.memberships);

    std::vector<std::uint32_t> sizes(spec.groups);
    std::size_t slots = 0;
    for (auto &s : sizes) {
        s = std::min(size_of(rng), spec.group_cap);
        slots += s;
    }
    if (spec.memberships.type == count_distribution::kind::fixed)
        require(slots % spec.memberships.value == 0,
                "bipartite_synth: total membership slots (" + std::to_string(slots) +
                    ") not divisible by memberships per user (" + std::to_string(spec.memberships.value) + ")");

    std::vector<std::uint32_t> user_counts;
    for (std::size_t used = 0; used < slots;) {
        const auto k = std::min<std::size_t>(count_of(rng), slots - used);
        user_counts.push_back(static_cast<std::uint32_t>(k));
        used += k;
    }
    const auto max_size = *std::max_element(sizes.begin(), sizes.end());
    require(user_counts.size() >= max_size, "bipartite_synth: fewer users than the largest group");

    std::vector<group_t> stubs;
    stubs.reserve(slots);
    for (group_t g = 0; g < spec.groups; ++g)
        stubs.insert(stubs.end(), sizes[g], g);
    rng.shuffle(std::span<group_t>(stubs));

    /* owner[i]: user holding stub i; users own contiguous runs */
    std::vector<std::size_t> start(user_counts.size() + 1, 0);
    for (std::size_t u = 0; u < user_counts.size(); ++u)
        start[u + 1] = start[u] + user_counts[u];
    std::vector<user_t> owner(slots);
    for (user_t u = 0; u < user_counts.size(); ++u)
        for (auto i = start[u]; i < start[u + 1]; ++i)
            owner[i] = u;

    auto holds = [&](user_t u, group_t g, std::size_t except) {
        for (auto i = start[u]; i < start[u + 1]; ++i)
            if (i != except && stubs[i] == g)
                return true;
        return false;
    };

    for (user_t u = 0; u < user_counts.size(); ++u) {
        for (auto i = start[u]; i < start[u + 1]; ++i) {
            const auto first = stubs.begin() + static_cast<std::ptrdiff_t>(start[u]);
            const auto here = stubs.begin() + static_cast<std::ptrdiff_t>(i);
            if (std::find(first, here, stubs[i]) == here)
                continue;
            /* stubs[i] duplicates an earlier stub of u: swap with a stub of
             * another user so that neither ends up with a repeated group */
            bool fixed = false;
            for (int attempt = 0; attempt < 64 && !fixed; ++attempt) {
                const auto j = static_cast<std::size_t>(rng.below(slots));
                const auto v = owner[j];
                if (v == u || holds(u, stubs[j], i) || holds(v, stubs[i], j))
                    continue;
                std::swap(stubs[i], stubs[j]);
                fixed = true;
            }
            for (std::size_t j = 0; j < slots && !fixed; ++j) {
                const auto v = owner[j];
                if (v == u || holds(u, stubs[j], i) || holds(v, stubs[i], j))
                    continue;
                std::swap(stubs[i], stubs[j]);
                fixed = true;
            }
            require(fixed, "bipartite_synth: could not assign distinct groups to every user");
        }
    }

    std::vector<std::string> users(user_counts.size()), groups(spec.groups);
    for (std::size_t u = 0; u < users.size(); ++u)
        users[u] = "u" + std::to_string(u);
    for (std::size_t g = 0; g < groups.size(); ++g)
        groups[g] = "g" + std::to_string(g);
    std::vector<std::pair<user_t, group_t>> pairs;
    pairs.reserve(slots);
    for (std::size_t i = 0; i < slots; ++i)
        pairs.emplace_back(owner[i], stubs[i]);
    return bipartite_network::from_memberships(std::move(users), std::move(groups), std::move(pairs));
}

namespace {

const char *model_name(gen_model m)
{
    switch (m) {
    case gen_model::erdos_renyi: return "erdos_renyi";
    case gen_model::barabasi_albert: return "barabasi_albert";
    case gen_model::small_world: return "small_world";
    case gen_model::forest_fire: return "forest_fire";
    case gen_model::bipartite_synth: return "bipartite_synth";
    }
    return "?";
}

count_distribution distribution_from_json(const nlohmann::json &j, const std::string &what)
{
    count_distribution d;
    if (j.is_number_unsigned()) {
        d.value = j.get<std::uint32_t>();
        return d;
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "fixed") {
        d.type = count_distribution::kind::fixed;
        d.value = j.at("value").get<std::uint32_t>();
    } else if (kind == "uniform") {
        d.type = count_distribution::kind::uniform;
        d.lo = j.at("lo").get<std::uint32_t>();
        d.hi = j.at("hi").get<std::uint32_t>();
    } else if (kind == "zipf") {
        d.type = count_distribution::kind::zipf;
        d.exponent = j.value("exponent", 2.5);
        d.hi = j.at("max").get<std::uint32_t>();
    } else {
        throw std::invalid_argument(what + ": unknown distribution kind `" + kind + "`");
    }
    return d;
}

nlohmann::json distribution_to_json(const count_distribution &d)
{
    switch (d.type) {
    case count_distribution::kind::fixed: return {{"kind", "fixed"}, {"value", d.value}};
    case count_distribution::kind::uniform: return {{"kind", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
    case count_distribution::kind::zipf: return {{"kind", "zipf"}, {"exponent", d.exponent}, {"max", d.hi}};
    }
    return {};
}

} // namespace

gen_spec gen_spec_from_json(const nlohmann::json &j)
{
    gen_spec s;
    const auto model = j.at("model").get<std::string>();
    if (model == "erdos_renyi")
        s.model = gen_model::erdos_renyi;
    else if (model == "barabasi_albert")
        s.model = gen_model::barabasi_albert;
    else if (model == "small_world")
        s.model = gen_model::small_world;
    else if (model == "forest_fire")
        s.model = gen_model::forest_fire;
    else if (model == "bipartite_synth")
        s.model = gen_model::bipartite_synth;
    else
        throw std::invalid_argument("unknown generator model `" + model + "`");

    s.seed = j.value("seed", std::uint64_t{1});
    s.target_edges = j.value("target_edges", std::size_t{0});
    if (s.model == gen_model::bipartite_synth) {
        s.bipartite.groups = j.at("groups").get<std::uint32_t>();
        s.bipartite.group_size = distribution_from_json(j.at("group_size"), "group_size");
        s.bipartite.memberships = distribution_from_json(j.at("memberships"), "memberships");
        s.bipartite.group_cap = j.value("group_cap", 256u);
        return s;
    }
    s.n = j.at("n").get<std::size_t>();
    s.p = j.value("p", 0.0);
    s.m = j.value("m", std::size_t{1});
    s.k = j.value("k", std::size_t{2});
    s.p_rewire = j.value("p_rewire", 0.1);
    s.p_fwd = j.value("p_fwd", 0.0);
    s.p_bwd = j.value("p_bwd", 0.0);
    s.backward_ratio = j.value("backward_ratio", 0.32);
    return s;
}

nlohmann::json to_json(const gen_spec &s)
{
    nlohmann::json j{{"model", model_name(s.model)}, {"seed", s.seed}};
    if (s.target_edges)
        j["target_edges"] = s.target_edges;
    switch (s.model) {
    case gen_model::erdos_renyi: j["n"] = s.n; j["p"] = s.p; break;
    case gen_model::barabasi_albert: j["n"] = s.n; j["m"] = s.m; break;
    case gen_model::small_world: j["n"] = s.n; j["k"] = s.k; j["p_rewire"] = s.p_rewire; break;
    case gen_model::forest_fire:
        j["n"] = s.n; j["p_fwd"] = s.p_fwd; j["p_bwd"] = s.p_bwd; j["backward_ratio"] = s.backward_ratio;
        break;
    case gen_model::bipartite_synth:
        j["groups"] = s.bipartite.groups;
        j["group_size"] = distribution_to_json(s.bipartite.group_size);
        j["memberships"] = distribution_to_json(s.bipartite.memberships);
        j["group_cap"] = s.bipartite.group_cap;
        break;
    }
    return j;
}

generated_network generate(const gen_spec &spec)
{
    nlohmann::json meta{{"model", model_name(spec.model)}, {"seed", spec.seed}};
    const auto n = spec.n;
    const auto target = spec.target_edges;
    if (target)
        meta["target_edges"] = target;

    switch (spec.model) {
    case gen_model::erdos_renyi: {
        double p = spec.p;
        if (target) {
            require(n >= 2, "erdos_renyi: target_edges needs n >= 2");
            p = static_cast<double>(target) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
            meta["derived"] = {{"p", "target_edges / (n(n-1)/2)"}};
        }
        meta["params"] = {{"n", n}, {"p", p}};
        return {gen_er(n, p, spec.seed), meta};
    }
    case gen_model::barabasi_albert: {
        auto m = spec.m;
        if (target) {
            m = static_cast<std::size_t>(std::llround(static_cast<double>(target) / static_cast<double>(n)));
            meta["derived"] = {{"m", "round(target_edges / n)"}};
        }
        meta["params"] = {{"n", n}, {"m", m}, {"expected_edges", m * (m - 1) / 2 + m * (n - m)}};
        return {gen_ba(n, m, spec.seed), meta};
    }
    case gen_model::small_world: {
        auto k = spec.k;
        if (target) {
            k = 2 * static_cast<std::size_t>(std::llround(static_cast<double>(target) / static_cast<double>(n)));
            meta["derived"] = {{"k", "2 * round(target_edges / n)"}};
        }
        meta["params"] = {{"n", n}, {"k", k}, {"p_rewire", spec.p_rewire}};
        return {gen_small_world(n, k, spec.p_rewire, spec.seed), meta};
    }
    case gen_model::forest_fire: {
        double pf = spec.p_fwd, pb = spec.p_bwd;
        if (target) {
            const auto fit = fit_forest_fire(n, target, spec.backward_ratio, spec.seed);
            pf = fit.p_fwd;
            pb = fit.p_bwd;
            meta["derived"] = {{"p_fwd", "bisection on generated edge count"},
                               {"p_bwd", "backward_ratio * p_fwd"},
                               {"backward_ratio", spec.backward_ratio},
                               {"probes", fit.probes}};
        }
        meta["params"] = {{"n", n}, {"p_fwd", pf}, {"p_bwd", pb}};
        return {gen_forest_fire(n, pf, pb, spec.seed), meta};
    }
    case gen_model::bipartite_synth: {
        meta["params"] = to_json(spec);
        auto net = gen_bipartite(spec.bipartite, spec.seed);
        meta["users"] = net.num_users();
        meta["memberships"] = net.num_memberships();
        return {std::move(net), meta};
    }
    }
    throw std::logic_error("unreachable");
}

} // namespace groupsei
