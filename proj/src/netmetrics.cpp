#include "groupsei/netmetrics.h"
#include "groupsei/netmodel.h"
#include "groupsei/parallel.h"
#include "groupsei/rng.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <memory>
#include <mutex>
#include <sstream>

namespace groupsei {

double mean_degree(const graph &g)
{
    if (g.num_nodes() == 0)
        return 0.0;
    return 2.0 * static_cast<double>(g.num_edges()) / static_cast<double>(g.num_nodes());
}

std::vector<std::uint64_t> triangles(const graph &g)
{
    const auto n = g.num_nodes();
    std::vector<std::uint64_t> twice(n, 0);
    /* twice[v] accumulates |N(u) ∩ N(v)| over incident edges, which counts
     * each triangle at v two times */
    if (n <= 16384) {
        const std::size_t words = (n + 63) / 64;
        std::vector<std::uint64_t> bits(n * words, 0);
        for (node_t v = 0; v < n; ++v)
            for (node_t w : g.neighbors(v))
                bits[v * words + w / 64] |= std::uint64_t{1} << (w % 64);
        for (node_t u = 0; u < n; ++u) {
            const auto *bu = &bits[u * words];
            for (node_t v : g.neighbors(u)) {
                if (v <= u)
                    continue;
                const auto *bv = &bits[v * words];
                std::uint64_t c = 0;
                for (std::size_t i = 0; i < words; ++i)
                    c += static_cast<std::uint64_t>(std::popcount(bu[i] & bv[i]));
                twice[u] += c;
                twice[v] += c;
            }
        }
    } else {
        std::vector<node_t> mark(n, std::numeric_limits<node_t>::max());
        for (node_t u = 0; u < n; ++u) {
            for (node_t w : g.neighbors(u))
                mark[w] = u;
            for (node_t v : g.neighbors(u)) {
                if (v <= u)
                    continue;
                std::uint64_t c = 0;
                for (node_t w : g.neighbors(v))
                    c += mark[w] == u;
                twice[u] += c;
                twice[v] += c;
            }
        }
    }
    for (auto &t : twice)
        t /= 2;
    return twice;
}

double clustering(const graph &g)
{
    const auto n = g.num_nodes();
    if (n == 0)
        return 0.0;
    const auto tri = triangles(g);
    double sum = 0;
    for (node_t v = 0; v < n; ++v) {
        const auto d = static_cast<double>(g.degree(v));
        if (d >= 2)
            sum += 2.0 * static_cast<double>(tri[v]) / (d * (d - 1));
    }
    return sum / static_cast<double>(n);
}

std::optional<double> density(const graph &g)
{
    const auto n = g.num_nodes();
    if (n < 2)
        return std::nullopt;
    return 2.0 * static_cast<double>(g.num_edges()) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

std::optional<double> assortativity(const graph &g)
{
    using i128 = __int128;
    const auto m = static_cast<i128>(g.num_edges());
    if (m == 0)
        return std::nullopt;
    i128 s1 = 0, s2 = 0, prod = 0;
    for (const auto &e : g.edge_list()) {
        const auto j = static_cast<i128>(g.degree(e.a));
        const auto k = static_cast<i128>(g.degree(e.b));
        s1 += j + k;
        s2 += j * j + k * k;
        prod += j * k;
    }
    /* both orientations: scaled by 4m^2, var = 2m*s2 - s1^2, cov = 4m*prod - s1^2 */
    const i128 var = 2 * m * s2 - s1 * s1;
    const i128 cov = 4 * m * prod - s1 * s1;
    if (var == 0)
        return std::nullopt;
    return static_cast<double>(static_cast<long double>(cov) / static_cast<long double>(var));
}

namespace {

struct sweep_total {
    std::uint64_t distance_sum = 0;
    std::uint64_t pairs = 0;
    std::uint32_t eccentricity = 0;
};

/* bit-parallel BFS from up to 64 sources at once */
class multi_source_bfs {
public:
    explicit multi_source_bfs(const graph &g)
        : g_(g), seen_(g.num_nodes()), frontier_(g.num_nodes()), next_(g.num_nodes())
    {}

    sweep_total run(std::span<const node_t> sources)
    {
        const auto n = g_.num_nodes();
        std::fill(seen_.begin(), seen_.end(), 0);
        std::fill(frontier_.begin(), frontier_.end(), 0);
        const std::uint64_t full = sources.size() == 64 ? ~std::uint64_t{0}
                                                        : (std::uint64_t{1} << sources.size()) - 1;
        for (std::size_t i = 0; i < sources.size(); ++i) {
            seen_[sources[i]] |= std::uint64_t{1} << i;
            frontier_[sources[i]] |= std::uint64_t{1} << i;
        }
        sweep_total total;
        for (std::uint32_t level = 1;; ++level) {
            bool any = false;
            for (node_t v = 0; v < n; ++v) {
                next_[v] = 0;
                if (seen_[v] == full)
                    continue;
                std::uint64_t acc = 0;
                for (node_t u : g_.neighbors(v))
                    acc |= frontier_[u];
                next_[v] = acc & ~seen_[v];
            }
            for (node_t v = 0; v < n; ++v) {
                const auto fresh = next_[v];
                if (!fresh)
                    continue;
                seen_[v] |= fresh;
                const auto c = static_cast<std::uint64_t>(std::popcount(fresh));
                total.distance_sum += c * level;
                total.pairs += c;
                any = true;
            }
            if (!any)
                break;
            total.eccentricity = level;
            std::swap(frontier_, next_);
        }
        return total;
    }

private:
    const graph &g_;
    std::vector<std::uint64_t> seen_, frontier_, next_;
};

} // namespace

distance_stats diameter_and_apl(const graph &g, distance_mode mode, std::size_t samples, std::uint64_t seed,
                                unsigned workers)
{
    distance_stats out;
    if (g.num_nodes() == 0)
        return out;
    const auto comps = connected_components(g);
    const graph lcc = g.induced(comps.front());
    const auto n = lcc.num_nodes();
    if (n < 2)
        return out;

    const bool sample = mode == distance_mode::sampled || (mode == distance_mode::automatic && n > 50000);
    std::vector<node_t> sources(n);
    for (node_t v = 0; v < n; ++v)
        sources[v] = v;
    if (sample && samples < n) {
        counter_rng rng(seed, 0x41504C);
        for (std::size_t i = 0; i < samples; ++i)
            std::swap(sources[i], sources[i + rng.below(n - i)]);
        sources.resize(samples);
        std::sort(sources.begin(), sources.end());
    }
    out.sampled = sample && samples < n;
    out.sources = sources.size();

    const std::size_t batches = (sources.size() + 63) / 64;
    if (workers == 0)
        workers = default_workers();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, batches));
    std::vector<sweep_total> totals(batches);
    std::vector<std::unique_ptr<multi_source_bfs>> engines(std::max(1u, workers));
    std::mutex engine_mutex;
    std::vector<multi_source_bfs *> free_engines;
    for (auto &e : engines) {
        e = std::make_unique<multi_source_bfs>(lcc);
        free_engines.push_back(e.get());
    }
    parallel_for(batches, workers, [&](std::size_t b) {
        multi_source_bfs *engine;
        {
            std::lock_guard lock(engine_mutex);
            engine = free_engines.back();
            free_engines.pop_back();
        }
        const auto begin = b * 64;
        const auto count = std::min<std::size_t>(64, sources.size() - begin);
        totals[b] = engine->run(std::span<const node_t>(sources).subspan(begin, count));
        std::lock_guard lock(engine_mutex);
        free_engines.push_back(engine);
    });

    std::uint64_t dist = 0, pairs = 0;
    for (const auto &t : totals) {
        dist += t.distance_sum;
        pairs += t.pairs;
        out.diameter = std::max(out.diameter, t.eccentricity);
    }
    out.apl = pairs ? static_cast<double>(dist) / static_cast<double>(pairs) : 0.0;
    return out;
}

metrics_report full_report(const graph &g, distance_mode mode, unsigned workers, std::size_t samples,
                           std::uint64_t seed)
{
    metrics_report r;
    r.n_nodes = g.num_nodes();
    r.n_edges = g.num_edges();
    r.mean_degree = mean_degree(g);
    r.clustering = clustering(g);
    const auto d = diameter_and_apl(g, mode, samples, seed, workers);
    r.diameter = d.diameter;
    r.apl = d.apl;
    r.distances_sampled = d.sampled;
    r.density = density(g);
    r.lcc_fraction = lcc_fraction(g);
    r.assortativity = assortativity(g);
    return r;
}

std::string csv_header()
{
    return "nodes,edges,mean_degree,clustering,diameter,apl,density,lcc_fraction,assortativity";
}

namespace {

std::string fmt(double x)
{
    std::ostringstream os;
    os << std::setprecision(10) << x;
    return os.str();
}

std::string fmt(const std::optional<double> &x) { return x ? fmt(*x) : std::string(); }

} // namespace

std::string to_csv_row(const metrics_report &r)
{
    std::ostringstream os;
    os << r.n_nodes << ',' << r.n_edges << ',' << fmt(r.mean_degree) << ',' << fmt(r.clustering) << ','
       << r.diameter << ',' << fmt(r.apl) << ',' << fmt(r.density) << ',' << fmt(r.lcc_fraction) << ','
       << fmt(r.assortativity);
    return os.str();
}

nlohmann::json to_json(const metrics_report &r)
{
    nlohmann::json j{{"nodes", r.n_nodes},
                     {"edges", r.n_edges},
                     {"mean_degree", r.mean_degree},
                     {"clustering", r.clustering},
                     {"diameter", r.diameter},
                     {"apl", r.apl},
                     {"density", r.density ? nlohmann::json(*r.density) : nlohmann::json()},
                     {"lcc_fraction", r.lcc_fraction},
                     {"assortativity", r.assortativity ? nlohmann::json(*r.assortativity) : nlohmann::json()}};
    j["metadata"] = {{"clustering_kind", "average_local"},
                     {"mean_degree_convention", "2E/N"},
                     {"distances", r.distances_sampled ? "sampled" : "exact"},
                     {"distance_scope", "largest_connected_component"}};
    return j;
}

degree_convention classify_mean_degree(std::size_t nodes, std::size_t edges, double published, double precision)
{
    const auto n = static_cast<double>(nodes);
    const auto e = static_cast<double>(edges);
    if (std::abs(2.0 * e / n - published) < precision)
        return degree_convention::two_e_over_n;
    if (std::abs(e / n - published) < precision)
        return degree_convention::e_over_n;
    return degree_convention::neither;
}

const char *to_string(degree_convention c)
{
    switch (c) {
    case degree_convention::two_e_over_n: return "2E/N";
    case degree_convention::e_over_n: return "E/N";
    case degree_convention::neither: return "neither";
    }
    return "?";
}

} // namespace groupsei
