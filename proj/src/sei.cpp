#include "groupsei/sei.h"
#include "groupsei/parallel.h"
#include "groupsei/parse.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace groupsei {

namespace {

/* stream purposes for counter_rng(seed, purpose, user) */
enum : std::uint64_t {
    stream_seed_user = 0x5EED,
    stream_incubation = 1,
    stream_forward = 2,
    stream_selection = 3,
    stream_waiting = 4,
};

constexpr std::int64_t no_time = std::numeric_limits<std::int64_t>::max();

std::int64_t after(std::int64_t t, std::uint64_t delay)
{
    if (delay == counter_rng::never || delay > static_cast<std::uint64_t>(no_time - t))
        return no_time;
    return t + static_cast<std::int64_t>(delay);
}

} // namespace

waiting_model waiting_model::uniform(std::int64_t lo, std::int64_t hi)
{
    waiting_model w;
    w.type = kind::random_uniform;
    w.lo = lo;
    w.hi = hi;
    return w;
}

waiting_model waiting_model::from_inter_event(ecdf e)
{
    waiting_model w;
    w.type = kind::inter_event;
    w.inter_event = std::move(e);
    return w;
}

waiting_model waiting_model::from_group_time(std::vector<std::pair<std::uint32_t, ecdf>> buckets)
{
    waiting_model w;
    w.type = kind::group_time;
    w.group_time = std::move(buckets);
    return w;
}

void waiting_model::validate() const
{
    auto check_ecdf = [](const ecdf &e) {
        if (e.empty())
            throw std::invalid_argument("waiting: empty ECDF");
        if (e.values().front() < 0)
            throw std::invalid_argument("waiting: negative waiting time in ECDF");
    };
    switch (type) {
    case kind::random_uniform:
        if (lo < 1 || hi < lo)
            throw std::invalid_argument("waiting: random_uniform needs 1 <= lo <= hi");
        break;
    case kind::inter_event:
        check_ecdf(inter_event);
        break;
    case kind::group_time:
        if (group_time.empty())
            throw std::invalid_argument("waiting: group_time needs at least one bucket");
        for (std::size_t i = 0; i < group_time.size(); ++i) {
            if (group_time[i].first < 2)
                throw std::invalid_argument("waiting: group_time buckets start at reach count 2");
            if (i && group_time[i].first <= group_time[i - 1].first)
                throw std::invalid_argument("waiting: group_time buckets must be strictly increasing");
            check_ecdf(group_time[i].second);
        }
        break;
    }
}

const ecdf &waiting_model::bucket_for(std::size_t reach) const
{
    const auto k = std::max<std::size_t>(2, reach + 1);
    const auto it = std::upper_bound(group_time.begin(), group_time.end(), k,
                                     [](std::size_t x, const auto &b) { return x < b.first; });
    return it == group_time.begin() ? group_time.front().second : std::prev(it)->second;
}

std::int64_t waiting_model::sample(counter_rng &rng, std::size_t reach) const
{
    switch (type) {
    case kind::random_uniform:
        return lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
    case kind::inter_event:
        return std::llround(inter_event.sample(rng.uniform()));
    case kind::group_time:
        return std::llround(bucket_for(reach).sample(rng.uniform()));
    }
    return 0;
}

const char *waiting_model::kind_name() const
{
    switch (type) {
    case kind::random_uniform: return "random_uniform";
    case kind::inter_event: return "inter_event";
    case kind::group_time: return "group_time";
    }
    return "?";
}

void sei_params::validate() const
{
    if (!(alpha >= 0 && alpha <= 1))
        throw std::invalid_argument("alpha must lie in [0,1]");
    if (!(beta >= 0 && beta <= 1))
        throw std::invalid_argument("beta must lie in [0,1]");
    if (phi < 1)
        throw std::invalid_argument("phi must be >= 1");
    if (lifetime && *lifetime < 1)
        throw std::invalid_argument("lifetime must be >= 1");
    if (max_iterations < 1)
        throw std::invalid_argument("max_iterations must be >= 1");
    if (waiting)
        waiting->validate();
}

const char *to_string(termination t)
{
    switch (t) {
    case termination::all_infected: return "all_infected";
    case termination::stopped: return "stopped";
    case termination::lifetime: return "lifetime";
    case termination::max_iterations: return "max_iterations";
    }
    return "?";
}

std::optional<std::int64_t> sei_state::next_event_time() const
{
    if (events.empty())
        return std::nullopt;
    return events.top().time;
}

namespace {

void become_infected(sei_state &s, const sei_params &params, user_t u, std::int64_t t)
{
    if (s.state[u] == compartment::exposed)
        --s.exposed;
    else if (s.state[u] == compartment::susceptible)
        --s.susceptible;
    s.state[u] = compartment::infected;
    ++s.infected;
    counter_rng rng(s.seed, stream_forward, u);
    const auto when = after(t, rng.geometric_trials(params.alpha));
    if (when != no_time)
        s.events.push({when, 2, u});
}

void become_exposed(sei_state &s, const sei_params &params, user_t u, std::int64_t t)
{
    --s.susceptible;
    ++s.exposed;
    s.state[u] = compartment::exposed;
    counter_rng rng(s.seed, stream_incubation, u);
    const auto when = after(t, rng.geometric_trials(params.beta));
    if (when != no_time)
        s.events.push({when, 1, u});
}

} // namespace

sei_state seed_infection(const bipartite_network &net, const sei_params &params, std::uint64_t seed)
{
    if (net.empty())
        throw std::invalid_argument("seed_infection: empty network");
    sei_state s;
    s.seed = seed;
    const auto n = net.num_users();
    s.state.assign(n, compartment::susceptible);
    s.forwarded.assign(n, 0);
    s.pending_delivery.assign(n, -1);
    s.group_posted.assign(net.num_groups(), 0);
    s.posts_by_user.assign(n, 0);
    s.susceptible = n;
    counter_rng rng(seed, stream_seed_user);
    const auto first = static_cast<user_t>(rng.below(n));
    become_infected(s, params, first, 0);
    return s;
}

std::vector<group_t> forward_selection(const sei_state &s, const bipartite_network &net, const sei_params &params,
                                       user_t u)
{
    const auto own = net.groups_of(u);
    std::vector<group_t> groups(own.begin(), own.end());
    const auto take = std::min<std::size_t>(params.phi, groups.size());
    counter_rng rng(s.seed, stream_selection, u);
    for (std::size_t i = 0; i < take; ++i)
        std::swap(groups[i], groups[i + static_cast<std::size_t>(rng.below(groups.size() - i))]);
    groups.resize(take);
    return groups;
}

void step(sei_state &s, const bipartite_network &net, const sei_params &params)
{
    const auto t = ++s.clock;
    const auto reach_before = s.reach;
    while (!s.events.empty() && s.events.top().time == t) {
        const auto ev = s.events.top();
        s.events.pop();
        const auto u = ev.user;
        switch (ev.phase) {
        case 1:
            become_infected(s, params, u, t);
            break;
        case 2: {
            s.forwarded[u] = 1;
            std::int64_t delivery = t;
            if (params.waiting) {
                counter_rng rng(s.seed, stream_waiting, u);
                delivery = after(t, static_cast<std::uint64_t>(params.waiting->sample(rng, reach_before)));
            }
            const auto groups = static_cast<std::uint32_t>(std::min<std::size_t>(params.phi, net.groups_of(u).size()));
            s.forwards.push_back({u, t, delivery, groups});
            if (delivery != no_time) {
                s.pending_delivery[u] = delivery;
                s.events.push({delivery, 3, u});
            }
            break;
        }
        case 3: {
            s.pending_delivery[u] = -1;
            for (group_t g : forward_selection(s, net, params, u)) {
                ++s.posts_by_user[u];
                if (s.group_posted[g])
                    continue;
                s.group_posted[g] = 1;
                ++s.reach;
                for (user_t m : net.members_of(g))
                    if (s.state[m] == compartment::susceptible)
                        become_exposed(s, params, m, t);
            }
            break;
        }
        default:
            throw std::logic_error("step: unknown event phase");
        }
    }
}

const series_row &time_series::at(std::int64_t t) const
{
    if (rows_.empty())
        throw std::logic_error("time_series: empty");
    const auto it = std::upper_bound(rows_.begin(), rows_.end(), t,
                                     [](std::int64_t x, const series_row &r) { return x < r.t; });
    return it == rows_.begin() ? rows_.front() : *std::prev(it);
}

double time_series::exposed_or_infected_fraction(std::int64_t t) const
{
    const auto &r = at(t);
    return static_cast<double>(r.e + r.i) / static_cast<double>(population_);
}

double time_series::infected_fraction(std::int64_t t) const
{
    return static_cast<double>(at(t).i) / static_cast<double>(population_);
}

std::optional<std::int64_t> time_series::first_time_exposed(double fraction) const
{
    for (const auto &r : rows_)
        if (static_cast<double>(r.e + r.i) >= fraction * static_cast<double>(population_))
            return r.t;
    return std::nullopt;
}

void write_time_series(std::ostream &out, const time_series &ts)
{
    out << "t,s_frac,e_frac,i_frac,reach\n" << std::setprecision(12);
    const auto n = static_cast<double>(ts.population());
    for (const auto &r : ts.rows())
        out << r.t << ',' << r.s / n << ',' << r.e / n << ',' << r.i / n << ',' << r.reach << '\n';
}

double run_result::final_infected() const
{
    return static_cast<double>(series.rows().back().i) / static_cast<double>(series.population());
}

double run_result::final_exposed_or_infected() const
{
    const auto &r = series.rows().back();
    return static_cast<double>(r.e + r.i) / static_cast<double>(series.population());
}

run_result run(const bipartite_network &net, const sei_params &params, std::uint64_t seed)
{
    params.validate();
    auto s = seed_infection(net, params, seed);
    const auto n = s.population();
    const std::int64_t limit = std::min(params.lifetime.value_or(no_time), params.max_iterations);

    run_result out;
    out.series = time_series(n);
    auto snapshot = [&] {
        const series_row r{s.clock, static_cast<std::uint32_t>(s.susceptible), static_cast<std::uint32_t>(s.exposed),
                           static_cast<std::uint32_t>(s.infected), s.reach};
        const auto rows = out.series.rows();
        if (!rows.empty()) {
            const auto &p = rows.back();
            if (p.s == r.s && p.e == r.e && p.i == r.i && p.reach == r.reach)
                return;
        }
        out.series.push(r);
    };
    snapshot();

    auto limit_reason = [&] {
        return params.lifetime && *params.lifetime <= params.max_iterations ? termination::lifetime
                                                                              : termination::max_iterations;
    };

    while (true) {
        if (s.infected == n) {
            out.reason = termination::all_infected;
            break;
        }
        if (s.events.empty() && s.exposed == 0) {
            out.reason = termination::stopped;
            break;
        }
        if (s.clock >= limit) {
            out.reason = limit_reason();
            break;
        }
        const auto next = s.next_event_time().value_or(no_time);
        if (next > limit) {
            /* nothing else can happen before the limit */
            s.clock = limit;
            out.reason = limit_reason();
            break;
        }
        s.clock = next - 1;
        step(s, net, params);
        snapshot();
    }

    out.end_time = s.clock;
    if (out.series.rows().back().t != s.clock) {
        auto last = out.series.rows().back();
        last.t = s.clock;
        out.series.push(last);
    }
    if (out.reason == termination::all_infected)
        out.time_to_full = s.clock;
    out.reach = s.reach;
    out.unreached_groups = net.num_groups() - s.reach;
    out.posts_by_user = std::move(s.posts_by_user);
    out.forwards = std::move(s.forwards);
    return out;
}

run_result run_realtime(const bipartite_network &net, const sei_params &params, std::uint64_t seed)
{
    if (!params.waiting)
        throw std::invalid_argument("run_realtime: a waiting model is required");
    return run(net, params, seed);
}

double quantile(std::span<const double> sorted, double q)
{
    if (sorted.empty())
        return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0)
        return sorted[lo];
    if (std::isinf(sorted[lo]) || std::isinf(sorted[hi]))
        return std::numeric_limits<double>::infinity();
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

time_summary time_to_full_infection(const bipartite_network &net, sei_params params,
                                    std::span<const std::uint64_t> seeds, unsigned workers)
{
    params.lifetime.reset();
    params.validate();
    time_summary out;
    out.times.resize(seeds.size());
    parallel_for(seeds.size(), workers, [&](std::size_t i) { out.times[i] = run(net, params, seeds[i]).time_to_full; });

    std::vector<double> sorted;
    for (const auto &t : out.times) {
        sorted.push_back(t ? static_cast<double>(*t) : std::numeric_limits<double>::infinity());
        out.censored += !t;
    }
    std::sort(sorted.begin(), sorted.end());
    out.median = quantile(sorted, 0.5);
    out.q1 = quantile(sorted, 0.25);
    out.q3 = quantile(sorted, 0.75);
    return out;
}

std::vector<lifetime_point> run_with_lifetime(const bipartite_network &net, sei_params params,
                                              std::span<const std::int64_t> lifetimes,
                                              std::span<const std::uint64_t> seeds, unsigned workers)
{
    std::vector<lifetime_point> out;
    for (auto L : lifetimes) {
        params.lifetime = L;
        params.validate();
        std::vector<double> inf(seeds.size()), exp(seeds.size());
        parallel_for(seeds.size(), workers, [&](std::size_t i) {
            const auto r = run(net, params, seeds[i]);
            inf[i] = r.final_infected();
            exp[i] = r.final_exposed_or_infected();
        });
        lifetime_point p{L, 0, 0};
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            p.mean_infected += inf[i];
            p.mean_exposed_or_infected += exp[i];
        }
        p.mean_infected /= static_cast<double>(seeds.size());
        p.mean_exposed_or_infected /= static_cast<double>(seeds.size());
        out.push_back(p);
    }
    return out;
}

std::optional<waiting_model> waiting_model_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir)
{
    if (j.is_null() || (j.is_string() && j.get<std::string>() == "iteration"))
        return std::nullopt;
    auto resolve = [&](const std::string &p) {
        const std::filesystem::path path(p);
        return (path.is_absolute() ? path : base_dir / path).string();
    };
    const auto kind = j.at("kind").get<std::string>();
    waiting_model w;
    if (kind == "random_uniform") {
        w = waiting_model::uniform(j.value("lo", std::int64_t{1}), j.value("hi", std::int64_t{1440}));
    } else if (kind == "inter_event") {
        w = waiting_model::from_inter_event(read_ecdf_file(resolve(j.at("ecdf").get<std::string>())));
    } else if (kind == "group_time") {
        w = waiting_model::from_group_time(read_group_time_file(resolve(j.at("file").get<std::string>())));
    } else if (kind == "fixed") {
        w = waiting_model::from_inter_event(ecdf::from_samples({j.at("minutes").get<double>()}));
    } else {
        throw std::invalid_argument("unknown waiting model kind `" + kind + "`");
    }
    w.validate();
    return w;
}

sei_params sei_params_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir)
{
    sei_params p;
    p.alpha = j.value("alpha", p.alpha);
    p.beta = j.value("beta", p.beta);
    p.phi = j.value("phi", p.phi);
    if (j.contains("lifetime") && !j.at("lifetime").is_null())
        p.lifetime = j.at("lifetime").get<std::int64_t>();
    if (j.contains("waiting"))
        p.waiting = waiting_model_from_json(j.at("waiting"), base_dir);
    p.max_iterations = j.value("max_iterations", p.max_iterations);
    p.validate();
    return p;
}

} // namespace groupsei
