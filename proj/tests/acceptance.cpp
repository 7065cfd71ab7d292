#include "groupsei/cascades.h"
#include "groupsei/experiment.h"
#include "groupsei/netgen.h"
#include "groupsei/netmetrics.h"
#include "groupsei/netmodel.h"
#include "groupsei/phash.h"
#include "groupsei/sei.h"
#include "cascade_oracle.h"
#include "image_corpus.h"
#include "oracles.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace groupsei;
namespace fs = std::filesystem;

namespace {

struct verdict {
    bool pass;
    std::string detail;
};

std::string fmt(const char *f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const fs::path work = fs::temp_directory_path() / "groupsei_acceptance";

/* preset outputs from the first pass, reused by the determinism check */
std::map<std::string, experiment_result> preset_runs;

experiment_result run_preset(const std::string &name, const fs::path &out)
{
    auto spec = load_experiment_spec(fs::path(GROUPSEI_PRESETS) / (name + ".json"));
    spec.output = out;
    return run_experiment(spec);
}

const experiment_result &preset(const std::string &name)
{
    auto it = preset_runs.find(name);
    if (it == preset_runs.end())
        it = preset_runs.emplace(name, run_preset(name, work / "first" / name)).first;
    return it->second;
}

std::vector<const run_summary *> runs_of(const experiment_result &r, std::size_t cell)
{
    std::vector<const run_summary *> out;
    for (const auto &s : r.runs)
        if (s.cell == cell)
            out.push_back(&s);
    return out;
}

double median_of(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return quantile(v, 0.5);
}

double inf_or(const std::optional<std::int64_t> &t)
{
    return t ? static_cast<double>(*t) : std::numeric_limits<double>::infinity();
}

graph graph_with_counts(std::size_t n, std::size_t edges)
{
    std::vector<edge> e;
    for (std::size_t d = 1; e.size() < edges; ++d)
        for (std::size_t v = 0; v < n && e.size() < edges; ++v)
            e.push_back({static_cast<node_t>(v), static_cast<node_t>((v + d) % n)});
    return graph::from_edges(n, e);
}

verdict published_size_identities()
{
    std::string detail;
    bool ok = true;
    const struct {
        const char *name;
        std::size_t n, e;
        double published;
    } rows[] = {{"Brazil", 414, 1400, 6.76}, {"Indonesia", 217, 699, 6.44}};
    for (const auto &r : rows) {
        const auto g = graph_with_counts(r.n, r.e);
        const double md = mean_degree(g);
        const double exact = 2.0 * static_cast<double>(r.e) / static_cast<double>(r.n);
        const bool md_ok = std::abs(md - exact) <= 1e-9 && std::abs(std::round(md * 100) / 100 - r.published) <= 1e-9;
        const bool d_ok = std::abs(*density(g) - md / static_cast<double>(r.n - 1)) <= 1e-9;
        ok = ok && md_ok && d_ok && g.num_edges() == r.e;
        detail += fmt("%s mean degree %.6f (printed %.2f), density %.6f; ", r.name, md, r.published, *density(g));
    }
    const double india = 2.0 * 407081 / (5839.0 * 5838.0);
    const auto conv = classify_mean_degree(5839, 407081, 69.71);
    ok = ok && std::abs(india - 0.0239) <= 0.0001 && conv == degree_convention::e_over_n;
    detail += fmt("India density %.5f, published mean degree 69.71 follows %s, not 2E/N = %.2f", india,
                  to_string(conv), 2.0 * 407081 / 5839.0);
    return {ok, detail};
}

verdict synthetic_rows()
{
    bool ok = true;
    std::string detail;
    double worst_apl = 0, worst_c = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto r = full_report(gen_er(5839, 0.0901, seed), distance_mode::exact);
        ok = ok && std::abs(*r.density - 0.0901) <= 0.002 && std::abs(r.clustering - 0.09) <= 0.02 &&
             r.diameter == 2 && std::abs(r.apl - 1.91) <= 0.05;
        worst_apl = std::max(worst_apl, std::abs(r.apl - 1.91));
        worst_c = std::max(worst_c, std::abs(r.clustering - 0.09));
        if (seed == 1)
            detail += fmt("ER seed 1: density %.4f clustering %.4f diameter %u APL %.4f; ", *r.density, r.clustering,
                          r.diameter, r.apl);
    }
    detail += fmt("ER worst |APL-1.91| %.4f, |C-0.09| %.4f; ", worst_apl, worst_c);
    double worst_r = 0, c_lo = 1, c_hi = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto g = gen_ba(5839, 136, seed);
        const double r = assortativity(g).value_or(1.0);
        const double c = clustering(g);
        ok = ok && std::abs(r) < 0.05 && std::abs(c - 0.10) <= 0.05;
        worst_r = std::max(worst_r, std::abs(r));
        c_lo = std::min(c_lo, c);
        c_hi = std::max(c_hi, c);
    }
    detail += fmt("BA max |r| %.4f, clustering %.4f..%.4f", worst_r, c_lo, c_hi);
    return {ok, detail};
}

verdict metrics_oracle()
{
    std::size_t mismatches = 0;
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-10 * std::max({1.0, std::abs(a), std::abs(b)}); };
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const std::size_t n = 1 + seed % 50;
        const double p = 0.02 + 0.5 * static_cast<double>((seed * 7) % 17) / 17.0;
        std::mt19937_64 gen(seed + 1000);
        std::bernoulli_distribution coin(p);
        std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
        std::vector<edge> list;
        for (std::uint32_t a = 0; a < n; ++a)
            for (std::uint32_t b = a + 1; b < n; ++b)
                if (coin(gen)) {
                    edges.insert({a, b});
                    list.push_back({a, b});
                }
        const auto g = graph::from_edges(n, list);
        const auto a = oracle::adjacency(n, edges);
        const auto d = diameter_and_apl(g, distance_mode::exact, 1000, 1, 1);
        const auto od = oracle::lcc_distances(a);
        const auto r = assortativity(g);
        const double oa = oracle::assortativity(a);
        const bool ok = close(clustering(g), oracle::average_clustering(a)) && d.diameter == od.diameter &&
                        close(d.apl, od.apl) && r.has_value() == !std::isnan(oa) &&
                        (!r || close(*r, oa)) &&
                        close(lcc_fraction(g), static_cast<double>(oracle::largest_component(a).size()) /
                                                   static_cast<double>(n));
        mismatches += !ok;
    }
    return {mismatches == 0, fmt("%zu of 200 graphs disagree with the brute-force oracles", mismatches)};
}

verdict two_user_chain()
{
    membership_builder b;
    b.add("a", "g");
    b.add("b", "g");
    const auto net = std::move(b).build();
    sei_params p;
    p.alpha = p.beta = 0.5;
    const int runs = 10000;
    std::map<int, int> counts;
    for (std::uint64_t s = 1; s <= static_cast<std::uint64_t>(runs); ++s) {
        const auto r = run(net, p, s);
        counts[r.time_to_full ? static_cast<int>(*r.time_to_full) : -1]++;
    }
    const auto chain = oracle::sei_absorption({{0}, {0}}, 0.5, 0.5, 5, 200);
    int bins = 0, bad = 0;
    double worst = 0, tail_p = 0;
    int tail_n = 0;
    for (const auto &[t, c] : counts)
        if (!chain.count(t))
            tail_n += c;
    for (const auto &[t, prob] : chain) {
        const double analytic = t >= 2 ? (t - 1) * std::pow(0.5, t) : 0.0;
        const int observed = counts.count(t) ? counts.at(t) : 0;
        if (t < 0 || prob * runs < 5) {
            tail_p += prob;
            tail_n += observed;
            continue;
        }
        const double z = (observed - analytic * runs) / std::sqrt(runs * analytic * (1 - analytic));
        ++bins;
        bad += std::abs(z) > 3 || std::abs(analytic - prob) > 1e-12;
        worst = std::max(worst, std::abs(z));
    }
    const double tz = (tail_n - tail_p * runs) / std::sqrt(std::max(runs * tail_p * (1 - tail_p), 1.0));
    bad += std::abs(tz) > 3;
    return {bad == 0 && bins >= 10,
            fmt("%d bins of P(T=t)=(t-1)/2^t, worst |z| %.2f, pooled tail |z| %.2f", bins, worst, std::abs(tz))};
}

verdict fig5_ordering()
{
    const auto &res = preset("fig5");
    std::vector<mean_curve> curves;
    std::vector<double> median_t99;
    for (const auto &cell : res.cells) {
        std::vector<const time_series *> series;
        std::vector<double> t99;
        for (std::size_t i = 0; i < res.runs.size(); ++i)
            if (res.runs[i].cell == cell.index) {
                series.push_back(&res.series[i]);
                t99.push_back(inf_or(res.series[i].first_time_exposed(0.99)));
            }
        curves.push_back(average_curves(series));
        median_t99.push_back(median_of(t99));
    }
    std::set<std::int64_t> times;
    for (const auto &c : curves)
        times.insert(c.t.begin(), c.t.end());
    std::size_t violations = 0;
    for (auto t : times) {
        const double a = curves[0].exposed_or_infected_at(t), b = curves[1].exposed_or_infected_at(t),
                     c = curves[2].exposed_or_infected_at(t);
        violations += !(c >= b && b >= a);
    }
    const bool ok = violations == 0 && median_t99[2] < median_t99[0];
    return {ok, fmt("%zu ordering violations over %zu time points; median t99 phi5 %.1f phi20 %.1f phi256 %.1f",
                    violations, times.size(), median_t99[0], median_t99[1], median_t99[2])};
}

verdict fig6_monotonicity()
{
    const auto &res = preset("fig6");
    std::map<std::pair<double, std::uint32_t>, std::pair<double, std::size_t>> med;
    for (const auto &cell : res.cells) {
        std::vector<double> t;
        std::size_t censored = 0;
        for (const auto *r : runs_of(res, cell.index)) {
            t.push_back(inf_or(r->time_to_full));
            censored += !r->time_to_full;
        }
        med[{cell.alpha, cell.phi}] = {median_of(t), censored};
    }
    const double alphas[] = {0.001, 0.01, 0.1, 1.0};
    bool decreasing = true;
    std::string detail = "phi5 medians";
    for (std::size_t i = 0; i < 4; ++i) {
        const auto [m, c] = med.at({alphas[i], 5});
        detail += fmt(" a=%g:%.1f(%zu censored)", alphas[i], m, c);
        if (i > 0)
            decreasing = decreasing && m < med.at({alphas[i - 1], 5}).first;
    }
    const double ratio = med.at({0.001, 5}).first / med.at({0.001, 256}).first;
    detail += fmt("; phi256 at a=0.001: %.1f; ratio %.2f", med.at({0.001, 256}).first, ratio);
    return {decreasing && ratio >= 2, detail};
}

verdict fig7_thresholds()
{
    const auto &res = preset("fig7");
    double ei100 = -1, i150 = -1;
    for (const auto &cell : res.cells) {
        const auto runs = runs_of(res, cell.index);
        double ei = 0, inf = 0;
        for (const auto *r : runs) {
            ei += r->e_frac + r->i_frac;
            inf += r->i_frac;
        }
        ei /= static_cast<double>(runs.size());
        inf /= static_cast<double>(runs.size());
        if (cell.lifetime == 100)
            ei100 = ei;
        if (cell.lifetime == 150)
            i150 = inf;
    }
    return {ei100 > 0.5 && i150 > 0.9, fmt("mean E+I at lifetime 100 = %.4f, mean I at lifetime 150 = %.4f", ei100, i150)};
}

verdict realtime_sanity()
{
    const auto &res = preset("fig8");
    auto spec = load_experiment_spec(fs::path(GROUPSEI_PRESETS) / "fig8.json");
    const auto net = load_network(spec).net;
    sei_params p;
    p.alpha = p.beta = 0.1;
    p.phi = 5;
    std::size_t out_of_range = 0, inexact = 0, forwards = 0;
    std::int64_t lo = 1 << 30, hi = 0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        p.waiting = waiting_model::uniform(1, 1440);
        for (const auto &f : run_realtime(net, p, seed).forwards) {
            const auto d = f.delivery - f.attempt;
            out_of_range += d < 1 || d > 1440;
            lo = std::min(lo, d);
            hi = std::max(hi, d);
            ++forwards;
        }
    }
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        p.waiting = waiting_model::from_inter_event(ecdf::from_samples({10}));
        p.lifetime = 3000;
        for (const auto &f : run_realtime(net, p, seed).forwards)
            inexact += f.delivery - f.attempt != 10;
        p.lifetime.reset();
    }
    std::map<std::string, double> at200;
    for (const auto &cell : res.cells) {
        std::vector<const time_series *> series;
        for (std::size_t i = 0; i < res.runs.size(); ++i)
            if (res.runs[i].cell == cell.index)
                series.push_back(&res.series[i]);
        double sum = 0;
        for (const auto *s : series)
            sum += s->exposed_or_infected_fraction(200);
        at200[spec.grid.waiting[cell.waiting].label] = sum / static_cast<double>(series.size());
    }
    const double uni = at200.at("random_uniform"), ie = at200.at("inter_event");
    const bool ok = out_of_range == 0 && forwards > 0 && inexact == 0 && ie > uni;
    return {ok, fmt("%zu uniform delays in [%lld,%lld], %zu out of range; %zu inexact fixed delays; exposure at "
                    "200 min: random_uniform %.4f, inter_event %.4f, group_time %.4f",
                    forwards, static_cast<long long>(lo), static_cast<long long>(hi), out_of_range, inexact, uni, ie,
                    at200.count("group_time") ? at200.at("group_time") : -1.0)};
}

verdict cascade_oracle()
{
    auto log = oracle::random_log(100000, 2000, 2024);
    const auto got = group_by_fingerprint(log);
    const auto expected = oracle::sort_and_scan(log);
    std::size_t mismatches = got.size() == expected.size() ? 0 : 1, sum_errors = 0;
    for (const auto &c : got) {
        const auto it = expected.find(c.fingerprint);
        mismatches += it == expected.end() || !oracle::matches(c, it->second);
        sum_errors += c.lifetime != std::accumulate(c.inter_event.begin(), c.inter_event.end(), std::int64_t{0});
    }
    std::ostringstream a, b;
    write_cascades(a, got);
    const auto ga = group_time_distributions(filter_multigroup(got), default_group_time_buckets());
    std::mt19937_64 gen(1);
    std::shuffle(log.begin(), log.end(), gen);
    const auto shuffled = group_by_fingerprint(log);
    write_cascades(b, shuffled);
    bool same = a.str() == b.str() && shuffled.size() == got.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
        same = got[i].inter_event == shuffled[i].inter_event && got[i].group_reach_times == shuffled[i].group_reach_times;
    const auto gb = group_time_distributions(filter_multigroup(shuffled), default_group_time_buckets());
    same = same && ga.size() == gb.size();
    for (std::size_t i = 0; same && i < ga.size(); ++i)
        same = std::equal(ga[i].second.values().begin(), ga[i].second.values().end(), gb[i].second.values().begin(),
                          gb[i].second.values().end());
    return {mismatches == 0 && sum_errors == 0 && same,
            fmt("%zu cascades, %zu oracle mismatches, %zu lifetime-sum errors, order independent: %s", got.size(),
                mismatches, sum_errors, same ? "yes" : "no")};
}

verdict phash_corpus()
{
    const auto imgs = corpus::structured_images();
    bool identical = true;
    int worst = 0;
    for (const auto &img : imgs) {
        auto copy = img;
        identical = identical && phash(copy) == phash(img);
        worst = std::max(worst, hamming_distance(phash(img), phash(corpus::brighten(img, 1.1))));
    }
    double total = 0;
    for (std::uint64_t i = 0; i < 100; ++i)
        total += hamming_distance(phash(corpus::noise(64, 64, 2 * i + 1)), phash(corpus::noise(64, 64, 2 * i + 2)));
    const double mean = total / 100;
    return {identical && worst <= 10 && mean >= 16 && std::abs(mean - 32) <= 4,
            fmt("identical: %s; worst brightness distance %d; noise pair mean %.2f", identical ? "yes" : "no", worst,
                mean)};
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

verdict determinism()
{
    std::size_t files = 0, differing = 0;
    std::string detail;
    for (const char *name : {"fig5", "fig6", "fig7", "fig8"}) {
        preset(name);
        const auto a = work / "first" / name, b = work / "second" / name;
        fs::remove_all(b);
        run_preset(name, b);
        for (const auto &e : fs::recursive_directory_iterator(a)) {
            if (!e.is_regular_file() || e.path().extension() != ".csv")
                continue;
            const auto rel = fs::relative(e.path(), a);
            ++files;
            if (slurp(e.path()) != slurp(b / rel)) {
                ++differing;
                if (detail.empty())
                    detail = "first difference: " + std::string(name) + "/" + rel.string() + "; ";
            }
        }
    }
    return {files > 0 && differing == 0, detail + fmt("%zu CSV files compared, %zu differ", files, differing)};
}

} // namespace

int main()
{
    fs::remove_all(work);
    fs::create_directories(work);
    const std::vector<std::pair<const char *, std::function<verdict()>>> criteria = {
        {"published-size-identities", published_size_identities},
        {"synthetic-size-rows", synthetic_rows},
        {"metrics-oracle-suite", metrics_oracle},
        {"sei-two-user-markov-chain", two_user_chain},
        {"fig5-forward-limit-ordering", fig5_ordering},
        {"fig6-virality-monotonicity", fig6_monotonicity},
        {"fig7-lifetime-thresholds", fig7_thresholds},
        {"realtime-sanity", realtime_sanity},
        {"cascade-pipeline-oracle", cascade_oracle},
        {"phash-corpus", phash_corpus},
        {"preset-determinism", determinism},
    };
    int failed = 0;
    for (const auto &[name, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        verdict v;
        try {
            v = check();
        } catch (const std::exception &e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << " (" << fmt("%.1f", secs) << " s): " << v.detail
                  << std::endl;
        failed += !v.pass;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
