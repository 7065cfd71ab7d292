#include "groupsei/cascades.h"
#include "groupsei/netmodel.h"
#include "groupsei/parallel.h"
#include "groupsei/parse.h"
#include "groupsei/phash.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace groupsei {

std::vector<message_event> read_message_log(std::istream &in)
{
    std::vector<message_event> events;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error &e) {
            throw parse_error(std::string("invalid JSON: ") + e.what(), lineno);
        }
        try {
            message_event ev;
            ev.country = j.value("country", std::string());
            ev.group = j.at("group").get<std::string>();
            ev.user = j.at("user").get<std::string>();
            const auto &ts = j.at("ts");
            ev.ts = ts.is_number_integer() ? ts.get<std::int64_t>()
                                           : static_cast<std::int64_t>(std::floor(ts.get<double>()));
            if (ev.ts <= 0)
                throw parse_error("timestamp must be positive", lineno);
            if (ev.group.empty() || ev.user.empty())
                throw parse_error("empty group or user", lineno);
            if (j.contains("media") && !j.at("media").is_null()) {
                const auto media = j.at("media").get<std::string>();
                if (media.rfind("h:", 0) == 0) {
                    std::uint64_t h = 0;
                    if (!fingerprint_from_hex(media, h))
                        throw parse_error("bad fingerprint `" + media + "`", lineno);
                    ev.fingerprint = h;
                } else if (!media.empty()) {
                    ev.media_path = media;
                }
            }
            if (j.contains("media_fingerprint") && !j.at("media_fingerprint").is_null()) {
                const auto text = j.at("media_fingerprint").get<std::string>();
                std::uint64_t h = 0;
                if (!fingerprint_from_hex(text, h))
                    throw parse_error("bad fingerprint `" + text + "`", lineno);
                ev.fingerprint = h;
                ev.media_path.clear();
            }
            events.push_back(std::move(ev));
        } catch (const nlohmann::json::exception &e) {
            throw parse_error(std::string("bad event: ") + e.what(), lineno);
        }
    }
    return events;
}

std::int64_t to_minutes(std::int64_t seconds)
{
    return seconds >= 0 ? seconds / 60 : -((-seconds + 59) / 60);
}

namespace {

std::unordered_map<std::uint64_t, std::uint64_t> hamming_representatives(std::vector<std::uint64_t> prints,
                                                                         int threshold)
{
    std::sort(prints.begin(), prints.end());
    prints.erase(std::unique(prints.begin(), prints.end()), prints.end());
    std::vector<std::size_t> parent(prints.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < prints.size(); ++i)
        for (std::size_t j = i + 1; j < prints.size(); ++j)
            if (hamming_distance(prints[i], prints[j]) <= threshold) {
                auto a = find(i), b = find(j);
                if (a != b)
                    parent[std::max(a, b)] = std::min(a, b); /* root is the smallest index */
            }
    std::unordered_map<std::uint64_t, std::uint64_t> rep;
    for (std::size_t i = 0; i < prints.size(); ++i)
        rep[prints[i]] = prints[find(i)];
    return rep;
}

} // namespace

std::vector<cascade_stats> group_by_fingerprint(std::span<const message_event> events,
                                                const grouping_options &options)
{
    std::vector<const message_event *> tagged;
    for (const auto &e : events)
        if (e.fingerprint)
            tagged.push_back(&e);

    std::unordered_map<std::uint64_t, std::uint64_t> rep;
    if (options.hamming_clustering) {
        std::vector<std::uint64_t> prints;
        for (auto *e : tagged)
            prints.push_back(*e->fingerprint);
        rep = hamming_representatives(std::move(prints), options.hamming_threshold);
    }
    auto key_of = [&](const message_event *e) {
        return options.hamming_clustering ? rep.at(*e->fingerprint) : *e->fingerprint;
    };

    std::sort(tagged.begin(), tagged.end(), [&](const message_event *a, const message_event *b) {
        const auto ka = key_of(a), kb = key_of(b);
        if (ka != kb)
            return ka < kb;
        return std::tie(a->ts, a->group, a->user, a->country) < std::tie(b->ts, b->group, b->user, b->country);
    });

    std::vector<cascade_stats> out;
    for (std::size_t i = 0; i < tagged.size();) {
        const auto key = key_of(tagged[i]);
        std::size_t j = i;
        while (j < tagged.size() && key_of(tagged[j]) == key)
            ++j;

        cascade_stats c;
        c.fingerprint = key;
        c.total_shares = j - i;
        c.first_ts = tagged[i]->ts;
        c.last_ts = tagged[j - 1]->ts;
        const auto first_min = to_minutes(c.first_ts);
        c.lifetime = to_minutes(c.last_ts) - first_min;
        std::set<std::string_view> groups, users;
        for (auto k = i; k < j; ++k) {
            const auto *e = tagged[k];
            if (k > i)
                c.inter_event.push_back(to_minutes(e->ts) - to_minutes(tagged[k - 1]->ts));
            if (groups.insert(e->group).second && groups.size() >= 2)
                c.group_reach_times.push_back(to_minutes(e->ts) - first_min);
            users.insert(e->user);
        }
        c.distinct_groups = groups.size();
        c.distinct_users = users.size();
        out.push_back(std::move(c));
        i = j;
    }
    return out;
}

std::vector<cascade_stats> filter_multigroup(std::span<const cascade_stats> stats)
{
    std::vector<cascade_stats> out;
    for (const auto &c : stats)
        if (c.distinct_groups >= 2)
            out.push_back(c);
    return out;
}

std::vector<std::uint32_t> default_group_time_buckets() { return {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 21, 51, 101}; }

std::vector<std::pair<std::uint32_t, ecdf>> group_time_distributions(std::span<const cascade_stats> stats,
                                                                     std::span<const std::uint32_t> buckets)
{
    if (!std::is_sorted(buckets.begin(), buckets.end()) ||
        std::adjacent_find(buckets.begin(), buckets.end()) != buckets.end())
        throw std::invalid_argument("group-time buckets must be strictly increasing");
    std::vector<std::vector<double>> pooled(buckets.size());
    for (const auto &c : stats) {
        std::int64_t prev = 0;
        for (std::size_t idx = 0; idx < c.group_reach_times.size(); ++idx) {
            const auto k = static_cast<std::uint32_t>(idx + 2);
            const auto incr = c.group_reach_times[idx] - prev;
            prev = c.group_reach_times[idx];
            const auto it = std::upper_bound(buckets.begin(), buckets.end(), k);
            if (it == buckets.begin())
                continue;
            pooled[static_cast<std::size_t>(it - buckets.begin()) - 1].push_back(static_cast<double>(incr));
        }
    }
    std::vector<std::pair<std::uint32_t, ecdf>> out;
    for (std::size_t b = 0; b < buckets.size(); ++b)
        if (!pooled[b].empty())
            out.emplace_back(buckets[b], ecdf::from_samples(std::move(pooled[b])));
    return out;
}

cdf_table cdf_of(std::vector<double> values)
{
    cdf_table t;
    if (values.empty())
        return t;
    const auto e = ecdf::from_samples(std::move(values));
    for (std::size_t i = 0; i < e.size(); ++i)
        t.emplace_back(e.values()[i], e.cum_probs()[i]);
    return t;
}

cdf_report make_cdf_report(std::span<const cascade_stats> stats)
{
    std::vector<double> shares, groups, lifetime, inter;
    for (const auto &c : stats) {
        shares.push_back(static_cast<double>(c.total_shares));
        groups.push_back(static_cast<double>(c.distinct_groups));
        lifetime.push_back(static_cast<double>(c.lifetime));
        for (auto v : c.inter_event)
            inter.push_back(static_cast<double>(v));
    }
    return {cdf_of(std::move(shares)), cdf_of(std::move(groups)), cdf_of(std::move(lifetime)),
            cdf_of(std::move(inter))};
}

void write_cdf_table(std::ostream &out, const cdf_table &t)
{
    out << "value,cum_prob\n" << std::setprecision(17);
    for (const auto &[v, p] : t)
        out << v << ',' << p << '\n';
}

void write_cascades(std::ostream &out, std::span<const cascade_stats> stats)
{
    out << "fingerprint,total_shares,distinct_groups,distinct_users,first_ts,last_ts,lifetime_min\n";
    for (const auto &c : stats)
        out << fingerprint_to_hex(c.fingerprint) << ',' << c.total_shares << ',' << c.distinct_groups << ','
            << c.distinct_users << ',' << c.first_ts << ',' << c.last_ts << ',' << c.lifetime << '\n';
}

ingest_summary ingest(const ingest_options &options)
{
    std::ifstream in(options.log);
    if (!in)
        throw std::runtime_error("unable to open file: " + options.log.string());
    auto events = read_message_log(in);

    const auto base = options.images ? *options.images : options.log.parent_path();
    std::vector<std::string> paths;
    for (const auto &e : events)
        if (!e.media_path.empty())
            paths.push_back(e.media_path);
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());

    std::vector<std::uint64_t> hashes(paths.size());
    parallel_for(paths.size(), options.workers, [&](std::size_t i) {
        const std::filesystem::path p(paths[i]);
        hashes[i] = phash(decode_image_file((p.is_absolute() ? p : base / p).string()));
    });
    for (auto &e : events)
        if (!e.media_path.empty()) {
            const auto it = std::lower_bound(paths.begin(), paths.end(), e.media_path);
            e.fingerprint = hashes[static_cast<std::size_t>(it - paths.begin())];
        }

    const auto all = group_by_fingerprint(events, options.grouping);
    const auto multi = filter_multigroup(all);
    const auto report = make_cdf_report(multi);
    const auto gt = group_time_distributions(multi, options.buckets);

    membership_builder members;
    for (const auto &e : events)
        members.add(e.user, e.group);
    const auto net = std::move(members).build();

    std::filesystem::create_directories(options.out);
    auto open = [&](const char *name) {
        std::ofstream f(options.out / name);
        if (!f)
            throw std::runtime_error("unable to write " + (options.out / name).string());
        return f;
    };
    {
        auto f = open("cascades.csv");
        write_cascades(f, all);
    }
    const std::pair<const char *, const cdf_table *> tables[] = {{"cdf_shares.csv", &report.shares},
                                                                 {"cdf_groups.csv", &report.groups},
                                                                 {"cdf_lifetime.csv", &report.lifetime},
                                                                 {"cdf_inter_event.csv", &report.inter_event}};
    for (const auto &[name, table] : tables) {
        auto f = open(name);
        write_cdf_table(f, *table);
    }
    {
        auto f = open("group_time.csv");
        write_group_time(f, gt);
    }
    {
        auto f = open("memberships.csv");
        write_memberships(f, net);
    }

    ingest_summary s;
    s.events = events.size();
    s.fingerprinted = static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [](const auto &e) { return e.fingerprint.has_value(); }));
    s.images_hashed = paths.size();
    s.cascades = all.size();
    s.multigroup_cascades = multi.size();
    s.users = net.num_users();
    s.groups = net.num_groups();
    {
        auto f = open("summary.json");
        f << nlohmann::json{{"events", s.events},
                            {"fingerprinted", s.fingerprinted},
                            {"images_hashed", s.images_hashed},
                            {"cascades", s.cascades},
                            {"multigroup_cascades", s.multigroup_cascades},
                            {"users", s.users},
                            {"groups", s.groups}}
                 .dump(2)
          << '\n';
    }
    return s;
}

} // namespace groupsei
