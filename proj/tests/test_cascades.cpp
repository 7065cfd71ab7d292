#include "groupsei/cascades.h"
#include "groupsei/ecdf.h"
#include "groupsei/parse.h"
#include "groupsei/phash.h"
#include "cascade_oracle.h"
#include "image_corpus.h"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

using namespace groupsei;

namespace {

message_event share(std::uint64_t fp, std::int64_t ts, const std::string &group, const std::string &user = "u")
{
    message_event e;
    e.group = group;
    e.user = user;
    e.ts = ts;
    e.fingerprint = fp;
    return e;
}

/* reach times in minutes from the first share at 0 */
cascade_stats reaching(std::vector<std::int64_t> minutes)
{
    std::vector<message_event> ev;
    for (std::size_t i = 0; i < minutes.size(); ++i)
        ev.push_back(share(1, 1000 * 60 + minutes[i] * 60, "g" + std::to_string(i)));
    return group_by_fingerprint(ev).front();
}

} // namespace

TEST_CASE("two shares 6000 s apart: lifetime 100 minutes")
{
    const std::vector<message_event> ev{share(7, 60, "A"), share(7, 6060, "B")};
    const auto c = group_by_fingerprint(ev);
    REQUIRE(c.size() == 1);
    CHECK(c[0].lifetime == 100);
    CHECK(c[0].inter_event == std::vector<std::int64_t>{100});
    CHECK(c[0].total_shares == 2);
}

TEST_CASE("groups A, A, B give two distinct groups")
{
    const std::vector<message_event> ev{share(3, 100, "A", "x"), share(3, 200, "A", "y"), share(3, 300, "B", "x")};
    const auto c = group_by_fingerprint(ev);
    REQUIRE(c.size() == 1);
    CHECK(c[0].distinct_groups == 2);
    CHECK(c[0].distinct_users == 2);
    CHECK(c[0].total_shares == 3);
}

TEST_CASE("multigroup filter")
{
    const std::vector<message_event> ev{share(1, 100, "A"), share(1, 200, "A"), share(2, 100, "A"), share(2, 150, "B")};
    const auto all = group_by_fingerprint(ev);
    const auto multi = filter_multigroup(all);
    REQUIRE(multi.size() == 1);
    CHECK(multi[0].fingerprint == 2);
}

TEST_CASE("untagged events are ignored")
{
    auto e = share(5, 100, "A");
    e.fingerprint.reset();
    const std::vector<message_event> ev{e, share(6, 100, "B")};
    CHECK(group_by_fingerprint(ev).size() == 1);
}

TEST_CASE("cascade stats equal the sort-and-scan oracle")
{
    const auto log = oracle::random_log(1000, 50, 11);
    const auto got = group_by_fingerprint(log);
    const auto expected = oracle::sort_and_scan(log);
    REQUIRE(got.size() == expected.size());
    for (const auto &c : got) {
        REQUIRE(expected.count(c.fingerprint));
        CHECK(oracle::matches(c, expected.at(c.fingerprint)));
        CHECK(c.lifetime == std::accumulate(c.inter_event.begin(), c.inter_event.end(), std::int64_t{0}));
        CHECK(c.inter_event.size() == c.total_shares - 1);
        CHECK(c.group_reach_times.size() == c.distinct_groups - 1);
        CHECK(std::is_sorted(c.group_reach_times.begin(), c.group_reach_times.end()));
        for (auto v : c.inter_event)
            CHECK(v >= 0);
    }
}

TEST_CASE("cascades do not depend on event order")
{
    auto log = oracle::random_log(2000, 80, 12);
    std::ostringstream a, b;
    write_cascades(a, group_by_fingerprint(log));
    const auto first = group_by_fingerprint(log);
    std::mt19937_64 gen(5);
    std::shuffle(log.begin(), log.end(), gen);
    const auto second = group_by_fingerprint(log);
    write_cascades(b, second);
    CHECK(a.str() == b.str());
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].inter_event == second[i].inter_event);
        CHECK(first[i].group_reach_times == second[i].group_reach_times);
    }
}

TEST_CASE("hamming clustering merges near fingerprints")
{
    const std::vector<message_event> ev{share(0b0000, 60, "A"), share(0b0111, 120, "B"), share(~std::uint64_t{0}, 60, "C")};
    CHECK(group_by_fingerprint(ev).size() == 3);
    grouping_options opt;
    opt.hamming_clustering = true;
    const auto merged = group_by_fingerprint(ev, opt);
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].fingerprint == 0);
    CHECK(merged[0].total_shares == 2);
    opt.hamming_threshold = 2;
    CHECK(group_by_fingerprint(ev, opt).size() == 3);
}

TEST_CASE("minutes floor toward negative infinity")
{
    CHECK(to_minutes(0) == 0);
    CHECK(to_minutes(59) == 0);
    CHECK(to_minutes(60) == 1);
    CHECK(to_minutes(-1) == -1);
}

TEST_CASE("ecdf sampling")
{
    const auto e = ecdf::from_samples({1, 2, 3, 4});
    CHECK(e.sample(0.6) == 3);
    CHECK(e.sample(0.0) == 1);
    CHECK(e.sample(0.25) == 2);
    CHECK(e.sample(0.999) == 4);
    CHECK(e.cdf(2.5) == 0.5);
    CHECK(e.cdf(0) == 0);
    double prev = -1;
    for (int i = 0; i < 1000; ++i) {
        const double v = e.sample(i / 1000.0);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK_THROWS_AS(ecdf::from_samples({}), std::invalid_argument);
    CHECK_THROWS_AS(ecdf::from_table({1, 1}, {0.5, 1}), std::invalid_argument);
    CHECK_THROWS_AS(ecdf::from_table({1, 2}, {0.5, 0.9}), std::invalid_argument);
}

TEST_CASE("inverse transform draws match the source")
{
    std::vector<double> src(100);
    std::iota(src.begin(), src.end(), 1.0);
    const auto e = ecdf::from_samples(src);
    CHECK(e.mean() == doctest::Approx(50.5));
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> draws(100000);
    double sum = 0;
    for (auto &d : draws) {
        d = e.sample(u(gen));
        sum += d;
    }
    CHECK(std::abs(sum / 100000 - 50.5) < 1);
    const auto back = ecdf::from_samples(draws);
    double ks = 0;
    for (double x : src)
        ks = std::max(ks, std::abs(back.cdf(x) - e.cdf(x)));
    CHECK(ks < 0.02);
}

TEST_CASE("ecdf csv round trip")
{
    const auto e = ecdf::from_samples({3, 1, 1, 10});
    std::stringstream ss;
    write_ecdf(ss, e);
    const auto back = read_ecdf(ss);
    CHECK(std::vector<double>(back.values().begin(), back.values().end()) == std::vector<double>{1, 3, 10});
    CHECK(back.cum_probs()[0] == 0.5);
    std::istringstream bad("value,cum_prob\n1,0.5\nx,1\n");
    CHECK_THROWS_AS(read_ecdf(bad), parse_error);

    std::vector<std::pair<std::uint32_t, ecdf>> buckets{{2, ecdf::from_samples({5, 7})}, {4, e}};
    std::stringstream gs;
    write_group_time(gs, buckets);
    const auto gb = read_group_time(gs);
    REQUIRE(gb.size() == 2);
    CHECK(gb[1].first == 4);
    CHECK(gb[0].second.values()[1] == 7);
}

TEST_CASE("group time buckets")
{
    const auto buckets = default_group_time_buckets();
    SUBCASE("reach at 0, 10, 30")
    {
        const std::vector<cascade_stats> s{reaching({0, 10, 30})};
        const auto gt = group_time_distributions(s, buckets);
        REQUIRE(gt.size() == 2);
        CHECK(gt[0].first == 2);
        CHECK(gt[0].second.values()[0] == 10);
        CHECK(gt[1].first == 3);
        CHECK(gt[1].second.values()[0] == 20);
    }
    SUBCASE("two cascades pool their increments")
    {
        const std::vector<cascade_stats> s{reaching({0, 10}), reaching({0, 20})};
        const auto gt = group_time_distributions(s, buckets);
        REQUIRE(gt.size() == 1);
        CHECK(gt[0].second.size() == 2);
        CHECK(gt[0].second.values()[0] == 10);
        CHECK(gt[0].second.values()[1] == 20);
    }
    SUBCASE("pooled buckets equal a per-cascade recomputation")
    {
        const auto stats = filter_multigroup(group_by_fingerprint(oracle::random_log(20000, 40, 3)));
        const auto gt = group_time_distributions(stats, buckets);
        std::map<std::uint32_t, std::vector<double>> expected;
        for (const auto &c : stats) {
            std::vector<std::int64_t> times{0};
            times.insert(times.end(), c.group_reach_times.begin(), c.group_reach_times.end());
            for (std::size_t k = 2; k <= times.size(); ++k) {
                std::uint32_t b = 0;
                for (auto lo : buckets)
                    if (lo <= k)
                        b = lo;
                expected[b].push_back(static_cast<double>(times[k - 1] - times[k - 2]));
            }
        }
        REQUIRE(gt.size() == expected.size());
        for (const auto &[b, e] : gt) {
            const auto want = ecdf::from_samples(expected.at(b));
            CHECK(std::vector<double>(e.values().begin(), e.values().end()) ==
                  std::vector<double>(want.values().begin(), want.values().end()));
            CHECK(std::vector<double>(e.cum_probs().begin(), e.cum_probs().end()) ==
                  std::vector<double>(want.cum_probs().begin(), want.cum_probs().end()));
        }
        CHECK(gt.back().first == 101);
    }
    SUBCASE("unsorted buckets are rejected")
    {
        const std::vector<std::uint32_t> bad{2, 2, 5};
        CHECK_THROWS_AS(group_time_distributions({}, bad), std::invalid_argument);
    }
}

TEST_CASE("cdf equals rank over n")
{
    std::mt19937_64 gen(9);
    std::uniform_int_distribution<int> pick(0, 40);
    std::vector<double> v(500);
    for (auto &x : v)
        x = pick(gen);
    const auto t = cdf_of(v);
    for (const auto &[value, p] : t) {
        const auto rank = std::count_if(v.begin(), v.end(), [&](double x) { return x <= value; });
        CHECK(p == doctest::Approx(static_cast<double>(rank) / 500.0).epsilon(1e-15));
    }
    const std::vector<cascade_stats> one{reaching({0, 5})};
    const auto r = make_cdf_report(one);
    CHECK(r.shares.size() == 1);
    CHECK(r.shares[0].second == 1.0);
    CHECK(r.lifetime[0].first == 5);
}

TEST_CASE("message log parsing")
{
    std::istringstream in(R"({"country":"BR","group":"g1","user":"u1","ts":1000,"media":"h:00000000000000ff"}

{"country":"BR","group":"g1","user":"u2","ts":1060.7,"media":null}
{"group":"g2","user":"u2","ts":1100,"media":"img/a.png"}
{"group":"g2","user":"u3","ts":1200,"media":"img/a.png","media_fingerprint":"0000000000000010"}
)");
    const auto ev = read_message_log(in);
    REQUIRE(ev.size() == 4);
    CHECK(ev[0].fingerprint == 255u);
    CHECK_FALSE(ev[1].fingerprint.has_value());
    CHECK(ev[1].ts == 1060);
    CHECK(ev[2].media_path == "img/a.png");
    CHECK(ev[3].fingerprint == 16u);
    CHECK(ev[3].media_path.empty());

    for (const auto *bad : {"{\"group\":\"g\",\"user\":\"u\",\"ts\":5}\n{\"group\":\"g\"}\n",
                            "{\"group\":\"g\",\"user\":\"u\",\"ts\":5}\nnot json\n",
                            "{\"group\":\"g\",\"user\":\"u\",\"ts\":5}\n{\"group\":\"g\",\"user\":\"u\",\"ts\":5,\"media\":\"h:xyz\"}\n"}) {
        std::istringstream b(bad);
        try {
            read_message_log(b);
            FAIL("expected parse_error");
        } catch (const parse_error &e) {
            CHECK(e.line() == 2);
        }
    }
}

TEST_CASE("ingest end to end")
{
    const auto dir = std::filesystem::temp_directory_path() / "groupsei_ingest_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir / "img");
    const auto imgs = corpus::structured_images();
    auto save_pgm = [&](const std::string &name, const gray_image &img) {
        std::ofstream f(dir / "img" / name, std::ios::binary);
        f << "P5 " << img.width << ' ' << img.height << " 255\n";
        for (double p : img.pixels)
            f.put(static_cast<char>(std::lround(p)));
    };
    save_pgm("a.pgm", imgs[0]);
    save_pgm("a_copy.pgm", imgs[0]);
    save_pgm("b.pgm", imgs[5]);
    {
        std::ofstream log(dir / "log.jsonl");
        const auto line = [&](const std::string &g, const std::string &u, std::int64_t ts, const std::string &m) {
            log << nlohmann::json{{"country", "IN"}, {"group", g}, {"user", u}, {"ts", ts}, {"media", m}}.dump()
                << '\n';
        };
        line("g1", "u1", 600, "img/a.pgm");
        line("g2", "u2", 1200, "img/a_copy.pgm");
        line("g3", "u1", 4200, "img/a.pgm");
        line("g1", "u3", 600, "img/b.pgm");
        line("g1", "u4", 900, "h:0000000000000001");
    }
    ingest_options opt;
    opt.log = dir / "log.jsonl";
    opt.out = dir / "out";
    const auto s = ingest(opt);
    CHECK(s.events == 5);
    CHECK(s.fingerprinted == 5);
    CHECK(s.images_hashed == 3);
    CHECK(s.cascades == 3);
    CHECK(s.multigroup_cascades == 1);
    CHECK(s.users == 4);
    CHECK(s.groups == 3);
    for (const auto *f : {"cascades.csv", "cdf_shares.csv", "cdf_groups.csv", "cdf_lifetime.csv",
                          "cdf_inter_event.csv", "group_time.csv", "memberships.csv", "summary.json"})
        CHECK(std::filesystem::exists(opt.out / f));
    std::ifstream lt(opt.out / "cdf_lifetime.csv");
    std::stringstream text;
    text << lt.rdbuf();
    CHECK(text.str() == "value,cum_prob\n60,1\n");
    std::ifstream gt(opt.out / "group_time.csv");
    const auto buckets = read_group_time(gt);
    REQUIRE(buckets.size() == 2);
    CHECK(buckets[0].second.values()[0] == 10);
    CHECK(buckets[1].second.values()[0] == 50);

    std::ofstream(dir / "bad.jsonl") << "{\"group\":\"g\",\"user\":\"u\",\"ts\":5,\"media\":\"img/missing.png\"}\n";
    opt.log = dir / "bad.jsonl";
    CHECK_THROWS_AS(ingest(opt), image_error);
}
