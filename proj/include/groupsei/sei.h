#pragma once

#include "groupsei/ecdf.h"
#include "groupsei/netmodel.h"
#include "groupsei/rng.h"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

namespace groupsei {

/* Delay between a successful forward attempt and its delivery, in minutes. */
struct waiting_model {
    enum class kind { random_uniform, inter_event, group_time };

    kind type = kind::random_uniform;
    std::int64_t lo = 1;
    std::int64_t hi = 1440;
    ecdf inter_event;
    /* (lowest reach count served, distribution), ascending */
    std::vector<std::pair<std::uint32_t, ecdf>> group_time;

    static waiting_model uniform(std::int64_t lo, std::int64_t hi);
    static waiting_model from_inter_event(ecdf e);
    static waiting_model from_group_time(std::vector<std::pair<std::uint32_t, ecdf>> buckets);

    /* throws std::invalid_argument */
    void validate() const;

    /* Distribution used for the next newly reached group, i.e. reach count
     * max(2, reach + 1); a missing bucket falls back to the nearest lower
     * one, and counts below the first bucket use the first. */
    const ecdf &bucket_for(std::size_t reach) const;

    std::int64_t sample(counter_rng &rng, std::size_t reach) const;

    const char *kind_name() const;
};

struct sei_params {
    double alpha = 0.1;
    double beta = 0.1;
    std::uint32_t phi = 5;
    std::optional<std::int64_t> lifetime;
    /* absent: iteration time, deliveries are immediate */
    std::optional<waiting_model> waiting;
    std::int64_t max_iterations = 1'000'000;

    void validate() const;
};

enum class compartment : std::uint8_t { susceptible, exposed, infected };

enum class termination { all_infected, stopped, lifetime, max_iterations };
const char *to_string(termination t);

struct forward_record {
    user_t user;
    std::int64_t attempt;  /* iteration of the successful forward attempt */
    std::int64_t delivery; /* iteration the posts land */
    std::uint32_t groups;  /* groups posted to */
};

/* Full epidemic state for one run. Per-user randomness comes from
 * independent counter-based streams keyed by (seed, purpose, user), so the
 * transitions a user takes do not depend on processing order. */
struct sei_state {
    struct event {
        std::int64_t time;
        std::uint8_t phase; /* 1: E->I, 2: forward attempt, 3: delivery */
        user_t user;
        auto operator<=>(const event &) const = default;
    };

    std::uint64_t seed = 0;
    std::int64_t clock = 0;
    std::vector<compartment> state;
    std::vector<std::uint8_t> forwarded;
    std::vector<std::int64_t> pending_delivery; /* -1 when none */
    std::vector<std::uint8_t> group_posted;
    std::vector<std::uint32_t> posts_by_user; /* audit of posted groups */
    std::vector<forward_record> forwards;
    std::size_t reach = 0;
    std::size_t susceptible = 0, exposed = 0, infected = 0;
    std::priority_queue<event, std::vector<event>, std::greater<>> events;

    std::size_t population() const { return state.size(); }
    bool has_pending() const { return !events.empty(); }
    std::optional<std::int64_t> next_event_time() const;
};

/* One uniformly chosen user starts infected and has not forwarded yet.
 * Throws std::invalid_argument on an empty network. */
sei_state seed_infection(const bipartite_network &net, const sei_params &params, std::uint64_t seed);

/* Advances the clock by one iteration: (1) scheduled E->I transitions,
 * (2) scheduled forward attempts select min(phi, groups) of the user's
 * groups uniformly without replacement, (3) deliveries expose every
 * susceptible member of each posted group. A user becoming infected in
 * phase 1 attempts its forward from the next iteration on. */
void step(sei_state &s, const bipartite_network &net, const sei_params &params);

/* the groups user u posts to for this run's seed */
std::vector<group_t> forward_selection(const sei_state &s, const bipartite_network &net, const sei_params &params,
                                       user_t u);

struct series_row {
    std::int64_t t;
    std::uint32_t s, e, i;
    std::size_t reach;
};

/* Step function of compartment counts. Rows are recorded at t = 0, at every
 * iteration where a count or the reach changed, and at termination. */
class time_series {
public:
    explicit time_series(std::size_t population = 0) : population_(population) {}

    void push(const series_row &r) { rows_.push_back(r); }
    std::span<const series_row> rows() const { return rows_; }
    std::size_t population() const { return population_; }
    /* state in effect at iteration t (last row at or before t) */
    const series_row &at(std::int64_t t) const;
    double exposed_or_infected_fraction(std::int64_t t) const;
    double infected_fraction(std::int64_t t) const;
    /* first iteration with (E+I)/N >= fraction among recorded rows */
    std::optional<std::int64_t> first_time_exposed(double fraction) const;

private:
    std::size_t population_;
    std::vector<series_row> rows_;
};

/* `t,s_frac,e_frac,i_frac,reach` */
void write_time_series(std::ostream &out, const time_series &ts);

struct run_result {
    time_series series;
    termination reason = termination::stopped;
    std::int64_t end_time = 0;
    std::optional<std::int64_t> time_to_full;
    std::size_t reach = 0;
    std::size_t unreached_groups = 0;
    std::vector<std::uint32_t> posts_by_user;
    std::vector<forward_record> forwards;

    double final_infected() const;
    double final_exposed_or_infected() const;
};

/* Runs until all users are infected, dissemination stops (no exposed user
 * and nothing scheduled), the lifetime elapses or the safety cap is hit.
 * Idle iterations are skipped; the result equals stepping one by one. */
run_result run(const bipartite_network &net, const sei_params &params, std::uint64_t seed);

/* requires params.waiting */
run_result run_realtime(const bipartite_network &net, const sei_params &params, std::uint64_t seed);

struct time_summary {
    std::vector<std::optional<std::int64_t>> times; /* per seed, empty when censored */
    std::size_t censored = 0;
    /* order statistics with censored runs treated as +infinity */
    double median = 0, q1 = 0, q3 = 0;
};

/* Linear-interpolation quantile of a sorted sample; +inf propagates. */
double quantile(std::span<const double> sorted, double q);

time_summary time_to_full_infection(const bipartite_network &net, sei_params params,
                                    std::span<const std::uint64_t> seeds, unsigned workers = 1);

struct lifetime_point {
    std::int64_t lifetime;
    double mean_infected;
    double mean_exposed_or_infected;
};

std::vector<lifetime_point> run_with_lifetime(const bipartite_network &net, sei_params params,
                                              std::span<const std::int64_t> lifetimes,
                                              std::span<const std::uint64_t> seeds, unsigned workers = 1);

/* Waiting model document: "iteration" (null result) or an object with
 * `kind` random_uniform {lo, hi}, inter_event {ecdf: path} or group_time
 * {file: path}. Relative paths resolve against base_dir. */
std::optional<waiting_model> waiting_model_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir);
sei_params sei_params_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir);

} // namespace groupsei
