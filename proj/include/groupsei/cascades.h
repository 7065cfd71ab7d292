#pragma once

#include "groupsei/ecdf.h"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace groupsei {

struct message_event {
    std::string country;
    std::string group;
    std::string user;
    std::int64_t ts = 0; /* epoch seconds */
    std::optional<std::uint64_t> fingerprint;
    std::string media_path; /* set when media names a file still to be hashed */
};

/* JSON lines with fields `country, group, user, ts, media`; media is a file
 * path or `h:` followed by 16 hex digits, and may be absent or null. A
 * `media_fingerprint` field, when present, overrides media.
 * Throws parse_error. */
std::vector<message_event> read_message_log(std::istream &in);

struct cascade_stats {
    std::uint64_t fingerprint = 0;
    std::size_t total_shares = 0;
    std::size_t distinct_groups = 0;
    std::size_t distinct_users = 0;
    std::int64_t first_ts = 0, last_ts = 0;
    std::int64_t lifetime = 0;                    /* minutes */
    std::vector<std::int64_t> inter_event;        /* minutes, time ordered */
    std::vector<std::int64_t> group_reach_times;  /* [k-2]: minutes until the k-th distinct group */
};

/* floor(seconds / 60) */
std::int64_t to_minutes(std::int64_t seconds);

struct grouping_options {
    bool hamming_clustering = false;
    int hamming_threshold = 10;
};

/* One cascade per fingerprint (or per Hamming cluster, represented by its
 * smallest fingerprint), ordered by fingerprint. Events without a
 * fingerprint are ignored. Independent of event order. */
std::vector<cascade_stats> group_by_fingerprint(std::span<const message_event> events,
                                                const grouping_options &options = {});

std::vector<cascade_stats> filter_multigroup(std::span<const cascade_stats> stats);

/* {2, ..., 10, 11, 21, 51, 101}: lower bounds of the reach-count buckets */
std::vector<std::uint32_t> default_group_time_buckets();

/* Bucket b pools, over all cascades, the minutes between reaching the
 * (k-1)-th and the k-th distinct group for every k in [b, next bound).
 * Empty buckets are omitted. */
std::vector<std::pair<std::uint32_t, ecdf>> group_time_distributions(std::span<const cascade_stats> stats,
                                                                     std::span<const std::uint32_t> buckets);

using cdf_table = std::vector<std::pair<double, double>>;

cdf_table cdf_of(std::vector<double> values);

struct cdf_report {
    cdf_table shares, groups, lifetime, inter_event;
};

cdf_report make_cdf_report(std::span<const cascade_stats> stats);

/* `value,cum_prob` */
void write_cdf_table(std::ostream &out, const cdf_table &t);
void write_cascades(std::ostream &out, std::span<const cascade_stats> stats);

struct ingest_options {
    std::filesystem::path log;
    std::optional<std::filesystem::path> images; /* base for relative media paths */
    std::filesystem::path out;
    grouping_options grouping;
    std::vector<std::uint32_t> buckets = default_group_time_buckets();
    unsigned workers = 1;
};

struct ingest_summary {
    std::size_t events = 0;
    std::size_t fingerprinted = 0;
    std::size_t images_hashed = 0;
    std::size_t cascades = 0;
    std::size_t multigroup_cascades = 0;
    std::size_t users = 0;
    std::size_t groups = 0;
};

/* Hashes referenced images, builds cascades and writes cascades.csv,
 * cdf_{shares,groups,lifetime,inter_event}.csv, group_time.csv,
 * memberships.csv and summary.json under options.out. CDFs and group
 * times use only cascades seen in at least two groups. */
ingest_summary ingest(const ingest_options &options);

} // namespace groupsei
