#pragma once

#include "groupsei/netgen.h"
#include "groupsei/netmodel.h"
#include "groupsei/sei.h"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace groupsei {

inline constexpr const char *tool_version = "0.1.0";

struct waiting_ref {
    nlohmann::json doc; /* as written in the spec; "iteration" for none */
    std::string label;  /* waiting_kind column */
};

struct parameter_grid {
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<std::int64_t> phi;
    std::vector<std::optional<std::int64_t>> lifetime; /* null: no lifetime */
    std::vector<waiting_ref> waiting;
};

struct experiment_spec {
    std::string name;
    std::optional<std::filesystem::path> memberships;
    std::optional<nlohmann::json> generator;
    bool lcc = true;
    parameter_grid grid;
    std::int64_t seed_count = 1;
    std::uint64_t base_seed = 1;
    std::int64_t max_iterations = 1'000'000;
    bool write_runs = true;
    std::filesystem::path output;
    std::filesystem::path base_dir; /* relative paths resolve here */
    nlohmann::json document;        /* normalized, hashed into the manifest */
};

/* Throws std::invalid_argument on schema errors (wrong types, unknown keys
 * are ignored). Range and reference checks are left to validate(). */
experiment_spec experiment_spec_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir);
experiment_spec load_experiment_spec(const std::filesystem::path &file);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t spec_hash(const experiment_spec &spec);

struct grid_cell {
    std::size_t index;
    double alpha;
    double beta;
    std::uint32_t phi;
    std::optional<std::int64_t> lifetime;
    std::size_t waiting; /* index into grid.waiting */
};

/* alpha-major, then beta, phi, lifetime, waiting */
std::vector<grid_cell> expand_grid(const experiment_spec &spec);

struct validation_report {
    std::vector<std::string> violations;
    std::size_t cells = 0;
    std::size_t planned_runs = 0;
    double estimated_iterations = 0;

    bool ok() const { return violations.empty(); }
};

validation_report validate(const experiment_spec &spec);
nlohmann::json to_json(const validation_report &r);

struct loaded_network {
    bipartite_network net;
    nlohmann::json metadata;
};

/* reads or generates the bipartite network, restricting it to the
 * projection's largest component when spec.lcc */
loaded_network load_network(const experiment_spec &spec);

struct run_summary {
    std::size_t cell = 0;
    std::uint64_t seed = 0;
    termination reason = termination::stopped;
    std::optional<std::int64_t> time_to_full;
    std::int64_t end_time = 0;
    double s_frac = 0, e_frac = 0, i_frac = 0;
    std::size_t reach = 0;
};

struct experiment_result {
    std::vector<grid_cell> cells;
    std::vector<run_summary> runs; /* cell-major, seed order */
    std::vector<time_series> series; /* parallel to runs */
    std::size_t resumed = 0;         /* runs taken from a previous invocation */
    nlohmann::json manifest;
};

/* Runs every (cell, seed) pair with seeds base_seed + i and writes
 * runs/, summary.csv, aggregate.csv, curves.csv and manifest.json into the
 * output directory. Runs recorded in an existing manifest with the same
 * spec hash are reloaded instead of simulated. Throws on invalid specs or
 * missing inputs before any run starts. */
experiment_result run_experiment(const experiment_spec &spec, unsigned workers = 0);

/* Mean (E+I) and I fractions over runs, evaluated at the union of the
 * recorded times of all runs. */
struct mean_curve {
    std::vector<std::int64_t> t;
    std::vector<double> exposed_or_infected;
    std::vector<double> infected;

    double exposed_or_infected_at(std::int64_t time) const;
};

mean_curve average_curves(std::span<const time_series *const> runs);

/* reads a file written by write_time_series back, given the population */
time_series read_time_series(std::istream &in, std::size_t population);

} // namespace groupsei
