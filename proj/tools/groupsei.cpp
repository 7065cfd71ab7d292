#include "groupsei/cascades.h"
#include "groupsei/experiment.h"
#include "groupsei/graph.h"
#include "groupsei/netgen.h"
#include "groupsei/netmetrics.h"
#include "groupsei/netmodel.h"
#include "groupsei/parallel.h"
#include "groupsei/parse.h"
#include "groupsei/sei.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace groupsei;

namespace {

constexpr int exit_invalid = 1;
constexpr int exit_runtime = 2;

/* thrown for bad user input; maps to exit code 1 */
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json read_json_file(const fs::path &p)
{
    std::ifstream in(p);
    if (!in)
        throw usage_error("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw usage_error(p.string() + ": " + e.what());
    }
}

/* ofstream for a path, or stdout for "-" / empty */
struct output {
    std::ofstream file;
    std::ostream *os = &std::cout;

    explicit output(const std::string &path)
    {
        if (path.empty() || path == "-")
            return;
        if (const auto parent = fs::path(path).parent_path(); !parent.empty())
            fs::create_directories(parent);
        file.open(path);
        if (!file)
            throw std::runtime_error("cannot write " + path);
        os = &file;
    }
    std::ostream &stream() { return *os; }
};

/* "iteration", "uniform:LO:HI", "inter_event:FILE", "group_time:FILE",
 * "fixed:MINUTES", or a JSON object */
json waiting_doc(const std::string &text)
{
    if (text.empty() || text == "iteration")
        return "iteration";
    if (text.front() == '{')
        return json::parse(text);
    const auto parts = [&] {
        std::vector<std::string> v;
        std::stringstream ss(text);
        for (std::string item; std::getline(ss, item, ':');)
            v.push_back(item);
        return v;
    }();
    const auto &kind = parts[0];
    if ((kind == "uniform" || kind == "random_uniform") && parts.size() == 3)
        return {{"kind", "random_uniform"}, {"lo", std::stoll(parts[1])}, {"hi", std::stoll(parts[2])}};
    if (kind == "inter_event" && parts.size() == 2)
        return {{"kind", "inter_event"}, {"ecdf", parts[1]}};
    if (kind == "group_time" && parts.size() == 2)
        return {{"kind", "group_time"}, {"file", parts[1]}};
    if (kind == "fixed" && parts.size() == 2)
        return {{"kind", "fixed"}, {"minutes", std::stod(parts[1])}};
    throw usage_error("unrecognized --waiting `" + text + "`");
}

bipartite_network network_from(const std::string &memberships, const std::string &gen_file, bool lcc)
{
    bipartite_network net;
    if (!memberships.empty() && !gen_file.empty())
        throw usage_error("give either --memberships or --gen");
    if (!memberships.empty()) {
        net = load_memberships_file(memberships);
    } else if (!gen_file.empty()) {
        auto g = generate(gen_spec_from_json(read_json_file(gen_file)));
        auto *b = std::get_if<bipartite_network>(&g.network);
        if (!b)
            throw usage_error("--gen spec must use model bipartite_synth");
        net = std::move(*b);
    } else {
        throw usage_error("one of --memberships or --gen is required");
    }
    if (lcc)
        net = restrict_bipartite_to_component(net, largest_component(project_groups(net)));
    return net;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"groupsei: group networks, SEI simulation and cascade analysis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);
    unsigned workers = 0;
    app.add_option("--workers", workers, "worker threads (default: GROUPSEI_WORKERS or hardware count)");

    /* ingest */
    auto *ingest_cmd = app.add_subcommand("ingest", "hash images, rebuild cascades and write their distributions");
    ingest_options iopt;
    std::string ingest_log, ingest_images, ingest_out;
    bool hamming = false;
    ingest_cmd->add_option("--log", ingest_log, "JSONL message log")->required();
    ingest_cmd->add_option("--images", ingest_images, "directory for relative media paths");
    ingest_cmd->add_option("--out", ingest_out, "output directory")->required();
    ingest_cmd->add_flag("--hamming", hamming, "merge fingerprints within the Hamming threshold");
    ingest_cmd->add_option("--threshold", iopt.grouping.hamming_threshold, "Hamming threshold")->capture_default_str();

    /* project */
    auto *project_cmd = app.add_subcommand("project", "project memberships onto the group graph");
    std::string proj_in, proj_out;
    bool proj_lcc = false;
    project_cmd->add_option("--memberships", proj_in, "user_id,group_id CSV")->required();
    project_cmd->add_option("--out", proj_out, "edge list CSV (default stdout)");
    project_cmd->add_flag("--lcc", proj_lcc, "keep only the largest component");

    /* metrics */
    auto *metrics_cmd = app.add_subcommand("metrics", "structural metrics of a group graph");
    std::string met_graph, met_memb, met_format = "csv";
    bool met_exact = false, met_sampled = false;
    std::size_t met_samples = 1000;
    std::uint64_t met_seed = 1;
    std::optional<double> met_published;
    auto *graph_opt = metrics_cmd->add_option("--graph", met_graph, "edge list CSV");
    auto *memb_opt = metrics_cmd->add_option("--memberships", met_memb, "membership CSV, projected first");
    graph_opt->excludes(memb_opt);
    auto *exact_flag = metrics_cmd->add_flag("--exact", met_exact, "all-sources distances");
    metrics_cmd->add_flag("--sampled", met_sampled, "sampled-source distances")->excludes(exact_flag);
    metrics_cmd->add_option("--samples", met_samples, "sources for --sampled")->capture_default_str();
    metrics_cmd->add_option("--seed", met_seed, "seed for source sampling")->capture_default_str();
    metrics_cmd->add_option("--format", met_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    metrics_cmd->add_option("--published-mean-degree", met_published, "classify a published mean degree");

    /* gen */
    auto *gen_cmd = app.add_subcommand("gen", "generate a synthetic network");
    std::string gen_file, gen_out, gen_meta;
    gen_cmd->add_option("--gen", gen_file, "generator spec JSON")->required();
    gen_cmd->add_option("--out", gen_out, "edge list or membership CSV (default stdout)");
    gen_cmd->add_option("--metadata", gen_meta, "write derived parameters as JSON");

    /* simulate */
    auto *sim_cmd = app.add_subcommand("simulate", "one SEI run");
    std::string sim_memb, sim_gen, sim_params, sim_out, sim_waiting;
    std::optional<double> sim_alpha, sim_beta;
    std::optional<std::uint32_t> sim_phi;
    std::optional<std::int64_t> sim_lifetime, sim_max;
    std::uint64_t sim_seed = 1;
    bool sim_no_lcc = false;
    sim_cmd->add_option("--memberships", sim_memb, "membership CSV");
    sim_cmd->add_option("--gen", sim_gen, "bipartite generator spec JSON");
    sim_cmd->add_flag("--no-lcc", sim_no_lcc, "run on the whole network");
    sim_cmd->add_option("--params", sim_params, "SEI parameters JSON");
    sim_cmd->add_option("--alpha", sim_alpha, "virality");
    sim_cmd->add_option("--beta", sim_beta, "exposition");
    sim_cmd->add_option("--phi", sim_phi, "forward limit");
    sim_cmd->add_option("--lifetime", sim_lifetime, "iterations before the infection is extinguished");
    sim_cmd->add_option("--waiting", sim_waiting,
                        "iteration | uniform:LO:HI | inter_event:FILE | group_time:FILE | fixed:MIN");
    sim_cmd->add_option("--max-iterations", sim_max, "safety cap");
    sim_cmd->add_option("--seed", sim_seed, "run seed")->capture_default_str();
    sim_cmd->add_option("--out", sim_out, "time series CSV (default stdout)");

    /* sweep */
    auto *sweep_cmd = app.add_subcommand("sweep", "run an experiment spec");
    std::string sweep_spec, sweep_out;
    sweep_cmd->add_option("--spec", sweep_spec, "experiment spec JSON")->required();
    sweep_cmd->add_option("--out", sweep_out, "output directory (overrides the spec)");

    /* validate */
    auto *val_cmd = app.add_subcommand("validate", "check an experiment spec and estimate its cost");
    std::string val_spec;
    val_cmd->add_option("--spec", val_spec, "experiment spec JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_invalid;
    }
    if (workers == 0)
        workers = default_workers();

    try {
        if (*ingest_cmd) {
            iopt.log = ingest_log;
            if (!ingest_images.empty())
                iopt.images = ingest_images;
            iopt.out = ingest_out;
            iopt.grouping.hamming_clustering = hamming;
            iopt.workers = workers;
            const auto s = ingest(iopt);
            std::cerr << "events " << s.events << ", images hashed " << s.images_hashed << ", cascades " << s.cascades
                      << " (" << s.multigroup_cascades << " in 2+ groups)\n";
        } else if (*project_cmd) {
            auto g = project_groups(load_memberships_file(proj_in));
            if (proj_lcc)
                g = largest_component(g);
            output out(proj_out);
            write_edge_list(out.stream(), g);
        } else if (*metrics_cmd) {
            graph g;
            if (!met_graph.empty())
                g = read_edge_list_file(met_graph);
            else if (!met_memb.empty())
                g = project_groups(load_memberships_file(met_memb));
            else
                throw usage_error("one of --graph or --memberships is required");
            const auto mode = met_exact ? distance_mode::exact : met_sampled ? distance_mode::sampled
                                                                             : distance_mode::automatic;
            const auto r = full_report(g, mode, workers, met_samples, met_seed);
            if (met_format == "json") {
                auto j = to_json(r);
                if (met_published)
                    j["mean_degree_convention_check"] =
                        to_string(classify_mean_degree(r.n_nodes, r.n_edges, *met_published));
                std::cout << j.dump(2) << '\n';
            } else {
                std::cout << csv_header() << '\n' << to_csv_row(r) << '\n';
                if (met_published)
                    std::cerr << "published mean degree " << *met_published << ": "
                              << to_string(classify_mean_degree(r.n_nodes, r.n_edges, *met_published)) << '\n';
            }
        } else if (*gen_cmd) {
            gen_spec spec;
            try {
                spec = gen_spec_from_json(read_json_file(gen_file));
            } catch (const json::exception &e) {
                throw usage_error(gen_file + ": " + e.what());
            }
            auto generated = generate(spec);
            output out(gen_out);
            if (auto *g = std::get_if<graph>(&generated.network))
                write_edge_list(out.stream(), *g);
            else
                write_memberships(out.stream(), std::get<bipartite_network>(generated.network));
            if (!gen_meta.empty()) {
                output meta(gen_meta);
                meta.stream() << generated.metadata.dump(2) << '\n';
            }
        } else if (*sim_cmd) {
            const auto net = network_from(sim_memb, sim_gen, !sim_no_lcc);
            json pj = sim_params.empty() ? json::object() : read_json_file(sim_params);
            const fs::path base = sim_params.empty() ? fs::current_path() : fs::path(sim_params).parent_path();
            if (sim_alpha)
                pj["alpha"] = *sim_alpha;
            if (sim_beta)
                pj["beta"] = *sim_beta;
            if (sim_phi)
                pj["phi"] = *sim_phi;
            if (sim_lifetime)
                pj["lifetime"] = *sim_lifetime;
            if (sim_max)
                pj["max_iterations"] = *sim_max;
            if (!sim_waiting.empty())
                pj["waiting"] = waiting_doc(sim_waiting);
            const auto params = sei_params_from_json(pj, sim_waiting.empty() ? base : fs::current_path());
            const auto r = run(net, params, sim_seed);
            output out(sim_out);
            write_time_series(out.stream(), r.series);
            std::cerr << "termination " << to_string(r.reason) << ", end " << r.end_time << ", i_frac "
                      << r.final_infected() << ", reach " << r.reach << '/' << net.num_groups();
            if (r.time_to_full)
                std::cerr << ", full infection at " << *r.time_to_full;
            std::cerr << '\n';
        } else if (*sweep_cmd) {
            auto spec = load_experiment_spec(sweep_spec);
            if (!sweep_out.empty())
                spec.output = sweep_out;
            const auto report = validate(spec);
            if (!report.ok()) {
                for (const auto &v : report.violations)
                    std::cerr << "violation: " << v << '\n';
                return exit_invalid;
            }
            const auto res = run_experiment(spec, workers);
            std::size_t censored = 0;
            for (const auto &r : res.runs)
                censored += r.time_to_full ? 0 : 1;
            std::cerr << spec.name << ": " << res.runs.size() << " runs (" << res.resumed << " resumed, " << censored
                      << " without full infection) -> " << spec.output.string() << '\n';
        } else if (*val_cmd) {
            const auto report = validate(load_experiment_spec(val_spec));
            std::cout << to_json(report).dump(2) << '\n';
            return report.ok() ? 0 : exit_invalid;
        }
    } catch (const usage_error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invalid;
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invalid;
    } catch (const parse_error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invalid;
    } catch (const json::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invalid;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return 0;
}
