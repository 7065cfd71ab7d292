#include "groupsei/experiment.h"

#include "groupsei/parallel.h"
#include "groupsei/parse.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

namespace groupsei {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
std::vector<T> as_list(const json &j)
{
    std::vector<T> out;
    if (j.is_array()) {
        for (const auto &v : j)
            out.push_back(v.get<T>());
    } else if (!j.is_null()) {
        out.push_back(j.get<T>());
    }
    return out;
}

fs::path resolve(const fs::path &base, const fs::path &p)
{
    return p.is_absolute() ? p : base / p;
}

std::string waiting_label(const json &doc)
{
    if (doc.is_null() || (doc.is_string() && doc.get<std::string>() == "iteration"))
        return "iteration";
    if (doc.is_object()) {
        if (doc.contains("label"))
            return doc.at("label").get<std::string>();
        if (doc.contains("kind"))
            return doc.at("kind").get<std::string>();
    }
    return "invalid";
}

std::string format_double(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(12) << v;
    return os.str();
}

std::string hex64(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string run_file_name(std::size_t cell, std::uint64_t seed)
{
    std::ostringstream os;
    os << "cell" << std::setw(3) << std::setfill('0') << cell << "_seed" << seed << ".csv";
    return os.str();
}

void write_file_atomic(const fs::path &path, const std::string &content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out)
            throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

json cell_json(const grid_cell &c, const experiment_spec &spec)
{
    return {{"index", c.index},
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"phi", c.phi},
            {"lifetime", c.lifetime ? json(*c.lifetime) : json(nullptr)},
            {"waiting", spec.grid.waiting[c.waiting].label}};
}

json run_json(const run_summary &r)
{
    return {{"cell", r.cell},
            {"seed", r.seed},
            {"termination", to_string(r.reason)},
            {"time_to_full", r.time_to_full ? json(*r.time_to_full) : json(nullptr)},
            {"end_time", r.end_time},
            {"reach", r.reach}};
}

std::optional<termination> termination_from_string(const std::string &s)
{
    for (auto t : {termination::all_infected, termination::stopped, termination::lifetime, termination::max_iterations})
        if (s == to_string(t))
            return t;
    return std::nullopt;
}

std::string cell_prefix(const grid_cell &c, const experiment_spec &spec)
{
    return format_double(c.alpha) + ',' + format_double(c.beta) + ',' + std::to_string(c.phi) + ',' +
           (c.lifetime ? std::to_string(*c.lifetime) : std::string()) + ',' + spec.grid.waiting[c.waiting].label;
}

double estimate_iterations(const grid_cell &c, const experiment_spec &spec, std::size_t groups)
{
    const double cap = static_cast<double>(c.lifetime ? std::min(*c.lifetime, spec.max_iterations) : spec.max_iterations);
    if (c.alpha <= 0 || c.beta <= 0)
        return cap;
    double hop = 1.0 / c.alpha + 1.0 / c.beta;
    const auto &doc = spec.grid.waiting[c.waiting].doc;
    if (doc.is_object() && doc.value("kind", "") == "random_uniform")
        hop += 0.5 * (doc.value("lo", 1.0) + doc.value("hi", 1440.0));
    const double depth = std::log2(static_cast<double>(std::max<std::size_t>(groups, 1)) + 1.0) + 1.0;
    return std::min(cap, hop * depth);
}

} // namespace

experiment_spec experiment_spec_from_json(const json &j, const fs::path &base_dir)
{
    if (!j.is_object())
        throw std::invalid_argument("experiment spec must be a JSON object");
    experiment_spec s;
    s.base_dir = base_dir;
    s.document = j;
    s.name = j.value("name", std::string("experiment"));

    if (j.contains("network")) {
        const auto &n = j.at("network");
        if (n.contains("memberships"))
            s.memberships = resolve(base_dir, n.at("memberships").get<std::string>());
        if (n.contains("generator")) {
            const auto &g = n.at("generator");
            if (g.is_string()) {
                const auto path = resolve(base_dir, g.get<std::string>());
                std::ifstream in(path);
                if (!in)
                    throw std::invalid_argument("cannot open generator spec " + path.string());
                s.generator = json::parse(in);
                s.document["network"]["generator"] = *s.generator;
            } else {
                s.generator = g;
            }
        }
    }
    s.lcc = j.value("lcc", true);

    if (j.contains("grid")) {
        const auto &g = j.at("grid");
        if (g.contains("alpha"))
            s.grid.alpha = as_list<double>(g.at("alpha"));
        if (g.contains("beta"))
            s.grid.beta = as_list<double>(g.at("beta"));
        if (g.contains("phi"))
            s.grid.phi = as_list<std::int64_t>(g.at("phi"));
        if (g.contains("lifetime")) {
            const auto &l = g.at("lifetime");
            if (l.is_array()) {
                for (const auto &v : l)
                    s.grid.lifetime.push_back(v.is_null() ? std::nullopt : std::optional(v.get<std::int64_t>()));
            } else {
                s.grid.lifetime.push_back(l.is_null() ? std::nullopt : std::optional(l.get<std::int64_t>()));
            }
        } else {
            s.grid.lifetime.push_back(std::nullopt);
        }
        if (g.contains("waiting")) {
            const auto &w = g.at("waiting");
            const json list = w.is_array() ? w : json::array({w});
            for (const auto &doc : list)
                s.grid.waiting.push_back({doc, waiting_label(doc)});
        } else {
            s.grid.waiting.push_back({"iteration", "iteration"});
        }
    }

    if (j.contains("seeds")) {
        const auto &sd = j.at("seeds");
        if (sd.is_number()) {
            s.seed_count = sd.get<std::int64_t>();
        } else {
            s.seed_count = sd.value("count", std::int64_t{1});
            s.base_seed = sd.value("base", std::uint64_t{1});
        }
    }
    s.max_iterations = j.value("max_iterations", s.max_iterations);
    s.write_runs = j.value("write_runs", true);
    s.output = j.value("output", std::string("out/") + s.name);
    return s;
}

experiment_spec load_experiment_spec(const fs::path &file)
{
    std::ifstream in(file);
    if (!in)
        throw std::runtime_error("cannot open experiment spec " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw std::invalid_argument(file.string() + ": " + e.what());
    }
    return experiment_spec_from_json(j, file.parent_path());
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t spec_hash(const experiment_spec &spec)
{
    auto doc = spec.document;
    doc.erase("output");
    return fnv1a64(doc.dump());
}

std::vector<grid_cell> expand_grid(const experiment_spec &spec)
{
    std::vector<grid_cell> cells;
    const auto &g = spec.grid;
    for (double a : g.alpha)
        for (double b : g.beta)
            for (auto phi : g.phi)
                for (const auto &l : g.lifetime)
                    for (std::size_t w = 0; w < g.waiting.size(); ++w)
                        cells.push_back({cells.size(), a, b, static_cast<std::uint32_t>(std::max<std::int64_t>(phi, 0)), l, w});
    return cells;
}

validation_report validate(const experiment_spec &spec)
{
    validation_report r;
    auto add = [&](std::string v) { r.violations.push_back(std::move(v)); };
    const auto &g = spec.grid;

    if (g.alpha.empty() || g.beta.empty() || g.phi.empty() || g.lifetime.empty() || g.waiting.empty())
        add("empty grid");
    for (double a : g.alpha)
        if (!(a >= 0 && a <= 1))
            add("alpha in [0,1] (got " + format_double(a) + ")");
    for (double b : g.beta)
        if (!(b >= 0 && b <= 1))
            add("beta in [0,1] (got " + format_double(b) + ")");
    for (auto phi : g.phi)
        if (phi < 1)
            add("phi ≥ 1 (got " + std::to_string(phi) + ")");
    for (const auto &l : g.lifetime)
        if (l && *l < 1)
            add("lifetime ≥ 1 (got " + std::to_string(*l) + ")");
    if (spec.seed_count < 1)
        add("seeds ≥ 1");
    if (spec.max_iterations < 1)
        add("max_iterations ≥ 1");

    std::set<std::string> labels;
    for (const auto &w : g.waiting) {
        if (!labels.insert(w.label).second)
            add("duplicate waiting label `" + w.label + "`");
        try {
            waiting_model_from_json(w.doc, spec.base_dir);
        } catch (const std::exception &e) {
            add("waiting `" + w.label + "`: " + e.what());
        }
    }

    std::size_t groups = 0;
    if (spec.memberships && spec.generator) {
        add("network: give either memberships or generator, not both");
    } else if (spec.memberships) {
        if (!fs::exists(*spec.memberships)) {
            add("network: memberships file " + spec.memberships->string() + " not found");
        } else {
            try {
                groups = load_memberships_file(*spec.memberships).num_groups();
            } catch (const std::exception &e) {
                add(std::string("network: ") + e.what());
            }
        }
    } else if (spec.generator) {
        try {
            const auto gs = gen_spec_from_json(*spec.generator);
            if (gs.model != gen_model::bipartite_synth)
                add("network: generator model must be bipartite_synth");
            groups = gs.bipartite.groups;
        } catch (const std::exception &e) {
            add(std::string("network: ") + e.what());
        }
    } else {
        add("network: missing memberships or generator");
    }

    const auto cells = expand_grid(spec);
    r.cells = cells.size();
    r.planned_runs = cells.size() * static_cast<std::size_t>(std::max<std::int64_t>(spec.seed_count, 0));
    for (const auto &c : cells)
        r.estimated_iterations += estimate_iterations(c, spec, groups) * static_cast<double>(std::max<std::int64_t>(spec.seed_count, 0));
    return r;
}

json to_json(const validation_report &r)
{
    return {{"ok", r.ok()},
            {"violations", r.violations},
            {"cells", r.cells},
            {"planned_runs", r.planned_runs},
            {"estimated_iterations", r.estimated_iterations}};
}

loaded_network load_network(const experiment_spec &spec)
{
    loaded_network out;
    if (spec.memberships) {
        out.net = load_memberships_file(*spec.memberships);
        out.metadata["source"] = "memberships";
        out.metadata["file"] = spec.memberships->filename().string();
    } else if (spec.generator) {
        const auto gs = gen_spec_from_json(*spec.generator);
        auto generated = generate(gs);
        auto *net = std::get_if<bipartite_network>(&generated.network);
        if (!net)
            throw std::invalid_argument("network: generator model must be bipartite_synth");
        out.net = std::move(*net);
        out.metadata["source"] = "generator";
        out.metadata["generator"] = generated.metadata;
    } else {
        throw std::invalid_argument("network: missing memberships or generator");
    }
    out.metadata["users"] = out.net.num_users();
    out.metadata["groups"] = out.net.num_groups();
    out.metadata["memberships"] = out.net.num_memberships();
    if (spec.lcc) {
        const auto g = project_groups(out.net);
        const auto lcc = largest_component(g);
        out.metadata["lcc_fraction"] = lcc_fraction(g);
        out.net = restrict_bipartite_to_component(out.net, lcc);
        out.metadata["lcc_users"] = out.net.num_users();
        out.metadata["lcc_groups"] = out.net.num_groups();
    }
    if (out.net.empty())
        throw std::invalid_argument("network: no users");
    return out;
}

time_series read_time_series(std::istream &in, std::size_t population)
{
    time_series ts(population);
    std::string line;
    std::size_t lineno = 0;
    const auto n = static_cast<double>(population);
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.rfind("t,", 0) == 0)
            continue;
        if (trim(line).empty())
            continue;
        const auto f = split_csv(line);
        if (f.size() != 5)
            throw parse_error("expected 5 fields", lineno);
        series_row r{};
        double sf = 0, ef = 0, inf = 0;
        if (!parse_uint(f[0], r.t) || !parse_double(f[1], sf) || !parse_double(f[2], ef) ||
            !parse_double(f[3], inf) || !parse_uint(f[4], r.reach))
            throw parse_error("malformed time series row", lineno);
        r.s = static_cast<std::uint32_t>(std::llround(sf * n));
        r.e = static_cast<std::uint32_t>(std::llround(ef * n));
        r.i = static_cast<std::uint32_t>(std::llround(inf * n));
        ts.push(r);
    }
    if (ts.rows().empty())
        throw parse_error("empty time series", lineno);
    return ts;
}

double mean_curve::exposed_or_infected_at(std::int64_t time) const
{
    auto it = std::upper_bound(t.begin(), t.end(), time);
    if (it == t.begin())
        return 0;
    return exposed_or_infected[static_cast<std::size_t>(it - t.begin() - 1)];
}

mean_curve average_curves(std::span<const time_series *const> runs)
{
    mean_curve c;
    for (const auto *ts : runs)
        for (const auto &r : ts->rows())
            c.t.push_back(r.t);
    std::sort(c.t.begin(), c.t.end());
    c.t.erase(std::unique(c.t.begin(), c.t.end()), c.t.end());
    c.exposed_or_infected.assign(c.t.size(), 0);
    c.infected.assign(c.t.size(), 0);
    if (runs.empty())
        return c;
    for (const auto *ts : runs) {
        const auto rows = ts->rows();
        const auto n = static_cast<double>(ts->population());
        std::size_t k = 0;
        for (std::size_t i = 0; i < c.t.size(); ++i) {
            while (k + 1 < rows.size() && rows[k + 1].t <= c.t[i])
                ++k;
            if (rows[k].t > c.t[i])
                continue; /* before the first row */
            c.exposed_or_infected[i] += (rows[k].e + rows[k].i) / n;
            c.infected[i] += rows[k].i / n;
        }
    }
    const auto m = static_cast<double>(runs.size());
    for (std::size_t i = 0; i < c.t.size(); ++i) {
        c.exposed_or_infected[i] /= m;
        c.infected[i] /= m;
    }
    return c;
}

experiment_result run_experiment(const experiment_spec &spec, unsigned workers)
{
    const auto report = validate(spec);
    if (!report.ok()) {
        std::string msg = "invalid experiment spec:";
        for (const auto &v : report.violations)
            msg += "\n  " + v;
        throw std::invalid_argument(msg);
    }
    if (workers == 0)
        workers = default_workers();

    std::vector<waiting_ref> refs = spec.grid.waiting;
    std::vector<std::optional<waiting_model>> models;
    for (const auto &w : refs)
        models.push_back(waiting_model_from_json(w.doc, spec.base_dir));

    const auto network = load_network(spec);
    const auto &net = network.net;
    const std::size_t population = net.num_users();

    experiment_result result;
    result.cells = expand_grid(spec);
    const auto seeds = static_cast<std::size_t>(spec.seed_count);
    const std::size_t total = result.cells.size() * seeds;
    result.runs.resize(total);
    result.series.resize(total);

    const fs::path out_dir = spec.output;
    const fs::path runs_dir = out_dir / "runs";
    fs::create_directories(out_dir);
    if (spec.write_runs)
        fs::create_directories(runs_dir);

    const std::string hash = hex64(spec_hash(spec));
    json manifest;
    manifest["name"] = spec.name;
    manifest["tool_version"] = tool_version;
    manifest["spec_hash"] = hash;
    manifest["created"] = utc_timestamp();
    manifest["network"] = network.metadata;
    manifest["seeds"] = {{"count", spec.seed_count}, {"base", spec.base_seed}};
    manifest["max_iterations"] = spec.max_iterations;
    manifest["cells"] = json::array();
    for (const auto &c : result.cells)
        manifest["cells"].push_back(cell_json(c, spec));
    manifest["planned_runs"] = total;

    /* resume from a previous manifest with the same spec */
    std::vector<std::uint8_t> done(total, 0);
    const auto manifest_path = out_dir / "manifest.json";
    if (spec.write_runs && fs::exists(manifest_path)) {
        try {
            std::ifstream in(manifest_path);
            const auto old = json::parse(in);
            if (old.value("spec_hash", "") == hash && old.contains("runs")) {
                for (const auto &r : old.at("runs")) {
                    const auto cell = r.at("cell").get<std::size_t>();
                    const auto seed = r.at("seed").get<std::uint64_t>();
                    if (cell >= result.cells.size() || seed < spec.base_seed || seed - spec.base_seed >= seeds)
                        continue;
                    const std::size_t idx = cell * seeds + static_cast<std::size_t>(seed - spec.base_seed);
                    const auto file = runs_dir / run_file_name(cell, seed);
                    const auto reason = termination_from_string(r.at("termination").get<std::string>());
                    if (!reason || !fs::exists(file))
                        continue;
                    std::ifstream ts_in(file);
                    auto ts = read_time_series(ts_in, population);
                    run_summary s;
                    s.cell = cell;
                    s.seed = seed;
                    s.reason = *reason;
                    if (!r.at("time_to_full").is_null())
                        s.time_to_full = r.at("time_to_full").get<std::int64_t>();
                    s.end_time = r.at("end_time").get<std::int64_t>();
                    s.reach = r.at("reach").get<std::size_t>();
                    const auto &last = ts.rows().back();
                    s.s_frac = last.s / static_cast<double>(population);
                    s.e_frac = last.e / static_cast<double>(population);
                    s.i_frac = last.i / static_cast<double>(population);
                    result.runs[idx] = s;
                    result.series[idx] = std::move(ts);
                    done[idx] = 1;
                    ++result.resumed;
                }
            }
        } catch (const std::exception &) {
            std::fill(done.begin(), done.end(), 0);
            result.resumed = 0;
        }
    }

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < total; ++i)
        if (!done[i])
            todo.push_back(i);

    std::mutex collector;
    auto last_flush = std::chrono::steady_clock::now();
    auto flush_manifest = [&] {
        json m = manifest;
        m["runs"] = json::array();
        for (std::size_t i = 0; i < total; ++i)
            if (done[i])
                m["runs"].push_back(run_json(result.runs[i]));
        write_file_atomic(manifest_path, m.dump(2) + "\n");
    };

    parallel_for(todo.size(), workers, [&](std::size_t k) {
        const std::size_t idx = todo[k];
        const auto &cell = result.cells[idx / seeds];
        const std::uint64_t seed = spec.base_seed + idx % seeds;
        sei_params p;
        p.alpha = cell.alpha;
        p.beta = cell.beta;
        p.phi = cell.phi;
        p.lifetime = cell.lifetime;
        p.waiting = models[cell.waiting];
        p.max_iterations = spec.max_iterations;
        auto r = run(net, p, seed);

        run_summary s;
        s.cell = cell.index;
        s.seed = seed;
        s.reason = r.reason;
        s.time_to_full = r.time_to_full;
        s.end_time = r.end_time;
        s.reach = r.reach;
        const auto &last = r.series.rows().back();
        s.s_frac = last.s / static_cast<double>(population);
        s.e_frac = last.e / static_cast<double>(population);
        s.i_frac = last.i / static_cast<double>(population);

        std::string csv;
        if (spec.write_runs) {
            std::ostringstream os;
            os.imbue(std::locale::classic());
            write_time_series(os, r.series);
            csv = os.str();
        }

        std::lock_guard lock(collector);
        if (spec.write_runs)
            write_file_atomic(runs_dir / run_file_name(cell.index, seed), csv);
        result.runs[idx] = s;
        result.series[idx] = std::move(r.series);
        done[idx] = 1;
        const auto now = std::chrono::steady_clock::now();
        if (now - last_flush > std::chrono::seconds(2)) {
            flush_manifest();
            last_flush = now;
        }
    });

    /* summary.csv */
    {
        std::ostringstream os;
        os << "alpha,beta,phi,lifetime,waiting_kind,seed,termination,time_to_full,censored,end_time,s_frac,e_frac,"
              "i_frac,reach\n";
        for (const auto &r : result.runs) {
            os << cell_prefix(result.cells[r.cell], spec) << ',' << r.seed << ',' << to_string(r.reason) << ','
               << (r.time_to_full ? std::to_string(*r.time_to_full) : std::string()) << ','
               << (r.time_to_full ? 0 : 1) << ',' << r.end_time << ',' << format_double(r.s_frac) << ','
               << format_double(r.e_frac) << ',' << format_double(r.i_frac) << ',' << r.reach << '\n';
        }
        write_file_atomic(out_dir / "summary.csv", os.str());
    }

    /* aggregate.csv and curves.csv */
    {
        std::ostringstream agg, curves;
        agg << "cell,alpha,beta,phi,lifetime,waiting_kind,runs,censored,median_time,q1_time,q3_time,mean_i_frac,"
               "mean_ei_frac\n";
        curves << "cell,alpha,beta,phi,lifetime,waiting_kind,t,mean_ei_frac,mean_i_frac\n";
        for (const auto &c : result.cells) {
            std::vector<double> times;
            std::vector<const time_series *> series;
            std::size_t censored = 0;
            double mean_i = 0, mean_ei = 0;
            for (std::size_t k = 0; k < seeds; ++k) {
                const auto &r = result.runs[c.index * seeds + k];
                if (r.time_to_full)
                    times.push_back(static_cast<double>(*r.time_to_full));
                else {
                    times.push_back(std::numeric_limits<double>::infinity());
                    ++censored;
                }
                mean_i += r.i_frac;
                mean_ei += r.e_frac + r.i_frac;
                series.push_back(&result.series[c.index * seeds + k]);
            }
            std::sort(times.begin(), times.end());
            const auto prefix = cell_prefix(c, spec);
            agg << c.index << ',' << prefix << ',' << seeds << ',' << censored << ','
                << format_double(quantile(times, 0.5)) << ',' << format_double(quantile(times, 0.25)) << ','
                << format_double(quantile(times, 0.75)) << ',' << format_double(mean_i / static_cast<double>(seeds))
                << ',' << format_double(mean_ei / static_cast<double>(seeds)) << '\n';
            const auto mc = average_curves(series);
            for (std::size_t i = 0; i < mc.t.size(); ++i)
                curves << c.index << ',' << prefix << ',' << mc.t[i] << ',' << format_double(mc.exposed_or_infected[i])
                       << ',' << format_double(mc.infected[i]) << '\n';
        }
        write_file_atomic(out_dir / "aggregate.csv", agg.str());
        write_file_atomic(out_dir / "curves.csv", curves.str());
    }

    flush_manifest();
    result.manifest = manifest;
    result.manifest["runs"] = json::array();
    for (const auto &r : result.runs)
        result.manifest["runs"].push_back(run_json(r));
    return result;
}

} // namespace groupsei
