#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "chase/linalg.hpp"
#include "chase/matrix_io.hpp"

namespace chase::cli
{

using nlohmann::json;

namespace
{

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json spec_json(const matgen::SpectrumSpec& s)
{
    return {{"family", matgen::to_string(s.family)},
            {"n", s.n},
            {"dmax", s.d_max},
            {"eps", s.epsilon},
            {"seed", s.seed}};
}

matgen::SpectrumSpec spec_from(const json& j)
{
    matgen::SpectrumSpec s;
    s.family = matgen::parse_family(j.at("family").get<std::string>());
    s.n = j.at("n").get<std::size_t>();
    s.d_max = j.at("dmax").get<double>();
    s.epsilon = j.at("eps").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

json config_json(const solver::SolverConfig& c)
{
    return {{"n", c.n},
            {"nev", c.nev},
            {"nex", c.nex},
            {"tol", c.tol},
            {"deg", c.deg},
            {"deg_max", c.deg_max},
            {"max_iters", c.max_iters},
            {"seed", c.seed},
            {"lanczos_steps", c.lanczos_steps},
            {"lanczos_runs", c.lanczos_runs},
            {"largest", c.largest},
            {"one_iteration", c.one_iteration}};
}

solver::SolverConfig config_from(const json& j)
{
    solver::SolverConfig c;
    c.n = j.at("n").get<std::size_t>();
    c.nev = j.at("nev").get<std::size_t>();
    c.nex = j.at("nex").get<std::size_t>();
    c.tol = j.at("tol").get<double>();
    c.deg = j.at("deg").get<std::size_t>();
    c.deg_max = j.at("deg_max").get<std::size_t>();
    c.max_iters = j.at("max_iters").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.lanczos_steps = j.at("lanczos_steps").get<std::size_t>();
    c.lanczos_runs = j.at("lanczos_runs").get<std::size_t>();
    c.largest = j.at("largest").get<bool>();
    c.one_iteration = j.at("one_iteration").get<bool>();
    return c;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
    {
        return s;
    }
    std::string q = "\"";
    for (char ch : s)
    {
        q += ch == '\n' ? ' ' : ch;
        if (ch == '"')
        {
            q += '"';
        }
    }
    return q + "\"";
}

void write_text(const std::string& path, const std::string& body)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
    {
        throw IoError("cannot open '" + path + "' for writing");
    }
    f << body;
    if (!f)
    {
        throw IoError("write to '" + path + "' failed");
    }
}

// Options shared by solve and sweep.
struct MatrixFlags
{
    std::string path;
    std::string family;
    std::size_t n = 0;
    double dmax = 1.0;
    double eps = 0.1;
};

struct SolverFlags
{
    solver::SolverConfig cfg;
};

void add_matrix_flags(CLI::App* app, MatrixFlags& f)
{
    app->add_option("--matrix", f.path, "CHSM matrix file");
    app->add_option("--family", f.family, "generator family: uniform, geometric, 1-2-1, wilkinson");
    app->add_option("--n", f.n, "matrix order");
    app->add_option("--dmax", f.dmax, "largest prescribed eigenvalue (uniform, geometric)");
    app->add_option("--eps", f.eps, "smallest-to-largest eigenvalue ratio (uniform, geometric)");
}

void add_solver_flags(CLI::App* app, SolverFlags& f)
{
    auto& c = f.cfg;
    app->add_option("--nev", c.nev, "wanted eigenpairs")->required();
    app->add_option("--nex", c.nex, "extra search-space columns")->required();
    app->add_option("--tol", c.tol, "residual tolerance")->capture_default_str();
    app->add_option("--deg", c.deg, "initial filter degree")->capture_default_str();
    app->add_option("--deg-max", c.deg_max, "filter degree cap")->capture_default_str();
    app->add_option("--max-iters", c.max_iters, "subspace iteration limit")->capture_default_str();
    app->add_option("--lanczos-steps", c.lanczos_steps, "steps per Lanczos run")->capture_default_str();
    app->add_option("--lanczos-runs", c.lanczos_runs, "independent Lanczos runs")->capture_default_str();
    app->add_flag("--largest", c.largest, "compute the largest eigenpairs instead");
    app->add_flag("--one-iteration", c.one_iteration, "stop after one subspace iteration");
}

MatrixSource make_source(const MatrixFlags& f, std::uint64_t seed)
{
    MatrixSource s;
    if (!f.path.empty())
    {
        if (!f.family.empty())
        {
            throw InvalidArgument("give either --matrix or --family, not both");
        }
        s.path = f.path;
        return s;
    }
    if (f.family.empty())
    {
        throw InvalidArgument("a matrix is required: --matrix FILE or --family NAME --n N");
    }
    matgen::SpectrumSpec spec;
    spec.family = matgen::parse_family(f.family);
    spec.n = f.n;
    spec.d_max = f.dmax;
    spec.epsilon = f.eps;
    spec.seed = seed;
    matgen::validate(spec);
    s.spec = spec;
    return s;
}

grid::Grid grid_for(const grid::GridTopology& t, std::size_t n)
{
    return grid::make_grid(n, t.r, t.c, t.r_g, t.c_g);
}

struct Globals
{
    std::string grid = "1x1";
    std::uint64_t seed = 1337;
    unsigned threads = 1;
    bool json = false;
    std::string output;
};

int cmd_gen(const Globals& g, const MatrixFlags& f, std::ostream& out)
{
    if (g.output.empty())
    {
        throw InvalidArgument("gen needs -o FILE");
    }
    if (f.family.empty())
    {
        throw InvalidArgument("gen needs --family");
    }
    const auto source = make_source(f, g.seed);
    const auto& spec = *source.spec;
    const auto a = matgen::generate(spec);
    io::write_matrix(g.output, a);

    json summary = {{"file", g.output}, {"spec", spec_json(spec)}};
    const auto eigs = matgen::prescribed_eigenvalues(spec);
    if (!eigs.empty())
    {
        const auto [lo, hi] = std::minmax_element(eigs.begin(), eigs.end());
        summary["min_eigenvalue"] = *lo;
        summary["max_eigenvalue"] = *hi;
        double smallest = std::abs(eigs.front());
        double largest = 0.0;
        for (double v : eigs)
        {
            smallest = std::min(smallest, std::abs(v));
            largest = std::max(largest, std::abs(v));
        }
        if (smallest > 0.0)
        {
            summary["condition"] = largest / smallest;
        }
    }
    if (g.json)
    {
        out << summary.dump(2) << "\n";
        return kOk;
    }
    out << "wrote " << g.output << " (" << spec.n << " x " << spec.n << ", " << matgen::to_string(spec.family)
        << ")\n";
    if (summary.contains("min_eigenvalue"))
    {
        out << std::setprecision(17) << "eigenvalues in [" << summary["min_eigenvalue"].get<double>() << ", "
            << summary["max_eigenvalue"].get<double>() << "]\n";
        if (summary.contains("condition"))
        {
            out << std::setprecision(6) << "condition " << summary["condition"].get<double>() << "\n";
        }
    }
    else
    {
        out << "no closed-form spectrum for this family\n";
    }
    return kOk;
}

void write_solve_outputs(const RunManifest& m, const SolveOutcome& o, const json& report)
{
    if (m.output.empty())
    {
        return;
    }
    write_text(m.output + ".manifest.json", to_json(m).dump(2) + "\n");
    write_text(m.output + ".report.json", report.dump(2) + "\n");
    std::ostringstream vals;
    write_eigenvalues(vals, o.result.values);
    write_text(m.output + ".eigenvalues.txt", vals.str());
    if (m.write_vectors)
    {
        io::write_matrix(m.output + ".eigenvectors.chsm", o.result.vectors);
    }
}

json solve_report(const RunManifest& m, const SolveOutcome& o)
{
    json r = to_json(o.result.report);
    r["manifest"] = to_json(m);
    r["residual_check"] = {{"pass", o.residual_check}, {"max_normalized_residual", o.max_raw_residual}};
    return r;
}

int cmd_solve(RunManifest m, std::ostream& out)
{
    const auto a = load_matrix(m.source);
    m.config.n = a.rows();
    SolveOutcome o;
    int code = kOk;
    std::string failure;
    try
    {
        o = run_solve(a, m);
    }
    catch (const solver::PartialResultError& e)
    {
        o.result = e.partial();
        failure = e.what();
        code = kNumerical;
    }
    json report = solve_report(m, o);
    if (!failure.empty())
    {
        report["error"] = failure;
    }
    write_solve_outputs(m, o, report);
    const auto& rep = o.result.report;
    if (m.output.empty())
    {
        // Without -o everything goes to stdout.
        report["eigenvalues"] = o.result.values;
        out << report.dump(2) << "\n";
    }
    else
    {
        out << "iterations " << rep.iterations << ", matvecs " << rep.matvecs << ", locked " << rep.locked
            << ", residual check " << (o.residual_check ? "pass" : "FAIL") << "\n";
        out << "wrote " << m.output << ".{manifest.json,report.json,eigenvalues.txt"
            << (m.write_vectors ? ",eigenvectors.chsm" : "") << "}\n";
    }
    if (code == kOk && !o.residual_check)
    {
        code = kNumerical;
    }
    return code;
}

struct SweepPoint
{
    std::size_t n = 0;
    grid::GridTopology grid;
};

std::vector<SweepPoint> sweep_points(const std::string& axis, const std::string& values, const MatrixFlags& f,
                                     const grid::GridTopology& base)
{
    std::vector<SweepPoint> pts;
    std::stringstream ss(values);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char ch) { return std::isspace(ch); }),
                   item.end());
        if (item.empty())
        {
            continue;
        }
        SweepPoint p{f.n, base};
        if (axis == "grids")
        {
            p.grid = grid::parse_grid(item);
        }
        else
        {
            const auto at = item.find('@');
            std::size_t n = 0;
            try
            {
                n = std::stoull(item.substr(0, at));
            }
            catch (const std::exception&)
            {
                throw InvalidArgument("bad size '" + item + "' in --values");
            }
            p.n = n;
            if (at != std::string::npos)
            {
                p.grid = grid::parse_grid(item.substr(at + 1));
            }
        }
        pts.push_back(p);
    }
    return pts;
}

int cmd_sweep(const Globals& g, const MatrixFlags& f, const solver::SolverConfig& cfg, const std::string& axis,
              const std::string& values, std::ostream& out)
{
    if (axis != "grids" && axis != "sizes")
    {
        throw InvalidArgument("--axis must be 'grids' or 'sizes'");
    }
    if (axis == "sizes" && f.family.empty())
    {
        throw InvalidArgument("a size sweep needs --family");
    }
    const auto base = grid::parse_grid(g.grid);
    const auto points = sweep_points(axis, values, f, base);

    std::ostringstream csv;
    csv << kSweepHeader << "\n";
    std::optional<DenseMatrix> fixed;
    for (const auto& p : points)
    {
        RunManifest m;
        m.subcommand = "solve";
        m.config = cfg;
        m.grid = p.grid;
        m.threads = g.threads;
        std::string status = "ok";
        solver::RunReport rep;
        std::size_t n = p.n;
        try
        {
            DenseMatrix a;
            if (axis == "grids")
            {
                if (!fixed)
                {
                    fixed = load_matrix(make_source(f, g.seed));
                }
                a = *fixed;
            }
            else
            {
                MatrixFlags pf = f;
                pf.n = p.n;
                a = load_matrix(make_source(pf, g.seed));
            }
            n = a.rows();
            m.config.n = n;
            const auto o = run_solve(a, m);
            rep = o.result.report;
            if (!o.residual_check)
            {
                status = "residual check failed";
            }
        }
        catch (const solver::PartialResultError& e)
        {
            rep = e.partial().report;
            status = e.what();
        }
        catch (const std::exception& e)
        {
            status = e.what();
        }
        const auto& s = rep.seconds;
        csv << n << "," << cfg.nev << "," << cfg.nex << "," << grid::to_string(p.grid) << "," << rep.iterations
            << "," << rep.matvecs << std::setprecision(6) << "," << s.lanczos << "," << s.filter << "," << s.qr
            << "," << s.rr << "," << s.resid << "," << s.all << "," << rep.comm.rank_bytes_reduced << ","
            << csv_field(status) << "\n";
    }
    if (g.output.empty())
    {
        out << csv.str();
    }
    else
    {
        write_text(g.output, csv.str());
        out << "wrote " << points.size() << " rows to " << g.output << "\n";
    }
    return kOk;
}

int cmd_memest(const Globals& g, std::size_t n, std::size_t nev, std::size_t nex, bool complex, std::ostream& out)
{
    const auto t = grid::parse_grid(g.grid);
    memest::MemoryInputs in{n, nev, nex, t.r, t.c, t.r_g, t.c_g};
    const auto e = memest::estimate(in, complex ? 16 : 8);
    json j = to_json(e);
    j["inputs"] = {{"n", n}, {"nev", nev}, {"nex", nex}, {"grid", grid::to_string(t)}, {"complex", complex}};
    if (g.json)
    {
        out << j.dump(2) << "\n";
        return kOk;
    }
    auto gb = [](std::uint64_t bytes) { return double(bytes) / 1e9; };
    out << "n=" << n << " n_e=" << e.n_e << " grid " << grid::to_string(t) << " p=" << e.p << " q=" << e.q << "\n";
    out << std::left << std::setw(10) << "" << std::setw(16) << "term1" << std::setw(16) << "term2" << std::setw(16)
        << "term3" << std::setw(16) << "elements" << std::setw(12) << "GB" << "scalable\n";
    auto row = [&](const char* name, const std::uint64_t (&terms)[3], std::uint64_t el, std::uint64_t bytes,
                   double frac) {
        out << std::left << std::setw(10) << name << std::setw(16) << terms[0] << std::setw(16) << terms[1]
            << std::setw(16) << terms[2] << std::setw(16) << el << std::setw(12) << std::setprecision(4) << gb(bytes)
            << std::setprecision(3) << frac * 100 << "%\n";
    };
    row("per rank", e.cpu_terms, e.cpu_elements, e.cpu_bytes, e.cpu_scalable_fraction);
    row("per GPU", e.gpu_terms, e.gpu_elements, e.gpu_bytes, e.gpu_scalable_fraction);
    out << "GPU term3 counted once, on the rank's designated device\n";
    return kOk;
}

} // namespace

json to_json(const RunManifest& m)
{
    json src;
    if (m.source.spec)
    {
        src["spec"] = spec_json(*m.source.spec);
    }
    else
    {
        src["path"] = m.source.path;
    }
    return {{"subcommand", m.subcommand},   {"source", src},
            {"config", config_json(m.config)}, {"grid", grid::to_string(m.grid)},
            {"output", m.output},           {"write_vectors", m.write_vectors},
            {"threads", m.threads},         {"timestamp", m.timestamp},
            {"version", m.version}};
}

RunManifest manifest_from_json(const json& j)
{
    RunManifest m;
    try
    {
        m.subcommand = j.at("subcommand").get<std::string>();
        const auto& src = j.at("source");
        if (src.contains("spec"))
        {
            m.source.spec = spec_from(src.at("spec"));
        }
        else
        {
            m.source.path = src.at("path").get<std::string>();
        }
        m.config = config_from(j.at("config"));
        m.grid = grid::parse_grid(j.at("grid").get<std::string>());
        m.output = j.at("output").get<std::string>();
        m.write_vectors = j.at("write_vectors").get<bool>();
        m.threads = j.at("threads").get<unsigned>();
        m.timestamp = j.at("timestamp").get<std::string>();
        m.version = j.at("version").get<std::string>();
    }
    catch (const json::exception& e)
    {
        throw InvalidArgument(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

json to_json(const solver::RunReport& r)
{
    json trace = json::array();
    for (const auto& t : r.trace)
    {
        trace.push_back({{"iteration", t.iteration},
                         {"locked", t.locked},
                         {"active", t.active},
                         {"degrees", {{"min", t.min_degree}, {"max", t.max_degree}, {"sum", t.matvecs}}},
                         {"max_residual", t.max_residual},
                         {"orthogonality", t.orthogonality},
                         {"locked_drift", t.locked_drift}});
    }
    const auto& s = r.seconds;
    return {{"iterations", r.iterations},
            {"matvecs", r.matvecs},
            {"locked", r.locked},
            {"converged", r.converged},
            {"seconds",
             {{"lanczos", s.lanczos}, {"filter", s.filter}, {"qr", s.qr}, {"rr", s.rr}, {"resid", s.resid},
              {"all", s.all}}},
            {"trace", trace},
            {"counters",
             {{"hemm_filter_matvecs", r.hemm_filter_matvecs},
              {"filter_redistributions", r.filter_redistributions},
              {"hemm_matvecs_total", r.comm.matvec_count},
              {"rank_collective_calls", r.comm.rank_collective_calls},
              {"rank_bytes_reduced", r.comm.rank_bytes_reduced},
              {"device_reduction_calls", r.comm.device_reduction_calls},
              {"lanczos_restarts", r.lanczos_restarts},
              {"peak_rank_elements", r.peak_rank_elements}}},
            {"bounds",
             {{"mu_1", r.initial_bounds.mu_1},
              {"mu_ne", r.initial_bounds.mu_ne},
              {"b_sup", r.initial_bounds.b_sup}}}};
}

json to_json(const memest::MemoryEstimate& e)
{
    return {{"p", e.p},
            {"q", e.q},
            {"n_e", e.n_e},
            {"cpu", {{"terms", e.cpu_terms}, {"elements", e.cpu_elements}, {"bytes", e.cpu_bytes},
                     {"scalable_fraction", e.cpu_scalable_fraction}}},
            {"gpu", {{"terms", e.gpu_terms}, {"elements", e.gpu_elements}, {"bytes", e.gpu_bytes},
                     {"scalable_fraction", e.gpu_scalable_fraction}}}};
}

DenseMatrix load_matrix(const MatrixSource& source)
{
    if (source.spec)
    {
        return matgen::generate(*source.spec);
    }
    return io::read_matrix(source.path);
}

void write_eigenvalues(std::ostream& os, const std::vector<double>& values)
{
    char buf[40];
    for (double v : values)
    {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        os << buf;
    }
}

SolveOutcome run_solve(const DenseMatrix& a, const RunManifest& m)
{
    core::set_num_threads(m.threads);
    SolveOutcome o;
    o.result = solver::solve(a, grid_for(m.grid, a.rows()), m.config);
    const auto& r = o.result;
    const auto av = core::multiply(a, r.vectors);
    o.residual_check = true;
    for (std::size_t k = 0; k < r.values.size(); ++k)
    {
        std::vector<double> diff(a.rows());
        for (std::size_t i = 0; i < a.rows(); ++i)
        {
            diff[i] = av(i, k) - r.values[k] * r.vectors(i, k);
        }
        const double res = core::norm2(diff) / std::max(std::abs(r.values[k]), 1.0);
        o.max_raw_residual = std::max(o.max_raw_residual, res);
        o.residual_check = o.residual_check && res <= m.config.tol;
    }
    return o;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Chebyshev-accelerated subspace iteration eigensolver"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--grid", g.grid, "rank grid RxC[:RgxCg]")->capture_default_str();
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (speed only)")->capture_default_str();
    app.add_flag("--json", g.json, "JSON output");
    app.add_option("-o,--output", g.output, "output file or prefix");

    MatrixFlags gen_flags;
    auto* gen = app.add_subcommand("gen", "generate a test matrix")->fallthrough();
    add_matrix_flags(gen, gen_flags);

    MatrixFlags solve_mflags;
    SolverFlags solve_sflags;
    std::string manifest_path;
    bool vectors = false;
    auto* solve = app.add_subcommand("solve", "compute the lowest eigenpairs")->fallthrough();
    add_matrix_flags(solve, solve_mflags);
    add_solver_flags(solve, solve_sflags);
    solve->add_flag("--vectors", vectors, "also write eigenvectors (CHSM)");

    auto* replay = app.add_subcommand("replay", "rerun a saved solve manifest")->fallthrough();
    replay->add_option("manifest", manifest_path, "manifest JSON")->required();

    MatrixFlags sweep_mflags;
    SolverFlags sweep_sflags;
    std::string axis = "grids";
    std::string values;
    auto* sweep = app.add_subcommand("sweep", "run a series of solves, one CSV row each")->fallthrough();
    add_matrix_flags(sweep, sweep_mflags);
    add_solver_flags(sweep, sweep_sflags);
    sweep->add_option("--axis", axis, "grids or sizes")->capture_default_str();
    sweep->add_option("--values", values, "comma list: RxC[:RgxCg] for grids, N or N@RxC for sizes");

    std::size_t mn = 0, mnev = 0, mnex = 0;
    bool complex = false;
    auto* mem = app.add_subcommand("memest", "memory footprint estimate")->fallthrough();
    mem->add_option("--n", mn, "matrix order")->required();
    mem->add_option("--nev", mnev, "wanted eigenpairs")->required();
    mem->add_option("--nex", mnex, "extra search-space columns")->required();
    mem->add_flag("--complex", complex, "16-byte elements");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try
    {
        if (*gen)
        {
            return cmd_gen(g, gen_flags, out);
        }
        if (*solve || *replay)
        {
            RunManifest m;
            if (*replay)
            {
                std::ifstream f(manifest_path);
                if (!f)
                {
                    throw IoError("cannot open manifest '" + manifest_path + "'");
                }
                json j;
                try
                {
                    f >> j;
                }
                catch (const json::exception& e)
                {
                    throw InvalidArgument(std::string("manifest is not JSON: ") + e.what());
                }
                m = manifest_from_json(j);
                if (!g.output.empty())
                {
                    m.output = g.output;
                }
            }
            else
            {
                m.subcommand = "solve";
                m.source = make_source(solve_mflags, g.seed);
                m.config = solve_sflags.cfg;
                m.config.seed = g.seed;
                m.grid = grid::parse_grid(g.grid);
                m.output = g.output;
                m.write_vectors = vectors;
                m.threads = g.threads;
            }
            m.timestamp = utc_timestamp();
            return cmd_solve(m, out);
        }
        if (*sweep)
        {
            auto cfg = sweep_sflags.cfg;
            cfg.seed = g.seed;
            core::set_num_threads(g.threads);
            return cmd_sweep(g, sweep_mflags, cfg, axis, values, out);
        }
        if (*mem)
        {
            return cmd_memest(g, mn, mnev, mnex, complex, out);
        }
    }
    catch (const IoError& e)
    {
        err << "error: " << e.what() << "\n";
        return kIo;
    }
    catch (const InvalidArgument& e)
    {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    catch (const ShapeError& e)
    {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    catch (const Error& e)
    {
        err << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kUsage;
}

} // namespace chase::cli
