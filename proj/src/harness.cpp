#include "uldg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace uldg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(trim(item));
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, int line)
{
    throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": bad value '" + value + "' for " + key);
}

double to_double(const std::string& key, const std::string& v, int line)
{
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size())
            bad_value(key, v, line);
        return d;
    } catch (const std::logic_error&) {
        bad_value(key, v, line);
    }
}

int to_int(const std::string& key, const std::string& v, int line)
{
    try {
        size_t pos = 0;
        const int i = std::stoi(v, &pos);
        if (pos != v.size())
            bad_value(key, v, line);
        return i;
    } catch (const std::logic_error&) {
        bad_value(key, v, line);
    }
}

std::vector<int> to_int_list(const std::string& key, const std::string& v, int line)
{
    std::vector<int> out;
    for (const auto& item : split(v))
        if (!item.empty())
            out.push_back(to_int(key, item, line));
    return out;
}

std::array<double, 2> to_pair(const std::string& key, const std::string& v, int line)
{
    const auto items = split(v);
    if (items.size() != 2)
        bad_value(key, v, line);
    return {to_double(key, items[0], line), to_double(key, items[1], line)};
}

} // namespace

RunConfig parse_config(std::istream& is, RunConfig cfg)
{
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty())
            continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": expected key = value");
        const std::string key = trim(text.substr(0, eq));
        const std::string v = trim(text.substr(eq + 1));
        if (key == "domain") {
            const auto items = split(v);
            if (items.size() != 4)
                bad_value(key, v, line);
            cfg.domain.lo = {to_double(key, items[0], line), to_double(key, items[1], line)};
            cfg.domain.hi = {to_double(key, items[2], line), to_double(key, items[3], line)};
        } else if (key == "interface") {
            if (v == "circle")
                cfg.interface = InterfaceKind::Circle;
            else if (v == "line")
                cfg.interface = InterfaceKind::Line;
            else
                bad_value(key, v, line);
        } else if (key == "radius") {
            cfg.radius = to_double(key, v, line);
        } else if (key == "line_angle") {
            cfg.line_angle = to_double(key, v, line);
        } else if (key == "line_offset") {
            cfg.line_offset = to_double(key, v, line);
        } else if (key == "mu") {
            cfg.mu = to_pair(key, v, line);
        } else if (key == "eps") {
            cfg.eps = to_pair(key, v, line);
        } else if (key == "k") {
            cfg.k = to_double(key, v, line);
        } else if (key == "p" || key == "ps") {
            cfg.ps = to_int_list(key, v, line);
        } else if (key == "n" || key == "ns") {
            cfg.ns = to_int_list(key, v, line);
        } else if (key == "alpha0") {
            cfg.alpha0 = to_double(key, v, line);
        } else if (key == "delta0") {
            cfg.delta0 = to_double(key, v, line);
        } else if (key == "refine_levels") {
            cfg.refine_levels = to_int(key, v, line);
        } else if (key == "tolerance") {
            cfg.tolerance = to_double(key, v, line);
        } else if (key == "out") {
            cfg.out = v;
        } else if (key == "dump_mesh") {
            cfg.dump_mesh = v;
        } else if (key == "dump_matrix") {
            cfg.dump_matrix = v;
        } else {
            throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path, RunConfig base)
{
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorKind::Config, "cannot open config file " + path);
    return parse_config(is, std::move(base));
}

void validate(const RunConfig& cfg)
{
    auto require = [](bool ok, const std::string& what) {
        if (!ok)
            throw Error(ErrorKind::Config, what);
    };
    require(cfg.domain.lo.x() < cfg.domain.hi.x() && cfg.domain.lo.y() < cfg.domain.hi.y(),
            "domain must have lo < hi");
    require(cfg.k > 0.0, "wave number k must be positive");
    require(cfg.mu[0] > 0.0 && cfg.mu[1] > 0.0, "mu must be positive on both sides");
    require(cfg.eps[0] > 0.0 && cfg.eps[1] > 0.0, "eps must be positive on both sides");
    require(cfg.alpha0 > 0.0, "alpha0 must be positive");
    require(cfg.delta0 > 0.0 && cfg.delta0 < 0.5, "delta0 must lie in (0, 1/2)");
    require(cfg.refine_levels >= 0, "refine_levels must be nonnegative");
    require(cfg.tolerance > 0.0, "tolerance must be positive");
    require(cfg.interface != InterfaceKind::Circle || cfg.radius > 0.0, "radius must be positive");
    require(!cfg.ps.empty(), "no polynomial order given");
    for (int p : cfg.ps)
        require(p >= 1 && p <= 10, "polynomial order " + std::to_string(p) + " outside 1..10");
    require(!cfg.ns.empty(), "empty mesh list");
    for (int n : cfg.ns)
        require(n >= 1, "mesh size n must be positive, got " + std::to_string(n));
}

std::shared_ptr<const ExactSolution> make_exact(const RunConfig& cfg)
{
    if (cfg.interface == InterfaceKind::Circle)
        return std::make_shared<ManufacturedSolution>(cfg.radius, cfg.k, cfg.mu, cfg.eps);
    const Point normal(std::cos(cfg.line_angle), std::sin(cfg.line_angle));
    return std::make_shared<StraightInterfaceSolution>(normal, cfg.line_offset, Complex(0.7, 0.2), Complex(-0.3, 0.5),
                                                       Complex(0.4, -0.1), cfg.k, cfg.mu, cfg.eps);
}

CaseResult run_single(const RunConfig& cfg, int p, int n)
{
    RunConfig one = cfg;
    one.ps = {p};
    one.ns = {n};
    validate(one);

    const auto t0 = Clock::now();
    CaseResult res;
    res.p = p;
    res.n = n;
    const auto exact = make_exact(cfg);
    const LevelSetInterface ls = exact->interface();

    QuadMesh quad = build_initial_mesh(n, cfg.domain);
    refine_interface_band(quad, ls, cfg.refine_levels);
    const InducedMesh mesh = build_induced_mesh(std::move(quad), ls, cfg.delta0);
    const FaceSet faces = enumerate_faces(mesh);
    res.macros = int(mesh.macros.size());
    for (const auto& m : mesh.macros)
        if (m.cut)
            res.eta_max = std::max(res.eta_max, m.eta);
    if (!cfg.dump_mesh.empty()) {
        std::ofstream os(cfg.dump_mesh);
        write_mesh_dump(os, mesh, faces, p);
    }

    AssembledSystem system;
    {
        // the assembly discretization is dropped before the factorization
        const Discretization disc(mesh, faces, p);
        system = assemble(disc, material_from(exact), cfg.alpha0);
    }
    res.assembly_seconds = seconds_since(t0);
    res.warnings = system.warnings;
    if (!cfg.dump_matrix.empty()) {
        std::ofstream os(cfg.dump_matrix);
        write_matrix_dump(os, system.matrix);
    }

    SolveResult sol = solve(system, cfg.tolerance);
    system = AssembledSystem{};
    res.solve = sol.report;

    const Discretization report_disc(mesh, faces, p, 1);
    res.errors = dg_errors(report_disc, sol.x, *exact, cfg.alpha0);
    res.total_seconds = seconds_since(t0);
    return res;
}

int thread_count()
{
    const char* env = std::getenv("ULDG_THREADS");
    if (!env)
        return 1;
    const int t = std::atoi(env);
    return t >= 1 ? t : 1;
}

SweepResult run_sweep(const RunConfig& cfg, std::ostream* csv)
{
    validate(cfg);
    if (cfg.ns.size() < 3)
        throw Error(ErrorKind::Config, "a sweep needs at least three mesh sizes");

    SweepResult sweep;
    for (int p : cfg.ps)
        for (int n : cfg.ns) {
            CaseOutcome c;
            c.p = p;
            c.n = n;
            sweep.cases.push_back(std::move(c));
        }

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < sweep.cases.size(); i = next++) {
            CaseOutcome& c = sweep.cases[i];
            try {
                c.result = run_single(cfg, c.p, c.n);
                c.ok = true;
            } catch (const std::exception& e) {
                c.error = e.what();
            }
        }
    };
    const int threads = std::min<int>(thread_count(), int(sweep.cases.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }

    if (csv)
        write_csv_header(*csv);
    for (const auto& c : sweep.cases) {
        if (!c.ok) {
            sweep.warnings.push_back("p=" + std::to_string(c.p) + " n=" + std::to_string(c.n) + " failed: " + c.error);
            continue;
        }
        if (csv)
            write_csv_row(*csv, c.p, c.n, c.result.errors, c.result.solve.factor_seconds + c.result.solve.solve_seconds);
        for (const auto& w : c.result.warnings)
            sweep.warnings.push_back("p=" + std::to_string(c.p) + " n=" + std::to_string(c.n) + ": " + w);
    }

    for (int p : cfg.ps) {
        RateSummary r;
        r.p = p;
        std::vector<std::pair<double, double>> err, phi;
        for (const auto& c : sweep.cases)
            if (c.ok && c.p == p) {
                err.emplace_back(double(c.result.errors.dofs), c.result.errors.rel_err_X);
                phi.emplace_back(double(c.result.errors.dofs), c.result.errors.norm_phi);
            }
        r.points = int(err.size());
        if (r.points >= 3) {
            r.err_slope = fit_rate(err);
            r.phi_slope = fit_rate(phi);
            r.fitted = true;
            const double target = -0.5 * p;
            r.within_20_percent = std::abs(r.err_slope - target) <= 0.2 * std::abs(target);
            if (!r.within_20_percent) {
                std::ostringstream w;
                w << "p=" << p << ": fitted slope " << std::fixed << std::setprecision(3) << r.err_slope
                  << " deviates from " << target << " by more than 20%";
                sweep.warnings.push_back(w.str());
            }
        } else {
            sweep.warnings.push_back("p=" + std::to_string(p) + ": fewer than three successful cases, no slope");
        }
        sweep.rates.push_back(r);
    }
    return sweep;
}

void write_summary(std::ostream& os, const SweepResult& sweep)
{
    const auto flags = os.flags();
    os << std::left << std::setw(4) << "p" << std::setw(6) << "n" << std::setw(10) << "dofs" << std::setw(14)
       << "rel_err_X" << std::setw(14) << "norm_phi" << std::setw(14) << "div_resid" << std::setw(12) << "theta_max"
       << "seconds\n";
    for (const auto& c : sweep.cases) {
        os << std::left << std::setw(4) << c.p << std::setw(6) << c.n;
        if (!c.ok) {
            os << "failed: " << c.error << '\n';
            continue;
        }
        const auto& e = c.result.errors;
        os << std::setw(10) << e.dofs << std::scientific << std::setprecision(4) << std::setw(14) << e.rel_err_X
           << std::setw(14) << e.norm_phi << std::setw(14) << e.div_resid << std::setw(12) << std::setprecision(2)
           << e.theta_max << std::fixed << std::setprecision(1) << c.result.total_seconds << '\n';
        os.flags(flags);
    }
    os << '\n' << std::left << std::setw(4) << "p" << std::setw(8) << "points" << std::setw(16) << "slope(rel_err)"
       << std::setw(16) << "slope(phi)" << "target\n";
    for (const auto& r : sweep.rates) {
        os << std::left << std::setw(4) << r.p << std::setw(8) << r.points;
        if (r.fitted)
            os << std::fixed << std::setprecision(3) << std::setw(16) << r.err_slope << std::setw(16) << r.phi_slope;
        else
            os << std::setw(16) << "-" << std::setw(16) << "-";
        os << std::fixed << std::setprecision(2) << -0.5 * r.p << '\n';
        os.flags(flags);
    }
    for (const auto& w : sweep.warnings)
        os << "warning: " << w << '\n';
    os.flags(flags);
}

} // namespace uldg
