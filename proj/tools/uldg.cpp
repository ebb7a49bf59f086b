// Command-line driver: `uldg solve` runs one (p, n) case, `uldg sweep` a
// convergence study. Options override values from --config.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "uldg/harness.hpp"

namespace {

struct Overrides {
    std::string config;
    std::vector<int> ps;
    std::vector<int> ns;
    std::optional<double> alpha0;
    std::optional<double> delta0;
    std::optional<int> refine_levels;
    std::optional<double> k;
    std::string interface;
    std::string out;
    std::string dump_mesh;
    std::string dump_matrix;
};

void add_common(CLI::App* app, Overrides& o)
{
    app->add_option("--config", o.config, "key = value configuration file");
    app->add_option("--alpha0", o.alpha0, "penalty scale");
    app->add_option("--delta0", o.delta0, "large-element threshold in (0, 1/2)");
    app->add_option("--refine-levels", o.refine_levels, "interface band refinements");
    app->add_option("--k", o.k, "wave number");
    app->add_option("--interface", o.interface, "circle or line")->check(CLI::IsMember({"circle", "line"}));
    app->add_option("--out", o.out, "CSV output path");
}

uldg::RunConfig resolve(const Overrides& o)
{
    uldg::RunConfig cfg = o.config.empty() ? uldg::RunConfig{} : uldg::load_config(o.config);
    if (!o.ps.empty())
        cfg.ps = o.ps;
    if (!o.ns.empty())
        cfg.ns = o.ns;
    if (o.alpha0)
        cfg.alpha0 = *o.alpha0;
    if (o.delta0)
        cfg.delta0 = *o.delta0;
    if (o.refine_levels)
        cfg.refine_levels = *o.refine_levels;
    if (o.k)
        cfg.k = *o.k;
    if (!o.interface.empty())
        cfg.interface = o.interface == "line" ? uldg::InterfaceKind::Line : uldg::InterfaceKind::Circle;
    if (!o.out.empty())
        cfg.out = o.out;
    if (!o.dump_mesh.empty())
        cfg.dump_mesh = o.dump_mesh;
    if (!o.dump_matrix.empty())
        cfg.dump_matrix = o.dump_matrix;
    return cfg;
}

std::ofstream open_csv(const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw uldg::Error(uldg::ErrorKind::Config, "cannot write " + path);
    return os;
}

int run_case(const uldg::RunConfig& cfg)
{
    uldg::validate(cfg);
    const int p = cfg.ps.front();
    const int n = cfg.ns.front();
    const uldg::CaseResult r = uldg::run_single(cfg, p, n);
    const auto& e = r.errors;
    std::cout << "p=" << p << " n=" << n << " dofs=" << e.dofs << " macros=" << r.macros << std::scientific
              << std::setprecision(4) << " rel_err_X=" << e.rel_err_X << " err_L2=" << e.err_L2
              << " norm_phi=" << e.norm_phi << " div_resid=" << e.div_resid << " theta_max=" << e.theta_max
              << " residual=" << r.solve.residual << std::fixed << std::setprecision(2)
              << " assembly_s=" << r.assembly_seconds << " factor_s=" << r.solve.factor_seconds
              << " total_s=" << r.total_seconds << '\n';
    for (const auto& w : r.warnings)
        std::cout << "warning: " << w << '\n';
    if (!cfg.out.empty()) {
        auto os = open_csv(cfg.out);
        uldg::write_csv_header(os);
        uldg::write_csv_row(os, p, n, e, r.solve.factor_seconds + r.solve.solve_seconds);
    }
    return 0;
}

int run_study(const uldg::RunConfig& cfg)
{
    uldg::SweepResult sweep;
    if (cfg.out.empty()) {
        sweep = uldg::run_sweep(cfg);
    } else {
        auto os = open_csv(cfg.out);
        sweep = uldg::run_sweep(cfg, &os);
    }
    uldg::write_summary(std::cout, sweep);
    for (const auto& c : sweep.cases)
        if (!c.ok)
            return 1;
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Unfitted LDG solver for the 2D time-harmonic Maxwell interface problem"};
    app.require_subcommand(1);

    Overrides solve_opts, sweep_opts;
    std::optional<int> p, n;
    CLI::App* solve = app.add_subcommand("solve", "single (p, n) run");
    add_common(solve, solve_opts);
    solve->add_option("--p", p, "polynomial order");
    solve->add_option("--n", n, "base mesh size, h = 4/n");
    solve->add_option("--dump-mesh", solve_opts.dump_mesh, "write the induced mesh dump");
    solve->add_option("--dump-matrix", solve_opts.dump_matrix, "write the system matrix in coordinate form");

    CLI::App* sweep = app.add_subcommand("sweep", "convergence study over p and n lists");
    add_common(sweep, sweep_opts);
    sweep->add_option("--p", sweep_opts.ps, "polynomial orders")->delimiter(',');
    sweep->add_option("--n", sweep_opts.ns, "base mesh sizes")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) {
            if (p)
                solve_opts.ps = {*p};
            if (n)
                solve_opts.ns = {*n};
            return run_case(resolve(solve_opts));
        }
        return run_study(resolve(sweep_opts));
    } catch (const uldg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == uldg::ErrorKind::Config ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
