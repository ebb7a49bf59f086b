#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "uldg/diagnostics.hpp"
#include "uldg/solver.hpp"

namespace uldg {

enum class InterfaceKind {
    Circle, ///< circle about the origin with the manufactured solution
    Line,   ///< straight interface with the affine probe solution
};

struct RunConfig {
    Domain domain;
    InterfaceKind interface = InterfaceKind::Circle;
    double radius = std::sqrt(3.0);
    double line_angle = 0.3; ///< normal direction of the line, radians
    double line_offset = 0.1234;
    std::array<double, 2> mu{2.0, 1.0};
    std::array<double, 2> eps{2.0, 1.0};
    double k = 5.0;
    std::vector<int> ps{1};
    std::vector<int> ns{24, 32, 40, 48};
    double alpha0 = 1.0;
    double delta0 = 0.25;
    int refine_levels = 1;
    double tolerance = 1e-10; ///< relative residual accepted from the solver
    std::string out;          ///< CSV path, empty for none
    std::string dump_mesh;
    std::string dump_matrix;
};

/// Flat key = value text, '#' starts a comment. Keys follow the field names;
/// lists (ps, ns) are comma separated and pairs (mu, eps) are "inner,outer".
RunConfig parse_config(std::istream& is, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Throws Config on any out-of-range value.
void validate(const RunConfig& cfg);

std::shared_ptr<const ExactSolution> make_exact(const RunConfig& cfg);

struct CaseResult {
    int p = 0;
    int n = 0;
    ErrorReport errors;
    SolveReport solve;
    int macros = 0;
    double eta_max = 0.0;
    double assembly_seconds = 0.0;
    double total_seconds = 0.0;
    std::vector<std::string> warnings;
};

/// Mesh, induced mesh, assembly, solve and error evaluation for one (p, n).
/// Module errors propagate unchanged.
CaseResult run_single(const RunConfig& cfg, int p, int n);

struct CaseOutcome {
    int p = 0;
    int n = 0;
    bool ok = false;
    std::string error;
    CaseResult result;
};

struct RateSummary {
    int p = 0;
    int points = 0;
    double err_slope = 0.0;
    double phi_slope = 0.0;
    bool fitted = false;
    bool within_20_percent = false;
};

struct SweepResult {
    std::vector<CaseOutcome> cases; ///< in (p, n) configuration order
    std::vector<RateSummary> rates;
    std::vector<std::string> warnings;
};

/// Runs every (p, n) case. Failed cases are recorded, not rethrown. CSV rows
/// for successful cases go to `csv` in configuration order whatever the
/// completion order. ULDG_THREADS sets the number of concurrent cases.
SweepResult run_sweep(const RunConfig& cfg, std::ostream* csv = nullptr);

void write_summary(std::ostream& os, const SweepResult& sweep);

/// Worker count from ULDG_THREADS, 1 when unset or invalid.
int thread_count();

} // namespace uldg
