// Acceptance checks 1-11. Each prints one PASS/FAIL line on stdout; the
// measurements behind it go to stderr. Exit status is 0 unless --strict is
// given and a check failed, or a check could not be evaluated at all.
//
//   uldg_acceptance [--only 4,5,...] [--strict]

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "uldg/harness.hpp"

using namespace uldg;

namespace {

// tolerances
constexpr double kSlopeBand = 0.20;         // 1: |slope + p/2| <= 0.2 p/2
constexpr double kP4Target = 1e-4;          // 2
constexpr long kP4DofLimit = 150000;        // 2
constexpr double kP4Residual = 1e-8;        // 2, see criterion_p4
constexpr double kPhiSlopeSlack = 0.3;      // 3
constexpr double kGeometryRel = 1e-9;       // 4
constexpr double kAdjointRel = 1e-11;       // 5
constexpr double kIbpRel = 1e-11;           // 6
constexpr double kImagRel = 1e-12;          // 7
constexpr double kOnInterface = 1e-12;      // 8, |E| on the circle, see note below
constexpr double kDivFd = 1e-6;             // 8
constexpr double kFluxJump = 1e-10;         // 8
constexpr double kDivRatioGrowth = 10.0;    // 9
constexpr double kQuadratureRel = 1e-9;     // 10
constexpr double kProbe = 1e-9;             // 11

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 3)
{
    std::ostringstream os;
    os << std::scientific << std::setprecision(prec) << v;
    return os.str();
}

std::string fixed(double v, int prec = 3)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

/* Cap the address space a little below the free memory so that a case which
   cannot fit fails with an allocation error instead of being killed. */
void limit_memory()
{
    std::ifstream meminfo("/proc/meminfo");
    std::string key;
    long kb = 0;
    std::string unit;
    long available = 0;
    while (meminfo >> key >> kb >> unit)
        if (key == "MemAvailable:")
            available = kb;
    std::ifstream status("/proc/self/status");
    std::string line;
    long vm = 0;
    while (std::getline(status, line))
        if (line.rfind("VmSize:", 0) == 0)
            vm = std::stol(line.substr(7));
    if (available <= 0)
        return;
    rlimit lim{};
    lim.rlim_cur = lim.rlim_max = rlim_t(vm + 0.9 * available) * 1024;
    setrlimit(RLIMIT_AS, &lim);
    std::cerr << "address space capped at " << fixed(double(lim.rlim_cur) / (1 << 30), 2) << " GiB\n";
}

RunConfig reference_config()
{
    RunConfig cfg;
    cfg.ns = {24, 32, 40, 48};
    cfg.refine_levels = 1;
    return cfg;
}

/* ---------- convergence sweeps (1, 3, 9) ---------- */

std::map<int, SweepResult> sweeps;

const SweepResult& sweep_for(int p)
{
    auto it = sweeps.find(p);
    if (it != sweeps.end())
        return it->second;
    RunConfig cfg = reference_config();
    cfg.ps = {p};
    const auto t0 = Clock::now();
    SweepResult s = run_sweep(cfg);
    std::cerr << "sweep p=" << p << " done in " << fixed(std::chrono::duration<double>(Clock::now() - t0).count(), 1)
              << " s\n";
    write_summary(std::cerr, s);
    return sweeps.emplace(p, std::move(s)).first->second;
}

std::vector<const CaseResult*> successful(const SweepResult& s)
{
    std::vector<const CaseResult*> out;
    for (const auto& c : s.cases)
        if (c.ok)
            out.push_back(&c.result);
    return out;
}

Verdict criterion_rates()
{
    Verdict v{true, ""};
    for (int p : {1, 2, 3}) {
        const SweepResult& s = sweep_for(p);
        const RateSummary& r = s.rates.front();
        const int failed = int(s.cases.size()) - r.points;
        v.detail += " p=" + std::to_string(p) + ":";
        if (failed > 0) {
            v.pass = false;
            v.detail += std::to_string(failed) + " case(s) failed";
            if (r.fitted)
                v.detail += ", partial";
        }
        if (r.fitted) {
            v.detail += " slope " + fixed(r.err_slope) + " (target " + fixed(-0.5 * p, 2) + ")";
            if (!r.within_20_percent)
                v.pass = false;
        } else {
            v.pass = false;
            v.detail += " no fit";
        }
    }
    return v;
}

/* At p = 4 the interface penalties reach Theta ~ 5e6 and rounding the
   solution to double alone leaves a relative residual near 6e-10, so the
   residual gate is loosened for these runs only. */
Verdict criterion_p4()
{
    RunConfig cfg = reference_config();
    cfg.tolerance = kP4Residual;
    Verdict v{false, ""};
    double best = INFINITY;
    long best_dofs = 0;
    for (int n = 16; n <= 64; n += 4) {
        CaseResult r;
        try {
            r = run_single(cfg, 4, n);
        } catch (const std::exception& e) {
            std::cerr << "p=4 n=" << n << " failed: " << e.what() << '\n';
            v.detail += " n=" + std::to_string(n) + " failed (" + e.what() + ")";
            break;
        }
        std::cerr << "p=4 n=" << n << " dofs=" << r.errors.dofs << " rel_err_X=" << fmt(r.errors.rel_err_X) << '\n';
        if (r.errors.dofs > kP4DofLimit)
            break;
        if (r.errors.rel_err_X < best) {
            best = r.errors.rel_err_X;
            best_dofs = r.errors.dofs;
        }
        if (best <= kP4Target) {
            v.pass = true;
            break;
        }
    }
    v.detail = " best rel_err_X " + fmt(best) + " at " + std::to_string(best_dofs) + " DoFs (target " +
               fmt(kP4Target, 0) + " within " + std::to_string(kP4DofLimit) + ")" + v.detail;
    return v;
}

Verdict criterion_phi()
{
    Verdict v{true, ""};
    for (int p : {1, 2, 3}) {
        const SweepResult& s = sweep_for(p);
        const auto cases = successful(s);
        bool monotone = true;
        for (size_t i = 1; i < cases.size(); ++i)
            monotone = monotone && cases[i]->errors.norm_phi < cases[i - 1]->errors.norm_phi;
        v.detail += " p=" + std::to_string(p) + ": " + (monotone ? "monotone" : "not monotone");
        if (!monotone)
            v.pass = false;
        const RateSummary& r = s.rates.front();
        if (!r.fitted) {
            v.pass = false;
            v.detail += ", only " + std::to_string(r.points) + " points";
            continue;
        }
        v.detail += ", slope " + fixed(r.phi_slope) + " (bound " + fixed(-0.5 * p + kPhiSlopeSlack, 2) + ")";
        if (r.phi_slope > -0.5 * p + kPhiSlopeSlack)
            v.pass = false;
        if (r.points < int(s.cases.size())) {
            v.pass = false;
            v.detail += ", incomplete sweep";
        }
    }
    return v;
}

Verdict criterion_divergence()
{
    Verdict v{true, ""};
    for (int p : {1, 2, 3}) {
        const auto cases = successful(sweep_for(p));
        v.detail += " p=" + std::to_string(p) + ":";
        if (cases.size() < 2) {
            v.pass = false;
            v.detail += " fewer than two cases";
            continue;
        }
        double first = 0.0, worst = 0.0;
        for (const CaseResult* c : cases) {
            const auto& e = c->errors;
            const double ratio = e.div_resid / (std::sqrt(e.theta_max) * (e.normal_jump + std::sqrt(double(p)) * e.norm_phi));
            std::cerr << "divergence ratio p=" << p << " n=" << c->n << ": " << fmt(ratio) << '\n';
            if (c == cases.front())
                first = ratio;
            worst = std::max(worst, ratio / first);
        }
        v.detail += " max/coarsest " + fixed(worst, 2) + " over " + std::to_string(cases.size()) + " meshes";
        if (!(worst <= kDivRatioGrowth))
            v.pass = false;
    }
    return v;
}

/* ---------- geometry and quadrature (4, 10) ---------- */

Verdict criterion_geometry()
{
    const auto t0 = Clock::now();
    const auto ls = LevelSetInterface::circle({0.0, 0.0}, std::sqrt(3.0));
    QuadMesh quad(24);
    refine_interface_band(quad, ls, 1);
    const InducedMesh mesh = build_induced_mesh(std::move(quad), ls, 0.25);
    const FaceSet faces = enumerate_faces(mesh);
    const int p = 3;
    double area = 0.0, length = 0.0;
    for (int m = 0; m < int(mesh.macros.size()); ++m)
        if (mesh.macros[m].has_side[index(Side::Inner)])
            area += cut_cell_rule(mesh, m, Side::Inner, p).measure();
    for (const Face& f : faces.interface)
        length += interface_rule(f, p).measure();
    const double ea = std::abs(area / (3.0 * std::numbers::pi) - 1.0);
    const double el = std::abs(length / (2.0 * std::numbers::pi * std::sqrt(3.0)) - 1.0);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return {ea <= kGeometryRel && el <= kGeometryRel,
            " |K1| rel err " + fmt(ea) + ", arc length rel err " + fmt(el) + ", " + fixed(secs, 2) + " s"};
}

/// Q_q polynomial in coordinates scaled to the box [-1,1]^2 frame.
struct Poly {
    Box frame;
    int q;
    std::vector<double> c;

    double operator()(const Point& x) const
    {
        const double xi = (2.0 * x.x() - frame.lo.x() - frame.hi.x()) / frame.width();
        const double et = (2.0 * x.y() - frame.lo.y() - frame.hi.y()) / frame.height();
        double s = 0.0, pa = 1.0;
        for (int a = 0; a <= q; ++a, pa *= xi) {
            double pb = 1.0;
            for (int b = 0; b <= q; ++b, pb *= et)
                s += c[a + (q + 1) * b] * pa * pb;
        }
        return s;
    }
};

/* Oracle for the integral of f over box cap Omega_side, circle of radius r
   about the origin: exact y-intervals for each x, Gauss in y, and adaptive
   bisection in x between the kinks of the interval end points. */
class AreaOracle {
public:
    AreaOracle(double radius, int degree) : r_(radius), inner_(gauss_1d(degree / 2 + 2)), outer_(gauss_1d(10)) {}

    double integrate(const Box& box, Side side, const std::function<double(const Point&)>& f) const
    {
        std::vector<double> cuts{box.lo.x(), box.hi.x()};
        auto add = [&](double x) {
            if (x > box.lo.x() && x < box.hi.x())
                cuts.push_back(x);
        };
        add(-r_);
        add(r_);
        for (double y : {box.lo.y(), box.hi.y()})
            if (r_ * r_ > y * y) {
                add(std::sqrt(r_ * r_ - y * y));
                add(-std::sqrt(r_ * r_ - y * y));
            }
        std::sort(cuts.begin(), cuts.end());
        double total = 0.0;
        for (size_t i = 0; i + 1 < cuts.size(); ++i)
            total += adaptive(box, side, f, cuts[i], cuts[i + 1], 0, panel(box, side, f, cuts[i], cuts[i + 1]));
        return total;
    }

private:
    double column(const Box& box, Side side, const std::function<double(const Point&)>& f, double x) const
    {
        const double s2 = r_ * r_ - x * x;
        const double s = s2 > 0.0 ? std::sqrt(s2) : 0.0;
        const double a = std::max(box.lo.y(), -s), b = std::min(box.hi.y(), s);
        std::vector<std::pair<double, double>> pieces;
        if (side == Side::Inner) {
            if (s2 > 0.0 && b > a)
                pieces.push_back({a, b});
        } else if (s2 <= 0.0 || b <= a) {
            pieces.push_back({box.lo.y(), box.hi.y()});
        } else {
            pieces.push_back({box.lo.y(), a});
            pieces.push_back({b, box.hi.y()});
        }
        double sum = 0.0;
        for (auto [y0, y1] : pieces) {
            if (y1 <= y0)
                continue;
            for (size_t q = 0; q < inner_.points.size(); ++q) {
                const double y = 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * inner_.points[q];
                sum += 0.5 * (y1 - y0) * inner_.weights[q] * f(Point(x, y));
            }
        }
        return sum;
    }

    double panel(const Box& box, Side side, const std::function<double(const Point&)>& f, double x0, double x1) const
    {
        double sum = 0.0;
        for (size_t q = 0; q < outer_.points.size(); ++q) {
            const double x = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * outer_.points[q];
            sum += 0.5 * (x1 - x0) * outer_.weights[q] * column(box, side, f, x);
        }
        return sum;
    }

    double adaptive(const Box& box, Side side, const std::function<double(const Point&)>& f, double x0, double x1,
                    int depth, double whole) const
    {
        const double xm = 0.5 * (x0 + x1);
        const double left = panel(box, side, f, x0, xm), right = panel(box, side, f, xm, x1);
        if (depth >= 48 || std::abs(left + right - whole) <= 1e-15 * std::max(1.0, std::abs(whole)))
            return left + right;
        return adaptive(box, side, f, x0, xm, depth + 1, left) + adaptive(box, side, f, xm, x1, depth + 1, right);
    }

    double r_;
    GaussRule inner_;
    GaussRule outer_;
};

Verdict criterion_quadrature()
{
    const double r0 = std::sqrt(3.0);
    const auto ls = LevelSetInterface::circle({0.0, 0.0}, r0);
    QuadMesh quad(24);
    refine_interface_band(quad, ls, 1);
    const InducedMesh mesh = build_induced_mesh(std::move(quad), ls, 0.25);
    std::vector<int> cut;
    for (int m = 0; m < int(mesh.macros.size()); ++m)
        if (mesh.macros[m].cut)
            cut.push_back(m);

    std::mt19937_64 rng(20261014);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    double worst = 0.0;
    int trials = 0;
    for (int p : {1, 2, 3}) {
        const AreaOracle oracle(r0, 2 * p);
        for (int t = 0; t < 100; ++t, ++trials) {
            const int m = cut[rng() % cut.size()];
            const Side side = rng() % 2 ? Side::Inner : Side::Outer;
            const MacroElement& mac = mesh.macros[m];
            Poly f{mac.bounds, 2 * p, {}};
            for (int i = 0; i < (2 * p + 1) * (2 * p + 1); ++i)
                f.c.push_back(coef(rng));
            const QuadratureRule rule = cut_cell_rule(mesh, m, side, p);
            double q = 0.0;
            for (size_t i = 0; i < rule.size(); ++i)
                q += rule.weights[i] * f(rule.points[i]);
            double exact = 0.0, scale = 0.0;
            for (const CellKey& k : mac.members) {
                const Box& box = mesh.leaves.at(k).box;
                exact += oracle.integrate(box, side, f);
                scale += oracle.integrate(box, side, [&](const Point& x) { return std::abs(f(x)); });
            }
            worst = std::max(worst, std::abs(q - exact) / scale);
        }
    }
    return {worst <= kQuadratureRel,
            " worst |Q - oracle| / oracle(|f|) " + fmt(worst) + " over " + std::to_string(trials) + " polynomials"};
}

/* ---------- form identities (5, 6, 7) ---------- */

struct SmallProblem {
    std::shared_ptr<const ExactSolution> exact;
    MaterialData material;
    InducedMesh mesh;
    FaceSet faces;
    std::unique_ptr<Discretization> disc;
    std::unique_ptr<FormEvaluator> forms;

    SmallProblem(int n, int p)
        : exact(make_exact(reference_config())), material(material_from(exact)),
          mesh(build_induced_mesh(
              [&] {
                  QuadMesh q(n);
                  refine_interface_band(q, exact->interface(), 1);
                  return q;
              }(),
              exact->interface(), 0.25))
    {
        faces = enumerate_faces(mesh);
        disc = std::make_unique<Discretization>(mesh, faces, p);
        forms = std::make_unique<FormEvaluator>(*disc, material, 1.0);
    }
};

Eigen::VectorXcd random_vector(std::mt19937_64& rng, int size)
{
    std::normal_distribution<double> g;
    Eigen::VectorXcd v(size);
    for (int i = 0; i < size; ++i)
        v[i] = Complex(g(rng), g(rng));
    return v;
}

double rel_diff(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

Verdict criterion_adjoint()
{
    SmallProblem prob(8, 2);
    std::mt19937_64 rng(5);
    const auto& layout = prob.disc->layout();
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto v = random_vector(rng, layout.num_field());
        const auto s = random_vector(rng, layout.num_multiplier());
        worst = std::max(worst, rel_diff(prob.forms->scalar_inner(prob.forms->lifting(v), s),
                                         prob.forms->tangential_trace(v, s)));
    }
    return {worst <= kAdjointRel, " worst relative gap " + fmt(worst) + " over 50 pairs (n=8, p=2)"};
}

Verdict criterion_ibp()
{
    SmallProblem prob(8, 2);
    std::mt19937_64 rng(6);
    const auto& layout = prob.disc->layout();
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto v = random_vector(rng, layout.num_field());
        const auto q = random_vector(rng, layout.num_multiplier());
        worst = std::max(worst, rel_diff(prob.forms->form_b(v, q), prob.forms->form_b_ibp(v, q)));
    }
    return {worst <= kIbpRel, " worst relative gap " + fmt(worst) + " over 100 pairs (n=8, p=2)"};
}

Verdict criterion_positivity()
{
    SmallProblem prob(8, 2);
    std::mt19937_64 rng(7);
    const auto& layout = prob.disc->layout();
    double min_a = INFINITY, min_c = INFINITY, worst_imag = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto v = random_vector(rng, layout.num_field());
        const auto q = random_vector(rng, layout.num_multiplier());
        const Complex a = prob.forms->form_a(v, v);
        const Complex c = prob.forms->form_c(q, q);
        min_a = std::min(min_a, a.real());
        min_c = std::min(min_c, c.real());
        worst_imag = std::max({worst_imag, std::abs(a.imag()) / std::max(1.0, a.real()),
                               std::abs(c.imag()) / std::max(1.0, c.real())});
    }
    return {min_a >= 0.0 && min_c >= 0.0 && worst_imag <= kImagRel,
            " min Re a " + fmt(min_a) + ", min Re c " + fmt(min_c) + ", worst |Im|/max(1,Re) " + fmt(worst_imag)};
}

/* ---------- manufactured solution (8) ---------- */

/* The circle points are rounded, so |x|^2 - 3 is a few ulps rather than zero
   and E there is of order 1e-15 times its interior scale. */
Verdict criterion_manufactured()
{
    const ManufacturedSolution exact;
    const double r0 = exact.radius();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi), coord(-2.0, 2.0);

    double on_gamma = 0.0, flux = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double th = angle(rng);
        const Point x(r0 * std::cos(th), r0 * std::sin(th));
        for (Side s : both_sides)
            on_gamma = std::max(on_gamma, exact.field(x, s).norm());
        const Complex fi = exact.curl(x, Side::Inner) / exact.mu(Side::Inner);
        const Complex fo = exact.curl(x, Side::Outer) / exact.mu(Side::Outer);
        flux = std::max(flux, std::abs(fi - fo) / std::max(1.0, std::abs(fi)));
    }

    const double step = 1e-6;
    double div_worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Point x(coord(rng), coord(rng));
        const Side s = exact.interface().side_of(x);
        const Point ex(step, 0.0), ey(0.0, step);
        const ComplexVector2 dx = (exact.field(x + ex, s) - exact.field(x - ex, s)) / (2.0 * step);
        const ComplexVector2 dy = (exact.field(x + ey, s) - exact.field(x - ey, s)) / (2.0 * step);
        const double grad = std::sqrt(dx.squaredNorm() + dy.squaredNorm());
        div_worst = std::max(div_worst, std::abs(dx[0] + dy[1]) / grad);
    }
    return {on_gamma <= kOnInterface && div_worst <= kDivFd && flux <= kFluxJump,
            " max |E| on circle " + fmt(on_gamma) + ", div residual / |grad E| " + fmt(div_worst) +
                ", flux jump " + fmt(flux)};
}

/* ---------- polynomial probe (11) ---------- */

Verdict criterion_probe()
{
    RunConfig cfg = reference_config();
    cfg.interface = InterfaceKind::Line;
    Verdict v{true, ""};
    for (int p : {1, 2, 3}) {
        const CaseResult r = run_single(cfg, p, 8);
        v.detail += " p=" + std::to_string(p) + ": " + fmt(r.errors.rel_err_X);
        if (!(r.errors.rel_err_X <= kProbe))
            v.pass = false;
    }
    return v;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance checks"};
    std::vector<int> only;
    bool strict = false;
    app.add_option("--only", only, "run only these criteria")->delimiter(',');
    app.add_flag("--strict", strict, "exit non-zero if any criterion fails");
    CLI11_PARSE(app, argc, argv);

    limit_memory();

    const std::vector<std::pair<std::string, std::function<Verdict()>>> checks{
        {"convergence rates p=1,2,3", criterion_rates},
        {"p=4 reaches 1e-4 within 150k DoFs", criterion_p4},
        {"multiplier norm decay", criterion_phi},
        {"geometry exactness", criterion_geometry},
        {"lifting adjoint identity", criterion_adjoint},
        {"integration-by-parts identity for b", criterion_ibp},
        {"form positivity", criterion_positivity},
        {"manufactured solution identities", criterion_manufactured},
        {"divergence control ratio", criterion_divergence},
        {"cut quadrature vs adaptive oracle", criterion_quadrature},
        {"straight-interface polynomial probe", criterion_probe},
    };
    const std::set<int> selected(only.begin(), only.end());
    int failed = 0, broken = 0;
    for (size_t i = 0; i < checks.size(); ++i) {
        const int id = int(i) + 1;
        if (!selected.empty() && !selected.count(id))
            continue;
        Verdict v;
        try {
            v = checks[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string(" not evaluated: ") + e.what()};
            ++broken;
        }
        if (!v.pass)
            ++failed;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << checks[i].first << "):" << v.detail
                  << std::endl;
    }
    if (broken > 0)
        return 2;
    return strict && failed > 0 ? 1 : 0;
}
