#include "uldg/diagnostics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace uldg {

namespace {

constexpr Complex I{0.0, 1.0};

double sq(const Complex& z) { return std::norm(z); }

Side side_at(const ExactSolution& exact, const Point& x) { return exact.interface().side_of(x); }

} // namespace

ComplexVector2 ExactSolution::boundary(const Point& x) const { return field(x, side_at(*this, x)); }

ManufacturedSolution::ManufacturedSolution(double r0, double k, std::array<double, 2> mu, std::array<double, 2> eps)
    : r0_(r0), k_(k), mu_(mu), eps_(eps)
{
    if (!(k > 0.0))
        throw Error(ErrorKind::Config, "wave number must be positive");
}

LevelSetInterface ManufacturedSolution::interface() const { return LevelSetInterface::circle({0.0, 0.0}, r0_); }

Complex ManufacturedSolution::potential(const Point& x, Side s) const
{
    const double r = x.squaredNorm() - r0_ * r0_;
    return mu(s) * r * r * std::exp(I * (k_ * x.x()));
}

ComplexVector2 ManufacturedSolution::field(const Point& x, Side s) const
{
    const double r = x.squaredNorm() - r0_ * r0_;
    const Complex e = mu(s) * std::exp(I * (k_ * x.x()));
    return {e * (4.0 * x.y() * r), -e * (4.0 * x.x() * r + I * k_ * r * r)};
}

Complex ManufacturedSolution::curl(const Point& x, Side s) const
{
    const double r = x.squaredNorm() - r0_ * r0_;
    const Complex q = 8.0 * x.squaredNorm() + 8.0 * r + 8.0 * I * k_ * x.x() * r - k_ * k_ * r * r;
    return -mu(s) * std::exp(I * (k_ * x.x())) * q;
}

ComplexVector2 ManufacturedSolution::source(const Point& x, Side s) const
{
    const double r = x.squaredNorm() - r0_ * r0_;
    const double k = k_;
    const Complex e = std::exp(I * (k * x.x()));
    const Complex q = 8.0 * x.squaredNorm() + 8.0 * r + 8.0 * I * k * x.x() * r - k * k * r * r;
    const Complex q1 = 32.0 * x.x() + 8.0 * I * k * (r + 2.0 * x.x() * x.x()) - 4.0 * k * k * r * x.x();
    const Complex q2 = 32.0 * x.y() + 16.0 * I * k * x.x() * x.y() - 4.0 * k * k * r * x.y();
    // mu^-1 curl E = -e q on both sides
    const ComplexVector2 cc{-e * q2, e * (I * k * q + q1)};
    return cc - (k * k * eps(s)) * field(x, s);
}

StraightInterfaceSolution::StraightInterfaceSolution(Point normal, double offset, Complex a, Complex b,
                                                     Complex gamma, double k, std::array<double, 2> mu,
                                                     std::array<double, 2> eps)
    : n_(normal.normalized()), c_(offset), a_(a), b_(b), gamma_(gamma), k_(k), mu_(mu), eps_(eps)
{
    if (!(k > 0.0))
        throw Error(ErrorKind::Config, "wave number must be positive");
}

LevelSetInterface StraightInterfaceSolution::interface() const { return LevelSetInterface::line(n_, c_); }

ComplexVector2 StraightInterfaceSolution::field(const Point& x, Side s) const
{
    const Point tau = tangent(n_);
    const double dist = n_.dot(x) - c_;
    const Complex ct = a_ + mu(s) * gamma_ * dist;
    const Complex cn = b_ / eps(s);
    return {ct * tau.x() + cn * n_.x(), ct * tau.y() + cn * n_.y()};
}

Complex StraightInterfaceSolution::curl(const Point&, Side s) const { return mu(s) * gamma_; }

ComplexVector2 StraightInterfaceSolution::source(const Point& x, Side s) const
{
    return -(k_ * k_ * eps(s)) * field(x, s);
}

MaterialData material_from(std::shared_ptr<const ExactSolution> exact)
{
    MaterialData m;
    m.mu = {exact->mu(Side::Inner), exact->mu(Side::Outer)};
    m.eps = {exact->eps(Side::Inner), exact->eps(Side::Outer)};
    m.k = exact->wave_number();
    m.source = [exact](const Point& x, Side s) { return exact->source(x, s); };
    m.boundary = [exact](const Point& x, Side) { return exact->boundary(x); };
    return m;
}

namespace {

struct NormParts {
    double curl = 0.0, tangential = 0.0, normal = 0.0, l2 = 0.0;
    double total(double k) const { return curl + tangential + normal + k * k * l2; }
};

struct FieldTraces {
    Eigen::VectorXcd mx, my, px, py;
};

FieldTraces traces(const Discretization& disc, const FaceData& fd, const Eigen::VectorXcd& v)
{
    const int nb = disc.layout().basis_count();
    FieldTraces t;
    const int om = disc.layout().field_offset(fd.minus);
    t.mx = fd.minus_value.cast<Complex>() * v.segment(om, nb);
    t.my = fd.minus_value.cast<Complex>() * v.segment(om + nb, nb);
    if (fd.plus >= 0) {
        const int op = disc.layout().field_offset(fd.plus);
        t.px = fd.plus_value.cast<Complex>() * v.segment(op, nb);
        t.py = fd.plus_value.cast<Complex>() * v.segment(op + nb, nb);
    }
    return t;
}

/* Squared X-norm pieces of exact - E_h and of exact, plus the discrete jump
   norms of E_h itself. Boundary faces measure traces against g. */
void accumulate_norms(const Discretization& disc, const Eigen::VectorXcd& field, const ExactSolution& exact,
                      double alpha0, NormParts& err, NormParts& ref, NormParts* discrete, double* div2)
{
    const DofLayout& lay = disc.layout();
    const int nb = lay.basis_count();
    const int p = disc.order();
    for (int b = 0; b < lay.num_blocks(); ++b) {
        const BlockData& bd = disc.blocks()[b];
        const int off = lay.field_offset(b);
        const Eigen::VectorXcd cx = field.segment(off, nb), cy = field.segment(off + nb, nb);
        const Eigen::VectorXcd ex = bd.table.value.cast<Complex>() * cx;
        const Eigen::VectorXcd ey = bd.table.value.cast<Complex>() * cy;
        const Eigen::VectorXcd curl = bd.table.dx.cast<Complex>() * cy - bd.table.dy.cast<Complex>() * cx;
        const Eigen::VectorXcd div = bd.table.dx.cast<Complex>() * cx + bd.table.dy.cast<Complex>() * cy;
        const double e = exact.eps(bd.side);
        for (size_t q = 0; q < bd.rule.size(); ++q) {
            const Point& x = bd.rule.points[q];
            const double w = bd.rule.weights[q];
            const ComplexVector2 E = exact.field(x, bd.side);
            const Complex cE = exact.curl(x, bd.side);
            err.curl += w * sq(cE - curl[q]);
            ref.curl += w * sq(cE);
            err.l2 += w * (sq(E[0] - ex[q]) + sq(E[1] - ey[q]));
            ref.l2 += w * (sq(E[0]) + sq(E[1]));
            if (div2)
                *div2 += w * e * e * sq(div[q]);
        }
    }
    for (const FaceData& fd : disc.face_data()) {
        const bool boundary = fd.plus < 0;
        const FacePenalty pen = face_penalty(fd, alpha0, p);
        const double scale = pen.alpha / pen.tau;
        const FieldTraces t = traces(disc, fd, field);
        const Side sm = disc.blocks()[fd.minus].side;
        const Side sp = boundary ? sm : disc.blocks()[fd.plus].side;
        const double em = exact.eps(sm), ep = exact.eps(sp);
        for (size_t q = 0; q < fd.rule.size(); ++q) {
            const Point& x = fd.rule.points[q];
            const Point& n = fd.rule.normals[q];
            const Point tau = tangent(n);
            const double w = fd.rule.weights[q] * scale;
            const ComplexVector2 Em = exact.field(x, sm);
            const ComplexVector2 Ep = boundary ? exact.boundary(x) : exact.field(x, sp);
            const Complex hm_t = t.mx[q] * tau.x() + t.my[q] * tau.y();
            const Complex hp_t = boundary ? Ep[0] * tau.x() + Ep[1] * tau.y() : t.px[q] * tau.x() + t.py[q] * tau.y();
            const Complex em_t = Em[0] * tau.x() + Em[1] * tau.y();
            const Complex ep_t = Ep[0] * tau.x() + Ep[1] * tau.y();
            err.tangential += w * sq((em_t - hm_t) - (ep_t - hp_t));
            ref.tangential += w * sq(em_t - ep_t);
            if (discrete)
                discrete->tangential += w * sq(hm_t - hp_t);
            if (boundary)
                continue;
            const Complex hm_n = em * (t.mx[q] * n.x() + t.my[q] * n.y());
            const Complex hp_n = ep * (t.px[q] * n.x() + t.py[q] * n.y());
            const Complex em_n = em * (Em[0] * n.x() + Em[1] * n.y());
            const Complex ep_n = ep * (Ep[0] * n.x() + Ep[1] * n.y());
            err.normal += w * sq((em_n - hm_n) - (ep_n - hp_n));
            ref.normal += w * sq(em_n - ep_n);
            if (discrete)
                discrete->normal += w * sq(hm_n - hp_n);
        }
    }
}

} // namespace

double error_X(const Discretization& disc, const Eigen::VectorXcd& field, const ExactSolution& exact, double alpha0,
               double* exact_norm)
{
    NormParts err, ref;
    accumulate_norms(disc, field, exact, alpha0, err, ref, nullptr, nullptr);
    const double k = exact.wave_number();
    if (exact_norm)
        *exact_norm = std::sqrt(ref.total(k));
    return std::sqrt(err.total(k));
}

ErrorReport dg_errors(const Discretization& disc, const Eigen::VectorXcd& x, const ExactSolution& exact,
                      double alpha0)
{
    const DofLayout& lay = disc.layout();
    if (x.size() != lay.total())
        throw Error(ErrorKind::DomainError, "solution vector does not match the layout");
    const Eigen::VectorXcd field = x.head(lay.num_field());
    const Eigen::VectorXcd phi = x.tail(lay.num_multiplier());

    NormParts err, ref, discrete;
    double div2 = 0.0;
    accumulate_norms(disc, field, exact, alpha0, err, ref, &discrete, &div2);
    const double k = exact.wave_number();

    ErrorReport rep;
    rep.err_X = std::sqrt(err.total(k));
    rep.norm_exact_X = std::sqrt(ref.total(k));
    rep.rel_err_X = rep.err_X / rep.norm_exact_X;
    rep.err_L2 = std::sqrt(err.l2);
    rep.err_curl = std::sqrt(err.curl);
    rep.err_jump = std::sqrt(err.tangential + err.normal);
    rep.div_resid = std::sqrt(div2);
    rep.tangential_jump = std::sqrt(discrete.tangential);
    rep.normal_jump = std::sqrt(discrete.normal);

    MaterialData mat;
    const FormEvaluator ev(disc, mat, alpha0);
    rep.norm_phi = std::sqrt(std::max(0.0, ev.form_c(phi, phi).real()));
    for (const FaceData& fd : disc.face_data())
        rep.theta_max = std::max(rep.theta_max, fd.theta);
    rep.dofs = lay.total();
    return rep;
}

Eigen::VectorXcd project_exact(const Discretization& disc, const ExactSolution& exact)
{
    const DofLayout& lay = disc.layout();
    const int nb = lay.basis_count();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(lay.num_field());
    for (int b = 0; b < lay.num_blocks(); ++b) {
        const BlockData& bd = disc.blocks()[b];
        Eigen::VectorXcd rx = Eigen::VectorXcd::Zero(nb), ry = Eigen::VectorXcd::Zero(nb);
        for (size_t q = 0; q < bd.rule.size(); ++q) {
            const ComplexVector2 E = exact.field(bd.rule.points[q], bd.side);
            const auto v = bd.table.value.row(q).transpose().cast<Complex>();
            rx += (bd.rule.weights[q] * E[0]) * v;
            ry += (bd.rule.weights[q] * E[1]) * v;
        }
        out.segment(lay.field_offset(b), nb) = bd.mass_llt.solve(rx);
        out.segment(lay.field_offset(b) + nb, nb) = bd.mass_llt.solve(ry);
    }
    return out;
}

double fit_rate(const std::vector<std::pair<double, double>>& series)
{
    if (series.size() < 3)
        throw Error(ErrorKind::InsufficientPoints, "rate fit needs at least three points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (auto [n, e] : series) {
        if (!(n > 0.0) || !(e > 0.0))
            throw Error(ErrorKind::DomainError, "rate fit needs positive data");
        const double lx = std::log(n), ly = std::log(e);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double m = double(series.size());
    const double den = m * sxx - sx * sx;
    if (!(std::abs(den) > 0.0))
        throw Error(ErrorKind::InsufficientPoints, "rate fit needs distinct sizes");
    return (m * sxy - sx * sy) / den;
}

void write_csv_header(std::ostream& os) { os << "p,n,dofs,rel_err_X,norm_phi,div_resid,solve_seconds\n"; }

void write_csv_row(std::ostream& os, int p, int n, const ErrorReport& rep, double solve_seconds)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << p << ',' << n << ',' << rep.dofs << ',' << std::scientific << std::setprecision(8) << rep.rel_err_X << ','
       << rep.norm_phi << ',' << rep.div_resid << ',' << std::fixed << std::setprecision(3) << solve_seconds << '\n';
    os.flags(flags);
    os.precision(prec);
}

} // namespace uldg
