#include "uldg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace uldg {

namespace {

constexpr int generic_edge_samples = 32;
constexpr double generic_root_tolerance = 1e-13;
constexpr int deviation_samples = 256;

std::string describe(const Box& b)
{
    return "[" + std::to_string(b.lo.x()) + "," + std::to_string(b.hi.x()) + "]x[" + std::to_string(b.lo.y()) +
           "," + std::to_string(b.hi.y()) + "]";
}

/* Golden-section maximization of f on [a,b]. */
template<typename F>
double golden_max(F&& f, double a, double b)
{
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-15; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return std::max({fc, fd, f(0.5 * (a + b))});
}

double sampled_deviation(const InterfaceArc& arc, const Segment& chord, int samples)
{
    auto dist = [&](double s) { return chord.distance(arc.point(s)); };
    int best = 0;
    double best_val = -1.0;
    for (int k = 0; k <= samples; ++k) {
        double v = dist(double(k) / samples);
        if (v > best_val) {
            best_val = v;
            best = k;
        }
    }
    double lo = double(std::max(best - 1, 0)) / samples;
    double hi = double(std::min(best + 1, samples)) / samples;
    return std::max(best_val, golden_max(dist, lo, hi));
}

} // namespace

Point Box::corner(int k) const
{
    switch (k & 3) {
    case 0: return lo;
    case 1: return {hi.x(), lo.y()};
    case 2: return hi;
    default: return {lo.x(), hi.y()};
    }
}

Segment Box::edge(int k) const { return {corner(k), corner(k + 1)}; }

double Segment::distance(const Point& x) const
{
    Point d = b - a;
    double len2 = d.squaredNorm();
    double t = len2 > 0.0 ? std::clamp((x - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (x - at(t)).norm();
}

LevelSetInterface LevelSetInterface::circle(const Point& center, double radius)
{
    if (!(radius > 0.0))
        throw Error(ErrorKind::DomainError, "circle radius must be positive");
    LevelSetInterface ls;
    ls.circle_ = std::make_shared<const Circle>(Circle{center, radius});
    return ls;
}

LevelSetInterface LevelSetInterface::generic(ScalarFn value, GradientFn gradient)
{
    LevelSetInterface ls;
    ls.value_ = std::make_shared<const ScalarFn>(std::move(value));
    ls.gradient_ = std::make_shared<const GradientFn>(std::move(gradient));
    return ls;
}

LevelSetInterface LevelSetInterface::line(const Point& normal, double offset)
{
    Point n = normal.normalized();
    return generic([n, offset](const Point& x) { return n.dot(x) - offset; }, [n](const Point&) { return n; });
}

double LevelSetInterface::evaluate(const Point& x) const
{
    if (circle_)
        return (x - circle_->center).squaredNorm() - circle_->radius * circle_->radius;
    return (*value_)(x);
}

Point LevelSetInterface::gradient(const Point& x) const
{
    if (circle_)
        return 2.0 * (x - circle_->center);
    return (*gradient_)(x);
}

Point LevelSetInterface::unit_normal(const Point& x) const { return gradient(x).normalized(); }

const Circle& LevelSetInterface::circle_params() const
{
    if (!circle_)
        throw Error(ErrorKind::DomainError, "interface is not a circle");
    return *circle_;
}

std::vector<double> LevelSetInterface::segment_crossings(const Segment& seg) const
{
    std::vector<double> roots;
    const Point d = seg.b - seg.a;
    if (circle_) {
        const Point r0 = seg.a - circle_->center;
        const double qa = d.squaredNorm();
        const double qb = 2.0 * d.dot(r0);
        const double qc = r0.squaredNorm() - circle_->radius * circle_->radius;
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc <= 0.0)
            return roots;
        const double sq = std::sqrt(disc);
        // numerically stable pair of roots
        const double q = -0.5 * (qb + std::copysign(sq, qb));
        double t1 = q / qa;
        double t2 = q != 0.0 ? qc / q : -t1;
        if (t1 > t2)
            std::swap(t1, t2);
        for (double t : {t1, t2})
            if (t > 0.0 && t < 1.0)
                roots.push_back(t);
        return roots;
    }

    std::array<double, generic_edge_samples + 1> vals{};
    double scale = 0.0;
    for (int k = 0; k <= generic_edge_samples; ++k) {
        vals[k] = evaluate(seg.at(double(k) / generic_edge_samples));
        scale = std::max(scale, std::abs(vals[k]));
    }
    const double len = seg.length();
    const double grad_scale = gradient(seg.at(0.5)).norm() * len;
    if (scale <= 1e-14 * std::max(grad_scale, 1e-300))
        throw Error(ErrorKind::Degenerate, "level set vanishes along segment");
    for (int k = 0; k < generic_edge_samples; ++k) {
        const bool in_a = vals[k] <= 0.0;
        const bool in_b = vals[k + 1] <= 0.0;
        if (in_a == in_b)
            continue;
        double lo = double(k) / generic_edge_samples;
        double hi = double(k + 1) / generic_edge_samples;
        while ((hi - lo) * len > generic_root_tolerance) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi)
                break;
            if ((evaluate(seg.at(mid)) <= 0.0) == in_a)
                lo = mid;
            else
                hi = mid;
        }
        double t = 0.5 * (lo + hi);
        if (t > 0.0 && t < 1.0)
            roots.push_back(t);
    }
    return roots;
}

InterfaceArc::InterfaceArc(LevelSetInterface ls, const Point& from, const Point& to)
    : ls_(std::move(ls)), from_(from), to_(to)
{
    if (ls_.is_circle()) {
        const Circle& c = ls_.circle_params();
        theta0_ = std::atan2(from.y() - c.center.y(), from.x() - c.center.x());
        double theta1 = std::atan2(to.y() - c.center.y(), to.x() - c.center.x());
        double dt = theta1 - theta0_;
        while (dt > std::numbers::pi)
            dt -= 2.0 * std::numbers::pi;
        while (dt <= -std::numbers::pi)
            dt += 2.0 * std::numbers::pi;
        dtheta_ = dt;
    }
}

double InterfaceArc::offset(double s) const
{
    const Point d = to_ - from_;
    const double len = d.norm();
    const Point w(-d.y() / len, d.x() / len);
    const Point base = from_ + s * d;
    auto f = [&](double t) { return ls_.evaluate(base + t * w); };

    double f0 = f(0.0);
    if (f0 == 0.0)
        return 0.0;
    // bracket the root nearest to the chord
    double step = len / 64.0;
    double lo = 0.0, hi = 0.0;
    bool found = false;
    for (int k = 1; k <= 128 && !found; ++k) {
        for (double sgn : {1.0, -1.0}) {
            double t = sgn * k * step;
            if ((f(t) <= 0.0) != (f0 <= 0.0)) {
                lo = sgn * (k - 1) * step;
                hi = t;
                found = true;
                break;
            }
        }
    }
    if (!found)
        throw Error(ErrorKind::InconsistentTopology, "interface is not a graph over its chord");
    const bool in_lo = f(lo) <= 0.0;
    for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-15 * len; ++it) {
        double mid = 0.5 * (lo + hi);
        if ((f(mid) <= 0.0) == in_lo)
            lo = mid;
        else
            hi = mid;
    }
    double t = 0.5 * (lo + hi);
    // Newton polish
    for (int it = 0; it < 2; ++it) {
        double g = ls_.gradient(base + t * w).dot(w);
        if (g == 0.0)
            break;
        double nt = t - f(t) / g;
        if (std::abs(nt - t) > 1e-8 * len)
            break;
        t = nt;
    }
    return t;
}

Point InterfaceArc::point(double s) const
{
    if (ls_.is_circle()) {
        const Circle& c = ls_.circle_params();
        const double th = theta0_ + s * dtheta_;
        return c.center + c.radius * Point(std::cos(th), std::sin(th));
    }
    const Point d = to_ - from_;
    const Point w = Point(-d.y(), d.x()).normalized();
    return from_ + s * d + offset(s) * w;
}

Point InterfaceArc::derivative(double s) const
{
    if (ls_.is_circle()) {
        const Circle& c = ls_.circle_params();
        const double th = theta0_ + s * dtheta_;
        return c.radius * dtheta_ * Point(-std::sin(th), std::cos(th));
    }
    const Point d = to_ - from_;
    const Point w = Point(-d.y(), d.x()).normalized();
    const Point x = from_ + s * d + offset(s) * w;
    const Point g = ls_.gradient(x);
    const double dt = -g.dot(d) / g.dot(w);
    return d + dt * w;
}

const char* to_string(ElementClass c)
{
    switch (c) {
    case ElementClass::Interior1: return "Interior1";
    case ElementClass::Interior2: return "Interior2";
    case ElementClass::CutProper: return "CutProper";
    case ElementClass::CutImproper: return "CutImproper";
    }
    return "?";
}

double arc_segment_deviation(const InterfaceArc& arc, const Segment& chord, double h)
{
    const double coarse = sampled_deviation(arc, chord, deviation_samples);
    const double fine = sampled_deviation(arc, chord, 2 * deviation_samples);
    if (std::abs(coarse - fine) >= 1e-10 * h)
        throw Error(ErrorKind::Degenerate, "interface deviation sampling did not converge");
    return std::max(coarse, fine);
}

namespace {

struct EdgeCrossings {
    std::array<std::vector<double>, 4> roots;
    std::array<Side, 4> corner_sides;
};

EdgeCrossings edge_crossings(const Box& cell, const LevelSetInterface& ls)
{
    EdgeCrossings ec;
    for (int k = 0; k < 4; ++k) {
        ec.corner_sides[k] = ls.side_of(cell.corner(k));
        try {
            ec.roots[k] = ls.segment_crossings(cell.edge(k));
        } catch (const Error& e) {
            throw Error(e.kind(), "cell " + describe(cell) + " edge " + std::to_string(k) + ": " + e.what());
        }
    }
    return ec;
}

ElementClass classify_from(const Box& cell, const LevelSetInterface& ls, const EdgeCrossings& ec)
{
    int total = 0;
    for (int k = 0; k < 4; ++k) {
        if (ec.roots[k].size() > 1)
            return ElementClass::CutImproper;
        total += int(ec.roots[k].size());
        // an edge with both ends on one side must not be crossed
        const bool same = ec.corner_sides[k] == ec.corner_sides[(k + 1) & 3];
        if (same != ec.roots[k].empty())
            return ElementClass::CutImproper;
    }
    if (total == 2)
        return ElementClass::CutProper;
    if (total != 0)
        return ElementClass::CutImproper;
    if (ls.is_circle() && ec.corner_sides[0] == Side::Outer) {
        // the whole circle could sit inside the cell without touching edges
        const Circle& c = ls.circle_params();
        Point nearest = c.center.cwiseMax(cell.lo).cwiseMin(cell.hi);
        if ((nearest - c.center).norm() < c.radius)
            return ElementClass::CutImproper;
    }
    return ec.corner_sides[0] == Side::Inner ? ElementClass::Interior1 : ElementClass::Interior2;
}

} // namespace

ElementClass classify_element(const Box& cell, const LevelSetInterface& ls)
{
    if (!(cell.width() > 0.0) || !(cell.height() > 0.0))
        throw Error(ErrorKind::DomainError, "cell must have positive size");
    return classify_from(cell, ls, edge_crossings(cell, ls));
}

ChordDeviation deviation_from_chord(const Segment& chord, const std::vector<InterfaceArc>& arcs,
                                    const std::vector<Point>& vertices, const LevelSetInterface& ls,
                                    double h)
{
    ChordDeviation out;
    out.chord = chord;
    for (const auto& arc : arcs)
        out.hausdorff = std::max(out.hausdorff, arc_segment_deviation(arc, chord, h));
    for (Side s : both_sides) {
        double best = -1.0;
        for (const auto& v : vertices) {
            if (ls.side_of(v) != s)
                continue;
            double d = chord.distance(v);
            if (d > best) {
                best = d;
                out.apex[index(s)] = v;
            }
        }
        if (best <= 0.0)
            throw Error(ErrorKind::InconsistentTopology,
                        std::string("no vertex on side ") + (s == Side::Inner ? "1" : "2"));
        out.apex_distance[index(s)] = best;
        out.eta = std::max(out.eta, out.hausdorff / best);
    }
    return out;
}

CutTopology compute_cut_topology(const Box& cell, const LevelSetInterface& ls)
{
    if (!(cell.width() > 0.0) || !(cell.height() > 0.0))
        throw Error(ErrorKind::DomainError, "cell must have positive size");
    CutTopology topo;
    const EdgeCrossings ec = edge_crossings(cell, ls);
    topo.element_class = classify_from(cell, ls, ec);
    topo.corner_sides = ec.corner_sides;

    for (int k = 0; k < 4; ++k) {
        auto& f = topo.edge_fractions[k];
        f = {0.0, 0.0};
        const Side sa = ec.corner_sides[k];
        const Side sb = ec.corner_sides[(k + 1) & 3];
        if (ec.roots[k].size() == 1) {
            double t = ec.roots[k][0];
            f[index(sa)] += t;
            f[index(sb)] += 1.0 - t;
        } else if (ec.roots[k].empty()) {
            f[index(sa)] = 1.0;
        } else {
            // improper: alternate sides between roots
            double prev = 0.0;
            Side s = sa;
            for (double t : ec.roots[k]) {
                f[index(s)] += t - prev;
                prev = t;
                s = other(s);
            }
            f[index(s)] += 1.0 - prev;
        }
    }

    if (topo.element_class != ElementClass::CutProper)
        return topo;

    // Order crossings: crossings[0] is the one after which Inner corners follow.
    int n = 0;
    for (int k = 0; k < 4; ++k) {
        if (ec.roots[k].empty())
            continue;
        const Point x = cell.edge(k).at(ec.roots[k][0]);
        const bool enters_inner = ec.corner_sides[(k + 1) & 3] == Side::Inner;
        const int slot = enters_inner ? 0 : 1;
        topo.crossings[slot] = x;
        topo.crossing_edges[slot] = k;
        ++n;
    }
    if (n != 2 || topo.crossing_edges[0] < 0 || topo.crossing_edges[1] < 0)
        throw Error(ErrorKind::InconsistentTopology, "cell " + describe(cell));

    std::vector<Point> corners;
    for (int k = 0; k < 4; ++k)
        corners.push_back(cell.corner(k));
    const Segment chord{topo.crossings[0], topo.crossings[1]};
    const InterfaceArc arc(ls, topo.crossings[0], topo.crossings[1]);
    ChordDeviation dev;
    try {
        dev = deviation_from_chord(chord, {arc}, corners, ls, std::max(cell.width(), cell.height()));
    } catch (const Error& e) {
        throw Error(e.kind(), "cell " + describe(cell) + ": " + e.what());
    }
    topo.chord = chord;
    topo.hausdorff = dev.hausdorff;
    topo.eta = dev.eta;
    topo.apex = dev.apex;
    topo.apex_distance = dev.apex_distance;
    return topo;
}

EdgeFractionReport edge_fractions(const Box& cell, const LevelSetInterface& ls, double delta0)
{
    const CutTopology topo = compute_cut_topology(cell, ls);
    EdgeFractionReport rep;
    rep.fractions = topo.edge_fractions;
    rep.large = {true, true};
    for (int k = 0; k < 4; ++k)
        for (Side s : both_sides) {
            double f = topo.edge_fractions[k][index(s)];
            if (f <= 0.0)
                continue;
            rep.deficiency = std::min(rep.deficiency, f);
            if (f < delta0)
                rep.large[index(s)] = false;
        }
    return rep;
}

ChordDeviation chord_and_deviation(const Box& cell, const LevelSetInterface& ls)
{
    const CutTopology topo = compute_cut_topology(cell, ls);
    if (topo.element_class != ElementClass::CutProper)
        throw Error(ErrorKind::InconsistentTopology, "cell " + describe(cell) + " is not properly cut");
    ChordDeviation out;
    out.chord = topo.chord;
    out.hausdorff = topo.hausdorff;
    out.eta = topo.eta;
    out.apex = topo.apex;
    out.apex_distance = topo.apex_distance;
    return out;
}

double growth_T(double t)
{
    if (!(t >= 1.0))
        throw Error(ErrorKind::DomainError, "T(t) requires t >= 1");
    return t + std::sqrt(t * t - 1.0);
}

double log_theta_K(double eta, int p)
{
    if (!(eta >= 0.0) || !(eta < 1.0))
        throw Error(ErrorKind::DomainError, "interface deviation must lie in [0,1)");
    if (p < 1)
        throw Error(ErrorKind::DomainError, "polynomial order must be >= 1");
    const double t = (1.0 + 3.0 * eta) / (1.0 - eta);
    return 6.0 * p * std::log(growth_T(t));
}

double theta_K(double eta, int p) { return std::exp(log_theta_K(eta, p)); }

} // namespace uldg
