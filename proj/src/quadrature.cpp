#include "uldg/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace uldg {

GaussRule gauss_1d(int m)
{
    if (m < 1 || m > 64)
        throw Error(ErrorKind::DomainError, "Gauss rule needs 1 <= m <= 64, got " + std::to_string(m));
    GaussRule g;
    g.points.assign(m, 0.0);
    g.weights.assign(m, 0.0);
    if (m == 1) {
        g.weights[0] = 2.0;
        return g;
    }
    // Legendre P_m and its derivative by the three-term recurrence
    auto legendre = [m](double x, double& dp) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= m; ++k) {
            const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = m * (x * p1 - p0) / (x * x - 1.0);
        return p1;
    };
    for (int i = 0; i < m / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            const double dx = legendre(x, dp) / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        legendre(x, dp);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.points[i] = -x;
        g.points[m - 1 - i] = x;
        g.weights[i] = w;
        g.weights[m - 1 - i] = w;
    }
    if (m % 2 == 1) {
        double dp = 0.0;
        legendre(0.0, dp);
        g.weights[m / 2] = 2.0 / (dp * dp);
    }
    return g;
}

double QuadratureRule::measure() const
{
    double s = 0.0;
    for (double w : weights)
        s += w;
    return s;
}

void QuadratureRule::append(const QuadratureRule& other)
{
    points.insert(points.end(), other.points.begin(), other.points.end());
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
    target_order = target_order == 0 ? other.target_order : std::min(target_order, other.target_order);
}

double SurfaceRule::measure() const
{
    double s = 0.0;
    for (double w : weights)
        s += w;
    return s;
}

void SurfaceRule::append(const SurfaceRule& other)
{
    points.insert(points.end(), other.points.begin(), other.points.end());
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
    normals.insert(normals.end(), other.normals.begin(), other.normals.end());
}

namespace {

/* Gauss rule mapped to [0, 1]. */
GaussRule unit_gauss(int m)
{
    GaussRule g = gauss_1d(m);
    for (int i = 0; i < m; ++i) {
        g.points[i] = 0.5 * (g.points[i] + 1.0);
        g.weights[i] *= 0.5;
    }
    return g;
}

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

} // namespace

QuadratureRule tensor_rule(const Box& cell, int m)
{
    const GaussRule g = unit_gauss(m);
    QuadratureRule r;
    r.target_order = 2 * m - 1;
    r.points.reserve(m * m);
    r.weights.reserve(m * m);
    const double w = cell.width(), h = cell.height();
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            r.points.emplace_back(cell.lo.x() + w * g.points[i], cell.lo.y() + h * g.points[j]);
            r.weights.push_back(w * h * g.weights[i] * g.weights[j]);
        }
    return r;
}

QuadratureRule cell_rule(const Box& cell, int p) { return tensor_rule(cell, straight_points(p)); }

QuadratureRule triangle_rule(const Point& a, const Point& b, const Point& c, int m)
{
    const double det = cross(b - a, c - a);
    const double scale = std::max((b - a).squaredNorm(), (c - a).squaredNorm());
    QuadratureRule r;
    r.target_order = 2 * m - 2;
    if (std::abs(det) <= 1e-14 * scale)
        return r;
    if (det < 0.0)
        throw Error(ErrorKind::NonpositiveWeight, "clockwise fan triangle");
    const GaussRule g = unit_gauss(m);
    for (int j = 0; j < m; ++j) {
        const double t = g.points[j];
        for (int i = 0; i < m; ++i) {
            const double s = g.points[i];
            r.points.push_back(a + t * (b + s * (c - b) - a));
            r.weights.push_back(g.weights[i] * g.weights[j] * t * det);
        }
    }
    return r;
}

QuadratureRule curved_triangle_rule(const Point& apex, const InterfaceArc& arc, bool reversed, int m)
{
    const GaussRule g = unit_gauss(m);
    QuadratureRule r;
    r.target_order = 2 * m - 2;
    for (int i = 0; i < m; ++i) {
        const double s = reversed ? 1.0 - g.points[i] : g.points[i];
        const Point gam = arc.point(s);
        const Point dgam = reversed ? Point(-arc.derivative(s)) : arc.derivative(s);
        const double det = cross(gam - apex, dgam);
        if (!(det > 0.0))
            throw Error(ErrorKind::NonpositiveWeight, "curved fan piece folds over near (" +
                                                          std::to_string(gam.x()) + ", " + std::to_string(gam.y()) +
                                                          ")");
        for (int j = 0; j < m; ++j) {
            const double t = g.points[j];
            r.points.push_back(apex + t * (gam - apex));
            r.weights.push_back(g.weights[i] * g.weights[j] * t * det);
        }
    }
    return r;
}

QuadratureRule cut_leaf_rule(const Box& cell, const CutTopology& topo, const LevelSetInterface& ls, Side side,
                             int m)
{
    if (topo.element_class != ElementClass::CutProper)
        throw Error(ErrorKind::InconsistentTopology, "cut rule requested for a cell that is not properly cut");
    const int e0 = topo.crossing_edges[0];
    const int e1 = topo.crossing_edges[1];
    // counter-clockwise chain of the straight part of the boundary
    std::vector<Point> chain;
    int from_edge = side == Side::Inner ? e0 : e1;
    int to_edge = side == Side::Inner ? e1 : e0;
    chain.push_back(side == Side::Inner ? topo.crossings[0] : topo.crossings[1]);
    for (int k = (from_edge + 1) & 3;; k = (k + 1) & 3) {
        chain.push_back(cell.corner(k));
        if (k == to_edge)
            break;
    }
    chain.push_back(side == Side::Inner ? topo.crossings[1] : topo.crossings[0]);

    const Point apex = topo.apex[index(side)];
    QuadratureRule r;
    for (size_t k = 0; k + 1 < chain.size(); ++k) {
        const Point& a = chain[k];
        const Point& b = chain[k + 1];
        if ((a - apex).norm() == 0.0 || (b - apex).norm() == 0.0)
            continue;
        r.append(triangle_rule(apex, a, b, m));
    }
    const InterfaceArc arc(ls, topo.crossings[0], topo.crossings[1]);
    r.append(curved_triangle_rule(apex, arc, side == Side::Inner, m));
    r.target_order = 2 * m - 2;
    return r;
}

QuadratureRule cut_cell_rule(const InducedMesh& mesh, int macro, Side side, int p, int extra)
{
    const MacroElement& mac = mesh.macros.at(macro);
    const int m_cut = curved_points(p) + extra;
    const int m_plain = straight_points(p) + extra;
    QuadratureRule r;
    for (const auto& k : mac.members) {
        const LeafRecord& rec = mesh.leaves.at(k);
        if (rec.topo.is_cut()) {
            try {
                r.append(cut_leaf_rule(rec.box, rec.topo, mesh.level_set, side, m_cut));
            } catch (const Error& e) {
                throw Error(e.kind(), "macro-element " + std::to_string(macro) + ": " + e.what());
            }
        } else if (rec.topo.uncut_side() == side) {
            r.append(tensor_rule(rec.box, m_plain));
        }
    }
    if (mac.has_side[index(side)] && r.measure() < 1e-14 * mac.area)
        throw Error(ErrorKind::DegenerateRegion,
                    "macro-element " + std::to_string(macro) + " has a negligible side " +
                        std::to_string(index(side) + 1) + " part; merging should have absorbed it");
    return r;
}

SurfaceRule arc_rule(const InterfaceArc& arc, int m)
{
    const GaussRule g = unit_gauss(m);
    SurfaceRule r;
    for (int i = 0; i < m; ++i) {
        const double s = g.points[i];
        const Point x = arc.point(s);
        r.points.push_back(x);
        r.weights.push_back(g.weights[i] * arc.derivative(s).norm());
        r.normals.push_back(arc.level_set().unit_normal(x));
    }
    return r;
}

SurfaceRule interface_rule(const Face& face, int p, int extra)
{
    SurfaceRule r;
    for (const auto& arc : face.arcs)
        r.append(arc_rule(arc, curved_points(p) + extra));
    return r;
}

SurfaceRule face_rule(const Face& face, int p, int extra)
{
    const int m = straight_points(p) + extra;
    const GaussRule g = unit_gauss(m);
    const double len = face.segment.length();
    SurfaceRule r;
    for (int i = 0; i < m; ++i) {
        r.points.push_back(face.segment.at(g.points[i]));
        r.weights.push_back(g.weights[i] * len);
        r.normals.push_back(face.normal);
    }
    return r;
}

} // namespace uldg
