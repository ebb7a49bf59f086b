#pragma once

#include <vector>

#include "uldg/geometry.hpp"
#include "uldg/mesh.hpp"

namespace uldg {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> points;
    std::vector<double> weights;
};

/// 1 <= m <= 64; exact for degree 2m - 1.
GaussRule gauss_1d(int m);

struct QuadratureRule {
    std::vector<Point> points;
    std::vector<double> weights;
    int target_order = 0;

    size_t size() const { return points.size(); }
    double measure() const;
    void append(const QuadratureRule& other);
};

/// Rule on a curve or segment; normals[q] is the unit normal at points[q].
struct SurfaceRule {
    std::vector<Point> points;
    std::vector<double> weights;
    std::vector<Point> normals;

    size_t size() const { return points.size(); }
    double measure() const;
    void append(const SurfaceRule& other);
};

/// Points per direction on uncut cells and straight faces.
constexpr int straight_points(int p) { return p + 2; }
/// Points per direction on cut pieces and arcs. A collapsed triangle turns a
/// Q_{2p} integrand into degree 4p + 1 in the radial parameter; along the arc
/// the integrand is not polynomial and two more points keep the error of the
/// forms near 1e-12 on coarse meshes.
constexpr int curved_points(int p) { return 2 * p + 4; }

QuadratureRule tensor_rule(const Box& cell, int m);
QuadratureRule cell_rule(const Box& cell, int p);

/// Collapsed rule on the triangle (a, b, c), counter-clockwise.
QuadratureRule triangle_rule(const Point& a, const Point& b, const Point& c, int m);

/// Collapsed rule on the region swept from `apex` to the arc, traversed from
/// start to end (or backwards when `reversed`). Throws NonpositiveWeight if
/// the sweep folds over.
QuadratureRule curved_triangle_rule(const Point& apex, const InterfaceArc& arc, bool reversed, int m);

/// Rule on cell cap Omega_side for a properly cut leaf: fan from the apex of
/// that side over the straight edge pieces and the arc.
QuadratureRule cut_leaf_rule(const Box& cell, const CutTopology& topo, const LevelSetInterface& ls, Side side,
                             int m);

/// Rule on the side-`side` part of a macro-element. `extra` adds points per
/// direction (used by error integrals of non-polynomial data). Throws
/// DegenerateRegion when that part is negligibly small.
QuadratureRule cut_cell_rule(const InducedMesh& mesh, int macro, Side side, int p, int extra = 0);

/// Arc rule with arc-length weights and normals pointing out of Omega_1.
SurfaceRule arc_rule(const InterfaceArc& arc, int m);

/// Rule along all arcs of an interface face.
SurfaceRule interface_rule(const Face& face, int p, int extra = 0);

/// Rule on a straight interior or boundary face; normals are the face normal.
SurfaceRule face_rule(const Face& face, int p, int extra = 0);

} // namespace uldg
