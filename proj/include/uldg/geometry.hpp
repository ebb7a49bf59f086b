#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "uldg/errors.hpp"

namespace uldg {

using Point = Eigen::Vector2d;

/// Material side. Inner is the region where the level set is <= 0 (Omega_1),
/// Outer where it is > 0 (Omega_2). Exact zeros belong to Inner.
enum class Side : int { Inner = 0, Outer = 1 };

constexpr int index(Side s) { return static_cast<int>(s); }
constexpr Side other(Side s) { return s == Side::Inner ? Side::Outer : Side::Inner; }
constexpr std::array<Side, 2> both_sides{Side::Inner, Side::Outer};

struct Segment {
    Point a;
    Point b;

    double length() const { return (b - a).norm(); }
    Point at(double t) const { return a + t * (b - a); }
    double distance(const Point& x) const;
};

/// Axis-aligned rectangle. Corners are numbered counter-clockwise starting at
/// lo; edge k runs from corner k to corner k+1 (bottom, right, top, left).
struct Box {
    Point lo;
    Point hi;

    double width() const { return hi.x() - lo.x(); }
    double height() const { return hi.y() - lo.y(); }
    double area() const { return width() * height(); }
    Point center() const { return 0.5 * (lo + hi); }
    Point corner(int k) const;
    Segment edge(int k) const;
};

struct Circle {
    Point center;
    double radius;
};

/// Implicit interface description. Cheap to copy: the callable state is
/// shared.
class LevelSetInterface {
public:
    using ScalarFn = std::function<double(const Point&)>;
    using GradientFn = std::function<Point(const Point&)>;

    static LevelSetInterface circle(const Point& center, double radius);
    static LevelSetInterface generic(ScalarFn value, GradientFn gradient);
    /// phi(x) = normal . x - offset, held as a Generic interface.
    static LevelSetInterface line(const Point& normal, double offset);

    double evaluate(const Point& x) const;
    Point gradient(const Point& x) const;
    /// Unit normal pointing out of Omega_1.
    Point unit_normal(const Point& x) const;
    Side side_of(const Point& x) const { return evaluate(x) <= 0.0 ? Side::Inner : Side::Outer; }

    bool is_circle() const { return circle_ != nullptr; }
    const Circle& circle_params() const;

    /// Parameters t in (0,1) where the side changes along the segment, sorted.
    /// Circle: closed-form roots. Generic: 32-sample bracketing plus bisection.
    std::vector<double> segment_crossings(const Segment& seg) const;

private:
    std::shared_ptr<const Circle> circle_;
    std::shared_ptr<const ScalarFn> value_;
    std::shared_ptr<const GradientFn> gradient_;
};

/// Piece of the zero level set between two points, parametrized over [0,1].
/// Circle: by angle along the short arc. Generic: as a graph over the chord,
/// each parameter projected onto the zero set along the chord normal.
class InterfaceArc {
public:
    InterfaceArc(LevelSetInterface ls, const Point& from, const Point& to);

    Point point(double s) const;
    Point derivative(double s) const;
    const Point& start() const { return from_; }
    const Point& end() const { return to_; }
    const LevelSetInterface& level_set() const { return ls_; }

private:
    double offset(double s) const;

    LevelSetInterface ls_;
    Point from_;
    Point to_;
    double theta0_ = 0.0;
    double dtheta_ = 0.0;
};

enum class ElementClass { Interior1, Interior2, CutProper, CutImproper };

const char* to_string(ElementClass c);

/// Largest distance from the arc to a segment: 256 samples polished by golden
/// section, cross-checked against 512 samples.
double arc_segment_deviation(const InterfaceArc& arc, const Segment& chord, double h);

struct CutTopology {
    ElementClass element_class = ElementClass::Interior1;
    std::array<Side, 4> corner_sides{};
    /// Ordered so that walking counter-clockwise from crossings[0] passes the
    /// Inner corners before reaching crossings[1].
    std::array<Point, 2> crossings{};
    std::array<int, 2> crossing_edges{-1, -1};
    Segment chord{};
    double hausdorff = 0.0;
    double eta = 0.0;
    std::array<Point, 2> apex{};
    std::array<double, 2> apex_distance{};
    /// edge_fractions[edge][side] = |e cap Omega_side| / |e|
    std::array<std::array<double, 2>, 4> edge_fractions{};

    bool is_cut() const
    {
        return element_class == ElementClass::CutProper || element_class == ElementClass::CutImproper;
    }
    Side uncut_side() const
    {
        return element_class == ElementClass::Interior1 ? Side::Inner : Side::Outer;
    }
};

ElementClass classify_element(const Box& cell, const LevelSetInterface& ls);

/// Classification plus, for proper cuts, crossings, chord, deviation and
/// edge fractions.
CutTopology compute_cut_topology(const Box& cell, const LevelSetInterface& ls);

struct EdgeFractionReport {
    std::array<std::array<double, 2>, 4> fractions{};
    /// large[side]: every edge touching that side has fraction >= delta0
    std::array<bool, 2> large{};
    /// smallest nonzero fraction over both sides
    double deficiency = 1.0;
};

EdgeFractionReport edge_fractions(const Box& cell, const LevelSetInterface& ls, double delta0 = 0.25);

struct ChordDeviation {
    Segment chord;
    double hausdorff = 0.0;
    double eta = 0.0;
    std::array<Point, 2> apex{};
    std::array<double, 2> apex_distance{};
};

ChordDeviation chord_and_deviation(const Box& cell, const LevelSetInterface& ls);

/// Deviation of a set of arc pieces from a chord, normalized by the farthest
/// candidate vertex on each side.
ChordDeviation deviation_from_chord(const Segment& chord, const std::vector<InterfaceArc>& arcs,
                                    const std::vector<Point>& vertices, const LevelSetInterface& ls,
                                    double h);

/// t + sqrt(t^2 - 1), t >= 1
double growth_T(double t);

/// T((1 + 3 eta) / (1 - eta))^(6p), computed through its logarithm.
double theta_K(double eta, int p);
double log_theta_K(double eta, int p);

} // namespace uldg
