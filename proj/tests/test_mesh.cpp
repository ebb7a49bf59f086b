#include <doctest.h>

#include <cmath>
#include <sstream>

#include "uldg/mesh.hpp"

using namespace uldg;

namespace {

const LevelSetInterface circle = LevelSetInterface::circle({0.0, 0.0}, std::sqrt(3.0));
const LevelSetInterface far_away = LevelSetInterface::circle({50.0, 50.0}, 1.0);

bool touches_interface(const QuadMesh& m, const CellKey& k)
{
    return compute_cut_topology(m.bounds(k), circle).element_class != ElementClass::Interior1 &&
           compute_cut_topology(m.bounds(k), circle).element_class != ElementClass::Interior2;
}

/// Exhaustive 2:1 audit over all pairs of edge-adjacent leaves.
bool balanced_by_audit(const QuadMesh& m)
{
    for (const CellKey& k : m.leaves()) {
        const Box b = m.bounds(k);
        for (const CellKey& o : m.leaves_touching(b)) {
            const Box c = m.bounds(o);
            const double ox = std::min(b.hi.x(), c.hi.x()) - std::max(b.lo.x(), c.lo.x());
            const double oy = std::min(b.hi.y(), c.hi.y()) - std::max(b.lo.y(), c.lo.y());
            const bool edge_adjacent = (ox > 1e-12 && std::abs(oy) < 1e-12) || (oy > 1e-12 && std::abs(ox) < 1e-12);
            if (edge_adjacent && std::abs(k.level - o.level) > 1)
                return false;
        }
    }
    return true;
}

double interface_face_length(const FaceSet& fs)
{
    double len = 0.0;
    for (const Face& f : fs.interface)
        for (const InterfaceArc& arc : f.arcs)
            len += (arc.end() - arc.start()).norm();
    return len;
}

} // namespace

TEST_CASE("uniform base grid")
{
    const QuadMesh m24 = build_initial_mesh(24);
    CHECK(m24.leaves().size() == 576);
    CHECK(m24.side(*m24.leaves().begin()) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(build_initial_mesh(2).leaves().size() == 4);
    const QuadMesh m40 = build_initial_mesh(40);
    CHECK(m40.leaves().size() == 1600);
    CHECK(m40.base_h() == doctest::Approx(0.1).epsilon(1e-15));
    CHECK_THROWS_AS(build_initial_mesh(0), Error);
}

TEST_CASE("interface band refinement")
{
    QuadMesh m = build_initial_mesh(40);
    refine_interface_band(m, circle, 0);
    CHECK(m.leaves().size() == 1600);

    refine_interface_band(m, circle, 1);
    CHECK(m.max_level() == 1);
    CHECK(m.is_balanced());
    CHECK(balanced_by_audit(m));
    int cut_leaves = 0;
    for (const CellKey& k : m.leaves()) {
        if (touches_interface(m, k)) {
            ++cut_leaves;
            CHECK(k.level == 1);
        }
        // bulk cells well away from the circle stay at the base level
        const double d = std::abs(m.bounds(k).center().norm() - std::sqrt(3.0));
        if (d > 0.5)
            CHECK(k.level == 0);
    }
    CHECK(cut_leaves > 0);
}

TEST_CASE("balance holds after two levels of refinement")
{
    QuadMesh m = build_initial_mesh(12);
    refine_interface_band(m, circle, 2);
    CHECK(m.max_level() == 2);
    CHECK(balanced_by_audit(m));
}

TEST_CASE("edge neighbours across a hanging node")
{
    QuadMesh m(2);
    m.refine({0, 0, 0});
    // the coarse east neighbour sees the two fine cells along its west edge
    const auto west = m.edge_neighbors({0, 1, 0}, Direction::West);
    CHECK(west.size() == 2);
    CHECK(m.edge_neighbors({0, 1, 0}, Direction::East).empty());
    const auto east = m.edge_neighbors({1, 1, 0}, Direction::East);
    REQUIRE(east.size() == 1);
    CHECK(east[0] == CellKey{0, 1, 0});
}

TEST_CASE("large cut leaves stay singletons")
{
    // x = 0.5 crosses the unit cells at mid-edge
    const auto line = LevelSetInterface::line({1.0, 0.0}, 0.5);
    const InducedMesh im = build_induced_mesh(QuadMesh(4), line, 0.25);
    CHECK(im.macros.size() == 16);
    for (const MacroElement& mac : im.macros)
        CHECK(mac.members.size() == 1);
}

TEST_CASE("small cut leaf merges toward its small side")
{
    // x = 0.1 leaves only 10 % of the cells [0,1] x [.,.] on the inner side
    const auto line = LevelSetInterface::line({1.0, 0.0}, 0.1);
    const InducedMesh im = build_induced_mesh(QuadMesh(4), line, 0.25);
    CHECK(im.macros.size() < 16);
    for (const MacroElement& mac : im.macros) {
        if (!mac.cut)
            continue;
        REQUIRE(mac.members.size() >= 2);
        const UnionLargeness u = union_largeness(im.quad, mac.members, line, 0.25);
        CHECK(u.large[0]);
        CHECK(u.large[1]);
        // the absorbed neighbour lies on the inner (west) side
        bool west = false;
        for (const CellKey& k : mac.members)
            west = west || im.quad.bounds(k).hi.x() <= 0.0 + 1e-12;
        CHECK(west);
    }
    CHECK(im.total_area() == doctest::Approx(16.0).epsilon(1e-14));
}

TEST_CASE("every interface macro-element on the n=40 mesh is large")
{
    QuadMesh q(40);
    refine_interface_band(q, circle, 1);
    const InducedMesh im = build_induced_mesh(std::move(q), circle, 0.25);
    int cut = 0;
    for (const MacroElement& mac : im.macros) {
        if (!mac.cut)
            continue;
        ++cut;
        const UnionLargeness u = union_largeness(im.quad, mac.members, circle, 0.25);
        CHECK(u.large[0]);
        CHECK(u.large[1]);
        CHECK(mac.eta < 1.0);
    }
    CHECK(cut > 0);
    CHECK(im.total_area() == doctest::Approx(16.0).epsilon(1e-13));
}

TEST_CASE("improper cut is reported with the cell")
{
    // the top edge of the cell [0,2]x[-2,0] is crossed twice
    const LevelSetInterface off = LevelSetInterface::circle({1.0, 0.0}, 0.5);
    try {
        build_induced_mesh(QuadMesh(2), off, 0.25);
        FAIL("expected ImproperCut");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ImproperCut);
        CHECK(std::string(e.what()).find("cell(level=0,") != std::string::npos);
    }
}

TEST_CASE("faces of a 2x2 mesh without interface")
{
    const InducedMesh im = build_induced_mesh(QuadMesh(2), far_away, 0.25);
    const FaceSet fs = enumerate_faces(im);
    CHECK(fs.interior.size() == 4);
    CHECK(fs.boundary.size() == 8);
    CHECK(fs.interface.empty());
    double perimeter = 0.0;
    for (const Face& f : fs.boundary) {
        perimeter += f.segment.length();
        CHECK(f.plus == -1);
        // normal points out of the domain
        CHECK(f.normal.dot(f.segment.at(0.5)) > 0.0);
    }
    CHECK(perimeter == doctest::Approx(16.0).epsilon(1e-15));
}

TEST_CASE("hanging node faces split the coarse edge")
{
    QuadMesh q(2);
    q.refine({0, 0, 0});
    const InducedMesh im = build_induced_mesh(std::move(q), far_away, 0.25);
    const FaceSet fs = enumerate_faces(im);
    // the coarse cell east of the refined one sees a vertical edge x = 0, y in [-2, 0]
    double len = 0.0;
    int count = 0;
    for (const Face& f : fs.interior) {
        const bool on_edge = std::abs(f.segment.a.x()) < 1e-12 && std::abs(f.segment.b.x()) < 1e-12 &&
                             f.segment.a.y() <= 1e-12 && f.segment.b.y() <= 1e-12;
        if (on_edge) {
            ++count;
            len += f.segment.length();
            CHECK(f.segment.length() == doctest::Approx(1.0));
        }
    }
    CHECK(count == 2);
    CHECK(len == doctest::Approx(2.0));
    CHECK(fs.interior.size() == 10);
}

TEST_CASE("faces with the circle: boundary perimeter and interface pieces")
{
    QuadMesh q(24);
    refine_interface_band(q, circle, 1);
    const InducedMesh im = build_induced_mesh(std::move(q), circle, 0.25);
    const FaceSet fs = enumerate_faces(im);
    double perimeter = 0.0;
    for (const Face& f : fs.boundary) {
        perimeter += f.segment.length();
        CHECK(f.side == Side::Outer);
    }
    CHECK(perimeter == doctest::Approx(16.0).epsilon(1e-14));
    for (const Face& f : fs.interface) {
        CHECK(f.minus == f.plus);
        CHECK_FALSE(f.arcs.empty());
    }
    // chords are shorter than the circle, but not by much
    const double chord = interface_face_length(fs);
    CHECK(chord < 2.0 * M_PI * std::sqrt(3.0));
    CHECK(chord > 0.999 * 2.0 * M_PI * std::sqrt(3.0));
}

TEST_CASE("mesh dump lists every macro-element")
{
    QuadMesh q(8);
    refine_interface_band(q, circle, 1);
    const InducedMesh im = build_induced_mesh(std::move(q), circle, 0.25);
    const FaceSet fs = enumerate_faces(im);
    std::ostringstream os;
    write_mesh_dump(os, im, fs, 2);
    const std::string s = os.str();
    CHECK_FALSE(s.empty());
    std::istringstream is(s);
    std::string line;
    size_t lines = 0;
    while (std::getline(is, line))
        ++lines;
    size_t arcs = 0;
    for (const Face& f : fs.interface)
        arcs += f.arcs.size();
    CHECK(lines == im.macros.size() + fs.interior.size() + fs.boundary.size() + arcs);
}
