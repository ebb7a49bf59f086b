#include <doctest.h>

#include <cmath>
#include <random>

#include "uldg/dg_space.hpp"

using namespace uldg;

namespace {

const LevelSetInterface circle = LevelSetInterface::circle({0.0, 0.0}, std::sqrt(3.0));

struct Fixture {
    InducedMesh mesh;
    FaceSet faces;

    explicit Fixture(int n)
        : mesh(build_induced_mesh(
              [&] {
                  QuadMesh q(n);
                  refine_interface_band(q, circle, 1);
                  return q;
              }(),
              circle, 0.25)),
          faces(enumerate_faces(mesh))
    {}
};

} // namespace

TEST_CASE("scaled Legendre polynomials are orthonormal in the L2(-1,1)/2 sense")
{
    const GaussRule g = gauss_1d(12);
    for (int a = 0; a <= 6; ++a)
        for (int b = 0; b <= 6; ++b) {
            double s = 0.0;
            for (size_t q = 0; q < g.points.size(); ++q)
                s += g.weights[q] * legendre(a, g.points[q]) * legendre(b, g.points[q]);
            CHECK(s == doctest::Approx(a == b ? 2.0 : 0.0).epsilon(1e-13));
        }
    CHECK(legendre(2, 1.0) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
    CHECK(legendre_derivative(1, 0.3) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
}

TEST_CASE("constant basis function has zero gradient")
{
    const BasisSet basis(2);
    const Box box{{0.2, -0.1}, {0.7, 0.6}};
    Eigen::VectorXd v(basis.count()), dx(basis.count()), dy(basis.count());
    basis.evaluate(box, {0.4, 0.3}, v, dx, dy);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(dx[0] == 0.0);
    CHECK(dy[0] == 0.0);
}

TEST_CASE("v = (0, x) has unit curl")
{
    const BasisSet basis(1);
    const Box box{{-0.5, 0.0}, {1.5, 1.0}};
    // x = c0 L0 + c1 L1(xi) with xi = (2x - lo - hi) / width
    const double c0 = 0.5 * (box.lo.x() + box.hi.x());
    const double c1 = 0.5 * box.width() / std::sqrt(3.0);
    Eigen::VectorXd vy = Eigen::VectorXd::Zero(basis.count());
    vy[basis.index(0, 0)] = c0;
    vy[basis.index(1, 0)] = c1;
    Eigen::VectorXd v(basis.count()), dx(basis.count()), dy(basis.count());
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        const Point x(box.lo.x() + box.width() * u(rng), u(rng));
        basis.evaluate(box, x, v, dx, dy);
        CHECK(v.dot(vy) == doctest::Approx(x.x()).epsilon(1e-14));
        CHECK(dx.dot(vy) == doctest::Approx(1.0).epsilon(1e-14)); // curl (0, v_y) = d v_y / dx
        CHECK(dy.dot(vy) == doctest::Approx(0.0));
    }
}

TEST_CASE("basis gradients match central finite differences")
{
    const BasisSet basis(3);
    const Box box{{0.1, 0.2}, {0.4, 0.7}};
    const int idx = basis.index(2, 1);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int nb = basis.count();
    Eigen::VectorXd v(nb), dx(nb), dy(nb), vp(nb), vm(nb), tmp1(nb), tmp2(nb);
    const double h = 1e-6;
    for (int t = 0; t < 20; ++t) {
        const Point x(box.lo.x() + box.width() * u(rng), box.lo.y() + box.height() * u(rng));
        basis.evaluate(box, x, v, dx, dy);
        basis.evaluate(box, x + Point(h, 0.0), vp, tmp1, tmp2);
        basis.evaluate(box, x - Point(h, 0.0), vm, tmp1, tmp2);
        CHECK((vp[idx] - vm[idx]) / (2 * h) == doctest::Approx(dx[idx]).epsilon(1e-7));
        basis.evaluate(box, x + Point(0.0, h), vp, tmp1, tmp2);
        basis.evaluate(box, x - Point(0.0, h), vm, tmp1, tmp2);
        CHECK((vp[idx] - vm[idx]) / (2 * h) == doctest::Approx(dy[idx]).epsilon(1e-7));
    }
}

TEST_CASE("jumps and the DG magic formula")
{
    CHECK(jump(3.0, 3.0, false) == 0.0);
    CHECK(jump(3.0, 1.0, true) == 3.0);

    // v = (1, 0) on the inner copy, 0 on the outer, interface normal (1, 0), eps = (2, 1)
    const Point n(1.0, 0.0);
    const double eps1 = 2.0, eps2 = 1.0;
    const Point v1(1.0, 0.0), v2(0.0, 0.0);
    CHECK(jump(eps1 * v1.dot(n), eps2 * v2.dot(n), false) == 2.0);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    const BasisSet basis(3);
    const Box left{{-1.0, 0.0}, {0.0, 1.0}}, right{{0.0, 0.0}, {1.0, 1.0}};
    const int nb = basis.count();
    Eigen::VectorXd vl(nb), vr(nb), dx(nb), dy(nb);
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd a1 = Eigen::VectorXd::NullaryExpr(nb, [&] { return g(rng); });
        Eigen::VectorXd a2 = Eigen::VectorXd::NullaryExpr(nb, [&] { return g(rng); });
        Eigen::VectorXd b1 = Eigen::VectorXd::NullaryExpr(nb, [&] { return g(rng); });
        Eigen::VectorXd b2 = Eigen::VectorXd::NullaryExpr(nb, [&] { return g(rng); });
        const Point x(0.0, 0.1 + 0.8 * (t / 19.0));
        basis.evaluate(left, x, vl, dx, dy);
        basis.evaluate(right, x, vr, dx, dy);
        const double am = vl.dot(a1), ap = vr.dot(a2), bm = vl.dot(b1), bp = vr.dot(b2);
        const double lhs = jump(am * bm, ap * bp, false);
        const double rhs = am * jump(bm, bp, false) + jump(am, ap, false) * bp;
        CHECK(std::abs(lhs - rhs) <= 1e-13 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("dof layout: doubled unknowns on cut macro-elements")
{
    Fixture fx(8);
    for (int p = 1; p <= 3; ++p) {
        const DofLayout layout(fx.mesh, p);
        int expected = 0;
        for (const MacroElement& mac : fx.mesh.macros)
            expected += int(mac.has_side[0]) + int(mac.has_side[1]);
        CHECK(layout.num_blocks() == expected);
        CHECK(layout.basis_count() == (p + 1) * (p + 1));
        CHECK(layout.total() == 3 * layout.basis_count() * expected);
        for (int b = 0; b < layout.num_blocks(); ++b) {
            const auto& blk = layout.block(b);
            CHECK(layout.block_of(blk.macro, blk.side) == b);
            CHECK(fx.mesh.macros[blk.macro].has_side[index(blk.side)]);
        }
    }
}

TEST_CASE("mass matrices: identity times area on uncut blocks, SPD everywhere")
{
    Fixture fx(8);
    const Discretization disc(fx.mesh, fx.faces, 2);
    for (const BlockData& bd : disc.blocks()) {
        const MacroElement& mac = fx.mesh.macros[bd.macro];
        if (!mac.cut && mac.members.size() == 1) {
            const Eigen::MatrixXd expect = mac.area * Eigen::MatrixXd::Identity(bd.mass.rows(), bd.mass.cols());
            CHECK((bd.mass - expect).norm() <= 1e-12 * mac.area);
        }
        CHECK(bd.mass_llt.info() == Eigen::Success);
        CHECK((bd.mass - bd.mass.transpose()).norm() <= 1e-14 * bd.mass.norm());
        const Box sb = side_bounds(fx.mesh, bd.macro, bd.side);
        for (const Point& x : bd.rule.points) {
            CHECK(x.x() >= sb.lo.x() - 1e-12);
            CHECK(x.x() <= sb.hi.x() + 1e-12);
            CHECK(x.y() >= sb.lo.y() - 1e-12);
            CHECK(x.y() <= sb.hi.y() + 1e-12);
        }
        CHECK(sb.lo.x() >= mac.bounds.lo.x() - 1e-12);
        CHECK(sb.hi.y() <= mac.bounds.hi.y() + 1e-12);
    }
}

TEST_CASE("face data resolve owners to blocks on the right side")
{
    Fixture fx(8);
    const Discretization disc(fx.mesh, fx.faces, 1);
    const auto& layout = disc.layout();
    int boundary = 0, interface = 0;
    for (const FaceData& fd : disc.face_data()) {
        REQUIRE(fd.minus >= 0);
        CHECK(fd.minus_value.rows() == long(fd.rule.size()));
        CHECK(fd.theta >= 1.0);
        if (fd.kind == FaceKind::Boundary) {
            ++boundary;
            CHECK(fd.plus == -1);
        } else {
            REQUIRE(fd.plus >= 0);
            if (fd.kind == FaceKind::InterfaceArc) {
                ++interface;
                CHECK(layout.block(fd.minus).side == Side::Inner);
                CHECK(layout.block(fd.plus).side == Side::Outer);
                CHECK(layout.block(fd.minus).macro == layout.block(fd.plus).macro);
            } else {
                CHECK(layout.block(fd.minus).side == layout.block(fd.plus).side);
            }
        }
    }
    CHECK(boundary > 0);
    CHECK(interface > 0);
}

TEST_CASE("face theta is one away from the interface")
{
    Fixture fx(8);
    // boundary faces near the corners touch only uncut cells
    int far = 0;
    for (const Face& f : fx.faces.boundary) {
        if (f.segment.a.norm() < 2.4 || f.segment.b.norm() < 2.4)
            continue;
        ++far;
        CHECK(face_theta(fx.mesh, f, 2) == 1.0);
    }
    CHECK(far > 0);
    double biggest = 1.0;
    for (const Face& f : fx.faces.interface)
        biggest = std::max(biggest, face_theta(fx.mesh, f, 2));
    CHECK(biggest > 1.0);
}
