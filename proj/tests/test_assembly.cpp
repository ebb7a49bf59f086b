#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "uldg/diagnostics.hpp"

using namespace uldg;

namespace {

const LevelSetInterface circle = LevelSetInterface::circle({0.0, 0.0}, std::sqrt(3.0));
const LevelSetInterface far_away = LevelSetInterface::circle({50.0, 50.0}, 1.0);

struct Problem {
    InducedMesh mesh;
    FaceSet faces;
    Discretization disc;

    Problem(const LevelSetInterface& ls, int n, int p, int refine = 1)
        : mesh(build_induced_mesh(
              [&] {
                  QuadMesh q(n);
                  refine_interface_band(q, ls, refine);
                  return q;
              }(),
              ls, 0.25)),
          faces(enumerate_faces(mesh)), disc(mesh, faces, p)
    {}
};

MaterialData manufactured_material()
{
    return material_from(std::make_shared<ManufacturedSolution>());
}

/// Same Q_2 field on both sides; vanishes on the boundary of (-2,2)^2.
class BubbleField : public ExactSolution {
public:
    double mu(Side) const override { return 1.0; }
    double eps(Side s) const override { return s == Side::Inner ? 2.0 : 1.0; }
    double wave_number() const override { return 1.0; }
    LevelSetInterface interface() const override { return circle; }
    ComplexVector2 field(const Point& x, Side) const override
    {
        const double b = (x.x() * x.x() - 4.0) * (x.y() * x.y() - 4.0);
        return {Complex(b, 0.5 * b), Complex(-b, 2.0 * b)};
    }
    Complex curl(const Point&, Side) const override { return 0.0; }
    ComplexVector2 source(const Point&, Side) const override { return ComplexVector2::Zero(); }
};

Eigen::VectorXcd random_vector(std::mt19937_64& rng, int n)
{
    std::normal_distribution<double> g;
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i)
        v[i] = Complex(g(rng), g(rng));
    return v;
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

} // namespace

TEST_CASE("lifting of a continuous field with zero boundary trace vanishes")
{
    Problem pr(circle, 8, 2);
    const MaterialData mat = manufactured_material();
    const FormEvaluator forms(pr.disc, mat, 1.0);
    const Eigen::VectorXcd v = project_exact(pr.disc, BubbleField{});
    const Eigen::VectorXcd lift = forms.lifting(v);
    CHECK(lift.norm() <= 1e-10 * v.norm());
}

TEST_CASE("lifting adjoint identity on random pairs")
{
    Problem pr(circle, 8, 1);
    const MaterialData mat = manufactured_material();
    const FormEvaluator forms(pr.disc, mat, 1.0);
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
        const auto v = random_vector(rng, pr.disc.layout().num_field());
        const auto s = random_vector(rng, pr.disc.layout().num_multiplier());
        CHECK(rel(forms.scalar_inner(forms.lifting(v), s), forms.tangential_trace(v, s)) <= 1e-11);
    }
}

TEST_CASE("boundary lifting vanishes for data without tangential trace")
{
    Problem pr(circle, 8, 2);
    MaterialData mat = manufactured_material();
    mat.boundary = [](const Point& x, Side) {
        return ComplexVector2(x.y() * x.y() - 4.0, x.x() * x.x() - 4.0);
    };
    const FormEvaluator zero(pr.disc, mat, 1.0);
    CHECK(zero.boundary_lifting().norm() <= 1e-12);
    mat.boundary = [](const Point& x, Side) { return ComplexVector2(1.0, x.x()); };
    const FormEvaluator nonzero(pr.disc, mat, 1.0);
    CHECK(nonzero.boundary_lifting().norm() > 1e-3);
}

TEST_CASE("form a is Hermitian and nonnegative")
{
    Problem pr(circle, 8, 2);
    const MaterialData mat = manufactured_material();
    const FormEvaluator forms(pr.disc, mat, 1.0);
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const auto u = random_vector(rng, pr.disc.layout().num_field());
        const auto v = random_vector(rng, pr.disc.layout().num_field());
        const Complex avv = forms.form_a(v, v);
        CHECK(avv.real() >= 0.0);
        CHECK(std::abs(avv.imag()) <= 1e-12 * avv.real());
        CHECK(rel(forms.form_a(u, v), std::conj(forms.form_a(v, u))) <= 1e-12);
    }
}

TEST_CASE("form a of a globally continuous bubble field reduces to the curl term")
{
    // no interface, so the normal flux of the bubble is continuous too
    Problem pr(far_away, 8, 2);
    const MaterialData mat = manufactured_material();
    const FormEvaluator forms(pr.disc, mat, 1.0);
    const Eigen::VectorXcd v = project_exact(pr.disc, BubbleField{});
    // curl of the bubble field: d/dx v_y - d/dy v_x with v = b * (1 + 0.5i, -1 + 2i)
    double expect = 0.0;
    for (const BlockData& bd : pr.disc.blocks()) {
        const double mu = mat.mu[index(bd.side)];
        for (size_t q = 0; q < bd.rule.size(); ++q) {
            const Point& x = bd.rule.points[q];
            const double bx = 2.0 * x.x() * (x.y() * x.y() - 4.0), by = 2.0 * x.y() * (x.x() * x.x() - 4.0);
            const Complex c = Complex(-1.0, 2.0) * bx - Complex(1.0, 0.5) * by;
            expect += bd.rule.weights[q] * std::norm(c) / mu;
        }
    }
    CHECK(forms.form_a(v, v).real() == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("the two formulas for b agree")
{
    Problem pr(circle, 8, 2);
    const MaterialData mat = manufactured_material();
    const FormEvaluator forms(pr.disc, mat, 1.0);
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const auto v = random_vector(rng, pr.disc.layout().num_field());
        const auto q = random_vector(rng, pr.disc.layout().num_multiplier());
        CHECK(rel(forms.form_b(v, q), forms.form_b_ibp(v, q)) <= 1e-11);
    }
    const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(pr.disc.layout().num_field());
    const auto q = random_vector(rng, pr.disc.layout().num_multiplier());
    CHECK(forms.form_b(zero, q) == Complex(0.0));
}

TEST_CASE("form c: positivity and no null space")
{
    Problem pr(far_away, 2, 1, 0);
    const MaterialData mat = manufactured_material();
    const SystemComponents sc = assemble_components(pr.disc, mat, 1.0);
    const Eigen::MatrixXd C(sc.C);
    CHECK((C - C.transpose()).norm() <= 1e-13 * C.norm());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    CHECK(es.eigenvalues().minCoeff() > 1e-8 * es.eigenvalues().maxCoeff());

    const FormEvaluator forms(pr.disc, mat, 1.0);
    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
        const auto q = random_vector(rng, pr.disc.layout().num_multiplier());
        const Complex c = forms.form_c(q, q);
        CHECK(c.real() > 0.0);
        CHECK(std::abs(c.imag()) <= 1e-12 * c.real());
    }
}

TEST_CASE("c(1, 1) reduces to the boundary penalty")
{
    for (int p = 1; p <= 3; ++p) {
        Problem pr(far_away, 2, p, 0);
        const MaterialData mat = manufactured_material();
        const FormEvaluator forms(pr.disc, mat, 1.0);
        const DofLayout& layout = pr.disc.layout();
        Eigen::VectorXcd one = Eigen::VectorXcd::Zero(layout.num_multiplier());
        for (int b = 0; b < layout.num_blocks(); ++b)
            one[b * layout.basis_count()] = 1.0 / pr.disc.blocks()[b].table.value(0, 0);
        // eight boundary faces of length 2 with tau = h / p^2 = 2 / p^2
        CHECK(forms.form_c(one, one).real() == doctest::Approx(32.0 / (p * p)).epsilon(1e-12));
    }
}

TEST_CASE("right-hand side")
{
    Problem pr(circle, 8, 1);
    MaterialData mat = manufactured_material();
    mat.source = [](const Point&, Side) { return ComplexVector2::Zero(); };
    mat.boundary = [](const Point&, Side) { return ComplexVector2::Zero(); };
    CHECK(assemble_rhs(pr.disc, mat, 1.0).norm() == 0.0);

    mat.source = [](const Point&, Side) { return ComplexVector2(1.0, 0.0); };
    const Eigen::VectorXcd F = assemble_rhs(pr.disc, mat, 1.0);
    for (int b = 0; b < pr.disc.layout().num_blocks(); ++b) {
        const double measure = pr.disc.blocks()[b].rule.measure();
        CHECK(F[pr.disc.layout().field_offset(b)].real() == doctest::Approx(measure).epsilon(1e-12));
        // the y-component basis sees no source
        CHECK(std::abs(F[pr.disc.layout().field_offset(b) + pr.disc.layout().basis_count()]) <= 1e-14);
    }
}

TEST_CASE("assembled matrices agree with direct form evaluation")
{
    Problem pr(circle, 8, 2);
    const MaterialData mat = manufactured_material();
    const SystemComponents sc = assemble_components(pr.disc, mat, 1.0);
    const FormEvaluator forms(pr.disc, mat, 1.0);
    const Eigen::VectorXcd F = assemble_rhs(pr.disc, mat, 1.0);
    std::mt19937_64 rng(5);
    const int nf = pr.disc.layout().num_field(), nm = pr.disc.layout().num_multiplier();
    for (int t = 0; t < 5; ++t) {
        const auto u = random_vector(rng, nf), v = random_vector(rng, nf);
        const auto p = random_vector(rng, nm), q = random_vector(rng, nm);
        CHECK(rel(v.dot(sc.A.cast<Complex>() * u), forms.form_a(u, v)) <= 1e-11);
        CHECK(rel(v.dot(sc.M.cast<Complex>() * u), forms.form_mass(u, v)) <= 1e-11);
        CHECK(rel(q.dot(sc.B.cast<Complex>() * v), forms.form_b(v, q)) <= 1e-11);
        CHECK(rel(q.dot(sc.C.cast<Complex>() * p), forms.form_c(p, q)) <= 1e-11);
        CHECK(rel(v.dot(F), forms.rhs(v)) <= 1e-11);
    }
}

TEST_CASE("system structure: skew coupling blocks and symmetric diagonal blocks")
{
    Problem pr(circle, 8, 2);
    const MaterialData mat = manufactured_material();
    const AssembledSystem sys = assemble(pr.disc, mat, 1.0);
    const int nf = pr.disc.layout().num_field(), nm = pr.disc.layout().num_multiplier();
    const Eigen::MatrixXd S(sys.matrix);
    const Eigen::MatrixXd top_right = S.block(0, nf, nf, nm), bottom_left = S.block(nf, 0, nm, nf);
    CHECK((top_right + bottom_left.transpose()).norm() <= 1e-12 * bottom_left.norm());
    const Eigen::MatrixXd K = S.topLeftCorner(nf, nf), C = S.bottomRightCorner(nm, nm);
    CHECK((K - K.transpose()).norm() <= 1e-12 * K.norm());
    CHECK((C - C.transpose()).norm() <= 1e-12 * C.norm());

    const SystemComponents sc = assemble_components(pr.disc, mat, 1.0);
    const Eigen::MatrixXd expect = Eigen::MatrixXd(sc.A) - mat.k * mat.k * Eigen::MatrixXd(sc.M);
    CHECK((K - expect).norm() <= 1e-12 * expect.norm());
}

TEST_CASE("stencil: couplings reach at most two rings of face neighbours")
{
    Problem pr(circle, 8, 2);
    const auto& layout = pr.disc.layout();
    const int nblocks = layout.num_blocks();
    std::vector<std::set<int>> ring(nblocks);
    for (int b = 0; b < nblocks; ++b)
        ring[b].insert(b);
    for (const FaceData& fd : pr.disc.face_data())
        if (fd.plus >= 0) {
            ring[fd.minus].insert(fd.plus);
            ring[fd.plus].insert(fd.minus);
        }
    std::vector<std::set<int>> two(nblocks);
    for (int b = 0; b < nblocks; ++b)
        for (int c : ring[b])
            two[b].insert(ring[c].begin(), ring[c].end());

    const AssembledSystem sys = assemble(pr.disc, manufactured_material(), 1.0);
    const int nb = layout.basis_count();
    auto block_of_index = [&](int i) { return i < layout.num_field() ? i / (2 * nb) : (i - layout.num_field()) / nb; };
    bool ok = true;
    for (int c = 0; c < sys.matrix.outerSize(); ++c)
        for (RealSparse::InnerIterator it(sys.matrix, c); it; ++it)
            ok = ok && two[block_of_index(int(it.row()))].count(block_of_index(int(it.col())));
    CHECK(ok);
}

TEST_CASE("matrix dump has one line per stored entry")
{
    Problem pr(circle, 4, 1);
    const AssembledSystem sys = assemble(pr.disc, manufactured_material(), 1.0);
    std::ostringstream os;
    write_matrix_dump(os, sys.matrix);
    std::istringstream is(os.str());
    std::string line;
    long lines = 0;
    while (std::getline(is, line))
        ++lines;
    CHECK(lines == sys.matrix.nonZeros());
}

TEST_CASE("zero wave number is rejected")
{
    Problem pr(circle, 4, 1);
    MaterialData mat = manufactured_material();
    mat.k = 0.0;
    CHECK_THROWS_AS(assemble(pr.disc, mat, 1.0), Error);
}
