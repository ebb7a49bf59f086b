#include <doctest.h>

#include <random>

#include "uldg/diagnostics.hpp"
#include "uldg/solver.hpp"

using namespace uldg;

namespace {

ComplexSparse random_complex_system(int n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> col(0, n - 1);
    std::vector<Eigen::Triplet<Complex>> t;
    for (int i = 0; i < n; ++i) {
        // diagonal dominance keeps the oracle comparison well conditioned
        t.emplace_back(i, i, Complex(10.0 + g(rng), g(rng)));
        for (int k = 0; k < 5; ++k)
            t.emplace_back(i, col(rng), Complex(g(rng), g(rng)));
    }
    ComplexSparse A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    return A;
}

} // namespace

TEST_CASE("identity system returns the right-hand side")
{
    RealSparse I(5, 5);
    I.setIdentity();
    Eigen::VectorXcd b(5);
    b << Complex(1, 2), Complex(-3, 0), Complex(0, 1), Complex(4, 4), Complex(0, 0);
    const SolveResult r = solve(I, b);
    CHECK((r.x - b).norm() == 0.0);
    CHECK(r.report.residual == 0.0);
}

TEST_CASE("random complex sparse system against a dense oracle")
{
    std::mt19937_64 rng(9);
    const ComplexSparse A = random_complex_system(100, rng);
    Eigen::VectorXcd b = Eigen::VectorXcd::Random(100);
    const SolveResult r = solve(A, b);
    const Eigen::VectorXcd oracle = Eigen::MatrixXcd(A).partialPivLu().solve(b);
    CHECK((r.x - oracle).norm() <= 1e-12 * oracle.norm());
    CHECK(r.report.residual <= 1e-14);
    CHECK(r.report.lu_nonzeros > 0);
}

TEST_CASE("real matrix with a complex right-hand side against a dense oracle")
{
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g;
    const int n = 120;
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, 8.0 + g(rng));
        t.emplace_back(i, (i * 7 + 3) % n, g(rng));
        t.emplace_back((i * 11 + 5) % n, i, g(rng));
    }
    RealSparse A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    const Eigen::VectorXcd b = Eigen::VectorXcd::Random(n);
    const SolveResult r = solve(A, b);
    const Eigen::VectorXcd oracle = Eigen::MatrixXd(A).cast<Complex>().partialPivLu().solve(b);
    CHECK((r.x - oracle).norm() <= 1e-12 * oracle.norm());
}

TEST_CASE("singular matrix is reported")
{
    RealSparse A(3, 3);
    A.insert(0, 0) = 1.0;
    A.insert(1, 1) = 1.0;
    const Eigen::VectorXcd b = Eigen::VectorXcd::Ones(3);
    try {
        solve(A, b);
        FAIL("expected SingularMatrix");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularMatrix);
    }
}

TEST_CASE("size mismatch is a domain error")
{
    RealSparse A(3, 3);
    A.setIdentity();
    CHECK_THROWS_AS(solve(A, Eigen::VectorXcd::Ones(4)), Error);
}

TEST_CASE("discrete system at p=1, n=24 solves to the residual tolerance")
{
    const auto exact = std::make_shared<ManufacturedSolution>();
    QuadMesh q(24);
    refine_interface_band(q, exact->interface(), 1);
    const InducedMesh mesh = build_induced_mesh(std::move(q), exact->interface(), 0.25);
    const FaceSet faces = enumerate_faces(mesh);
    const Discretization disc(mesh, faces, 1);
    const AssembledSystem sys = assemble(disc, material_from(exact), 1.0);
    const SolveResult r = solve(sys, 1e-10);
    CHECK(r.report.residual <= 1e-10);
    CHECK(r.x.size() == disc.layout().total());
}
