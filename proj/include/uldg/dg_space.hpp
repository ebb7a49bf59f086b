#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "uldg/mesh.hpp"
#include "uldg/quadrature.hpp"

namespace uldg {

using Complex = std::complex<double>;

/// Legendre polynomial L_n and its derivative, scaled by sqrt(2n + 1) so that
/// the square integrates to 2 over [-1, 1].
double legendre(int n, double x);
double legendre_derivative(int n, double x);

/// Tensor Legendre basis of Q_p on a box. Function (a, b) has index a + (p+1) b.
class BasisSet {
public:
    explicit BasisSet(int p);

    int order() const { return p_; }
    int count() const { return (p_ + 1) * (p_ + 1); }
    int index(int a, int b) const { return a + (p_ + 1) * b; }

    /// Values and physical gradients at x for the basis on `box`.
    void evaluate(const Box& box, const Point& x, Eigen::Ref<Eigen::VectorXd> value,
                  Eigen::Ref<Eigen::VectorXd> dx, Eigen::Ref<Eigen::VectorXd> dy) const;

private:
    int p_;
};

/// Scalar basis tables at a set of points: row q, column = basis index.
struct BasisTable {
    Eigen::MatrixXd value;
    Eigen::MatrixXd dx;
    Eigen::MatrixXd dy;
};

BasisTable tabulate(const BasisSet& basis, const Box& box, const std::vector<Point>& points);

/// One block per (macro-element, present side). Unknowns are ordered with all
/// field coefficients first, then all multiplier coefficients. A field block
/// holds the x components followed by the y components.
class DofLayout {
public:
    struct Block {
        int macro;
        Side side;
    };

    DofLayout(const InducedMesh& mesh, int p);

    int order() const { return p_; }
    int basis_count() const { return nb_; }
    int num_blocks() const { return int(blocks_.size()); }
    const Block& block(int b) const { return blocks_[b]; }
    /// -1 when the macro-element has no part on that side.
    int block_of(int macro, Side side) const { return lookup_[2 * macro + index(side)]; }

    int field_offset(int b) const { return 2 * nb_ * b; }
    int multiplier_offset(int b) const { return num_field() + nb_ * b; }
    int num_field() const { return 2 * nb_ * num_blocks(); }
    int num_multiplier() const { return nb_ * num_blocks(); }
    int total() const { return num_field() + num_multiplier(); }

private:
    int p_;
    int nb_;
    std::vector<Block> blocks_;
    std::vector<int> lookup_;
};

/// Material-side data of one block: quadrature on K cap Omega_side, basis
/// tables there and the Cholesky factor of the scalar mass matrix.
struct BlockData {
    int macro = -1;
    Side side = Side::Inner;
    Box box;
    double h = 0.0;
    double theta = 1.0;
    QuadratureRule rule;
    BasisTable table;
    Eigen::MatrixXd mass;
    Eigen::LLT<Eigen::MatrixXd> mass_llt;
};

/// One face piece with its owners resolved to blocks. `plus` is -1 on the
/// domain boundary.
struct FaceData {
    FaceKind kind = FaceKind::Interior;
    int minus = -1;
    int plus = -1;
    double h = 0.0;
    double theta = 1.0;
    SurfaceRule rule;
    Eigen::MatrixXd minus_value;
    Eigen::MatrixXd plus_value;
};

/// Tangent used for tangential traces: tau = (-n2, n1).
inline Point tangent(const Point& n) { return {-n.y(), n.x()}; }

/// [[u]] = u- - u+ on interior and interface faces, u- on the boundary.
template <class T>
T jump(const T& minus, const T& plus, bool boundary)
{
    return boundary ? minus : T(minus - plus);
}

/// Everything the assembly needs about the discrete space.
class Discretization {
public:
    /// `extra` adds quadrature points per direction on every rule.
    Discretization(const InducedMesh& mesh, const FaceSet& faces, int p, int extra = 0);

    const InducedMesh& mesh() const { return *mesh_; }
    const FaceSet& faces() const { return *faces_; }
    const DofLayout& layout() const { return layout_; }
    const BasisSet& basis() const { return basis_; }
    int order() const { return layout_.order(); }
    const std::vector<BlockData>& blocks() const { return blocks_; }
    const std::vector<FaceData>& face_data() const { return face_data_; }

    /// Basis of block b evaluated at x (polynomial extension outside K_i).
    void evaluate(int b, const Point& x, Eigen::Ref<Eigen::VectorXd> value, Eigen::Ref<Eigen::VectorXd> dx,
                  Eigen::Ref<Eigen::VectorXd> dy) const;

private:
    const InducedMesh* mesh_;
    const FaceSet* faces_;
    DofLayout layout_;
    BasisSet basis_;
    std::vector<BlockData> blocks_;
    std::vector<FaceData> face_data_;
};

/// Bounding box of K cap Omega_side; the basis of a cut block lives on it so
/// that thin side pieces keep a well-conditioned Gram matrix.
Box side_bounds(const InducedMesh& mesh, int macro, Side side);

/// Theta_F: largest Theta_K over cut macro-elements whose closure meets the
/// face, 1 when there is none.
double face_theta(const InducedMesh& mesh, const Face& face, int p);

} // namespace uldg
