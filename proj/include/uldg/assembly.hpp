#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "uldg/dg_space.hpp"

namespace uldg {

using ComplexVector2 = Eigen::Vector2cd;
/// Vector datum evaluated on a given material side.
using VectorField = std::function<ComplexVector2(const Point&, Side)>;

struct MaterialData {
    std::array<double, 2> mu{2.0, 1.0};
    std::array<double, 2> eps{2.0, 1.0};
    double k = 5.0;
    VectorField source;   ///< J
    VectorField boundary; ///< g on the outer boundary
};

struct FacePenalty {
    double alpha;
    double tau;
    double tau1;
};

/// alpha = alpha0 Theta_F, tau = h_F / p^2, tau1 = h_F / p.
FacePenalty face_penalty(const FaceData& face, double alpha0, int p);

using RealSparse = Eigen::SparseMatrix<double>;

/// Pieces of the system: A from a(.,.), M from (eps u, v), B(q-row, v-col)
/// from b(v, q), C from c(., .). All real; the basis and coefficients are.
struct SystemComponents {
    RealSparse A;
    RealSparse M;
    RealSparse B;
    RealSparse C;
};

/// [[A - k^2 M, -B^T], [B, C]] with right-hand side [F_h; 0].
struct AssembledSystem {
    RealSparse matrix;
    Eigen::VectorXcd rhs;
    std::vector<std::string> warnings;
};

SystemComponents assemble_components(const Discretization& disc, const MaterialData& mat, double alpha0);
AssembledSystem assemble(const Discretization& disc, const MaterialData& mat, double alpha0);

/// F_h as a vector over the field unknowns.
Eigen::VectorXcd assemble_rhs(const Discretization& disc, const MaterialData& mat, double alpha0);

/// Coordinate dump: one "row col re im" line per stored entry, 0-based.
void write_matrix_dump(std::ostream& os, const RealSparse& matrix);

/// Direct quadrature evaluation of the forms from coefficient vectors,
/// independent of the assembled matrices. Field vectors have
/// layout().num_field() entries, multiplier vectors num_multiplier().
class FormEvaluator {
public:
    FormEvaluator(const Discretization& disc, const MaterialData& mat, double alpha0);

    /// Coefficients of L(v), one scalar Q_p block per space block.
    Eigen::VectorXcd lifting(const Eigen::VectorXcd& v) const;
    /// Coefficients of L_1(g).
    Eigen::VectorXcd boundary_lifting() const;

    /// (s, t) over all blocks for scalar block vectors s, t.
    Complex scalar_inner(const Eigen::VectorXcd& s, const Eigen::VectorXcd& t) const;
    /// <[[v . tau]], t^-> over all faces.
    Complex tangential_trace(const Eigen::VectorXcd& v, const Eigen::VectorXcd& t) const;

    Complex form_a(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) const;
    Complex form_mass(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) const;
    Complex form_b(const Eigen::VectorXcd& v, const Eigen::VectorXcd& q) const;
    /// Integration-by-parts form of b.
    Complex form_b_ibp(const Eigen::VectorXcd& v, const Eigen::VectorXcd& q) const;
    Complex form_c(const Eigen::VectorXcd& phi, const Eigen::VectorXcd& q) const;
    Complex rhs(const Eigen::VectorXcd& v) const;

private:
    /// Discrete curl of v minus its lifting at the quadrature points of block b.
    Eigen::VectorXcd reduced_curl(int b, const Eigen::VectorXcd& v, const Eigen::VectorXcd& lift) const;

    const Discretization& disc_;
    const MaterialData& mat_;
    double alpha0_;
};

} // namespace uldg
