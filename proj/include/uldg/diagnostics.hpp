#pragma once

#include <cmath>
#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

#include "uldg/assembly.hpp"

namespace uldg {

/// Side-aware closed-form solution of curl(mu^-1 curl E) - k^2 eps E = J.
class ExactSolution {
public:
    virtual ~ExactSolution() = default;

    virtual double mu(Side s) const = 0;
    virtual double eps(Side s) const = 0;
    virtual double wave_number() const = 0;
    virtual LevelSetInterface interface() const = 0;

    virtual ComplexVector2 field(const Point& x, Side s) const = 0;
    virtual Complex curl(const Point& x, Side s) const = 0;
    virtual ComplexVector2 source(const Point& x, Side s) const = 0;
    /// Boundary datum g; defaults to the field on the side containing x.
    virtual ComplexVector2 boundary(const Point& x) const;
};

/// E = curl[mu_i (|x|^2 - r0^2)^2 exp(i k x1)] on Omega_i with the scalar to
/// vector curl (d/dx2, -d/dx1). Vanishes on the circle |x| = r0.
class ManufacturedSolution : public ExactSolution {
public:
    ManufacturedSolution(double r0 = std::sqrt(3.0), double k = 5.0, std::array<double, 2> mu = {2.0, 1.0},
                         std::array<double, 2> eps = {2.0, 1.0});

    double mu(Side s) const override { return mu_[index(s)]; }
    double eps(Side s) const override { return eps_[index(s)]; }
    double wave_number() const override { return k_; }
    double radius() const { return r0_; }
    LevelSetInterface interface() const override;

    Complex potential(const Point& x, Side s) const;
    ComplexVector2 field(const Point& x, Side s) const override;
    Complex curl(const Point& x, Side s) const override;
    ComplexVector2 source(const Point& x, Side s) const override;

private:
    double r0_;
    double k_;
    std::array<double, 2> mu_;
    std::array<double, 2> eps_;
};

/// Affine solution across the straight interface n.x = c:
/// E_i = a tau + (b / eps_i) n + mu_i gamma (n.x - c) tau.
/// curl E_i = mu_i gamma, div E_i = 0, J = -k^2 eps_i E_i.
class StraightInterfaceSolution : public ExactSolution {
public:
    StraightInterfaceSolution(Point normal, double offset, Complex a, Complex b, Complex gamma, double k = 5.0,
                              std::array<double, 2> mu = {2.0, 1.0}, std::array<double, 2> eps = {2.0, 1.0});

    double mu(Side s) const override { return mu_[index(s)]; }
    double eps(Side s) const override { return eps_[index(s)]; }
    double wave_number() const override { return k_; }
    LevelSetInterface interface() const override;

    ComplexVector2 field(const Point& x, Side s) const override;
    Complex curl(const Point& x, Side s) const override;
    ComplexVector2 source(const Point& x, Side s) const override;

private:
    Point n_;
    double c_;
    Complex a_, b_, gamma_;
    double k_;
    std::array<double, 2> mu_;
    std::array<double, 2> eps_;
};

/// Material data whose source and boundary datum come from `exact`.
MaterialData material_from(std::shared_ptr<const ExactSolution> exact);

struct ErrorReport {
    double err_X = 0.0;
    double norm_exact_X = 0.0;
    double rel_err_X = 0.0;
    double err_L2 = 0.0;
    double err_curl = 0.0;
    double err_jump = 0.0; ///< penalty-weighted jump part of err_X
    double norm_phi = 0.0;
    double div_resid = 0.0;
    double tangential_jump = 0.0; ///< ||alpha^1/2 tau^-1/2 [[E_h . tau]]|| over all faces
    double normal_jump = 0.0;     ///< ||alpha^1/2 tau^-1/2 [[eps E_h . n]]|| over interior and interface faces
    double theta_max = 1.0;
    long dofs = 0;
};

/// Errors of the solution vector x (field then multiplier unknowns).
/// `disc` should carry one extra quadrature point relative to assembly.
ErrorReport dg_errors(const Discretization& disc, const Eigen::VectorXcd& x, const ExactSolution& exact,
                      double alpha0);

/// X-norm of exact - E_h for field coefficients only (used by tests).
double error_X(const Discretization& disc, const Eigen::VectorXcd& field, const ExactSolution& exact, double alpha0,
               double* exact_norm = nullptr);

/// Side-wise L2 projection of the exact field onto the field unknowns.
Eigen::VectorXcd project_exact(const Discretization& disc, const ExactSolution& exact);

/// Least-squares slope of log(err) against log(N). Needs three points.
double fit_rate(const std::vector<std::pair<double, double>>& series);

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, int p, int n, const ErrorReport& rep, double solve_seconds);

} // namespace uldg
