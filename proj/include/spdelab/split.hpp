#ifndef SPDELAB_SPLIT_HPP
#define SPDELAB_SPLIT_HPP

#include <functional>
#include <string>
#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/spde.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

/// z(t) = int_0^t S(t-s) H(u_s) dW_s by exponential Euler in the eigenbasis:
/// c_k(t_{n+1}) = exp(-lambda_k dt) (c_k(t_n) + <H(u_n) dW^n>_k), z(0) = 0.
/// The path and the model must share the mode truncation.
SpaceTimeField stochastic_convolution(const WienerPath& path, const NoiseModel& model,
                                      const SpaceTimeField& u, const DirichletEigenSystem& eig);

/// Forcing record of one y solve; the estimate checks below consume exactly
/// what the solver used.
struct YForcing {
    std::vector<std::vector<double>> g_faces;  // per step, n_interior+1 faces
    std::vector<std::vector<double>> f_nodes;  // per step, n_interior nodes
};

struct YSolveResult {
    SpaceTimeField y;
    YForcing forcing;
};

/// Implicit-Euler solve of the linear divergence-form problem
///   dy/dt = div(a grad y) + div g + f,  y(0) = u(0),  y = 0 on the boundary,
/// with a = A(u(t_n, .)) face-averaged, g = B(u) + (A(u)-I) grad z evaluated
/// at faces, f = F(u) at nodes; coefficients frozen at the stored u path.
YSolveResult solve_y_divergence(const SpaceTimeField& u, const SpaceTimeField& z,
                                const CoefficientSet& coeffs);

/// Implicit-Euler solve of the non-divergence problem
///   dv/dt = a(t,x) v_xx + f(t,x),  v = phi on the lateral boundary,
/// with a and f sampled at the left time endpoint. phi(t, side) gives the
/// boundary value at x = 0 (side 0) and x = 1 (side 1); the returned field
/// stores interior values only.
SpaceTimeField solve_nondivergence(const SpaceTimeField& a, const SpaceTimeField& f,
                                   const std::vector<double>& v0,
                                   const std::function<double(double, int)>& phi, double nu,
                                   double mu);

struct DecompositionResult {
    SpaceTimeField z;
    SpaceTimeField y;
    YForcing forcing;
    double residual_sup = 0.0;
    std::vector<double> residual_series;  // per-level sup of |u - y - z|
};

DecompositionResult decompose(const SpdeRun& run, const DirichletEigenSystem& eig);

/// Ratio check of the basic energy estimate
///   ||v||_{Linf(0,T;L2)} + ||grad v||_{L2(D_T)}
///     <= C (||v0||_2 + ||g||_{L2(D_T)} + ||f||_{L2(D_T)}).
struct EstimateReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    bool pass = false;
    std::string detail;
};

EstimateReport energy_estimate_check(const SpaceTimeField& y, const std::vector<double>& v0,
                                     const YForcing& forcing, double c_max);

/// Ratio check of the L-infinity bound
///   ||v||_{Linf(D_T)} <= C (||v0||_inf + ||g||_{L^{2 r0}(D_T)} + ||f||_{L^{r0}(D_T)}).
EstimateReport linfty_bound_check(const SpaceTimeField& y, const std::vector<double>& v0,
                                  const YForcing& forcing, double r0, double c_max);

/// Boundary compatibility conditions on the initial datum, evaluated by
/// second-order one-sided extrapolation from the nodes nearest each endpoint.
/// Conditions: u0 = 0 on the boundary (k >= 1); u0^(1) = 0 on the boundary
/// (k >= 2) where u0^(1) = div(A(u0) grad u0) + div(B(u0)) + F(u0); and the
/// second-order condition 2 A'(0) u0' (u0^(1))' + B'(0) (u0^(1))' +
/// A(0) (u0^(1))'' = 0 on the boundary (k = 4).
struct CompatibilityCondition {
    std::string name;
    double trace_left;
    double trace_right;
    double tol;
    bool pass;
};

struct CompatibilityReport {
    int order = 0;
    std::vector<CompatibilityCondition> conditions;
    bool all_pass = true;
};

CompatibilityReport compatibility_check(const std::vector<double>& u0, double h,
                                        const CoefficientSet& coeffs, int order,
                                        double tol_factor = 10.0);

}  // namespace spdelab

#endif
