#ifndef SPDELAB_SPDE_HPP
#define SPDELAB_SPDE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/noise.hpp"

namespace spdelab {

using ScalarFn = std::function<double(double)>;

/// Coefficients A, B, F of the quasilinear problem with their derivatives and
/// the ellipticity window [nu, mu]: nu <= A(xi) <= mu on the probed range.
struct CoefficientSet {
    ScalarFn A, Aprime;
    ScalarFn B, Bprime;
    ScalarFn F, Fprime;
    double nu = 0.0;
    double mu = 0.0;

    /// checks nu <= A <= mu and |B|+|F| <= C(1+|xi|) over [-range, range];
    /// throws with a diagnostic naming the violated bound
    void validate(double range, std::size_t samples = 257) const;

    static CoefficientSet heat();                        // A=1, B=F=0
    static CoefficientSet twoplus_sin_A();               // A=2+sin(xi), B=F=0
    /// B(xi) = xi^2/2 for |xi| <= clip, extended with matching slope outside
    static CoefficientSet with_burgers_flux(CoefficientSet base, double clip = 10.0);
    static CoefficientSet with_linear_drift(CoefficientSet base, double rate = -1.0);
};

/// Solves the tridiagonal system (diag, lower, upper) x = rhs by the Thomas
/// algorithm. Throws when a pivot degenerates, which for the schemes below
/// diagnoses an ellipticity breach.
std::vector<double> solve_tridiagonal(std::vector<double> diag, const std::vector<double>& lower,
                                      const std::vector<double>& upper, std::vector<double> rhs);

struct StepOptions {
    double blowup_ceiling = 1e6;
};

/// One linearly-implicit Euler-Maruyama step of
///   du = div(B(u)) dt + div(A(u) grad u) dt + F(u) dt + H(u) dW:
/// the diffusion coefficient is frozen at u_n with face-averaged
/// A((u_i+u_{i+1})/2), the operator acts on u_{n+1}, flux/drift/noise are
/// explicit at u_n, and the noise is taken in the Ito sense as written.
std::vector<double> spde_step(const std::vector<double>& u_n, double dt, double h,
                              const CoefficientSet& coeffs, const NoiseModel& model,
                              const double* dwk, const SpatialGrid& grid,
                              const StepOptions& opts = {});

struct MonitorSeries {
    std::vector<double> l2;          // ||u(t_n)||_2 per level
    std::vector<double> grad_l2;     // ||grad u(t_n)||_2 per level
    std::vector<double> sup;         // max_i |u(t_n,x_i)| per level
};

struct SpdeRunConfig {
    SpatialGrid grid;
    TimeGrid times;
    CoefficientSet coeffs;
    NoiseModel model;
    std::uint64_t seed = 0;
    std::function<double(double)> u0 = [](double) { return 0.0; };
    StepOptions step_opts{};
    double ellipticity_probe_range = 50.0;
    std::string scheme_tag = "semi-implicit-euler-maruyama";
};

/// A completed path: the field, the driving path, the inputs that produced
/// it, and the per-level monitor series.
struct SpdeRun {
    SpaceTimeField u;
    WienerPath path;
    CoefficientSet coeffs;
    NoiseModel model;
    std::uint64_t seed = 0;
    std::string scheme_tag;
    MonitorSeries monitor;
};

SpdeRun run_spde(const SpdeRunConfig& config);

/// lp space norms per level plus the cumulative gradient energy
/// int_0^t ||grad u||_2^2; flags growth of the lp series past the ceiling.
struct APrioriSeries {
    std::vector<double> lp;               // ||u(t_n)||_p
    std::vector<double> grad_energy;      // sum_{m<=n} ||grad u(t_m)||_2^2 dt
    bool ceiling_exceeded = false;
};

APrioriSeries a_priori_monitor(const SpdeRun& run, double p, double ceiling = 1e3);

}  // namespace spdelab

#endif
