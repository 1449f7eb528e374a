#ifndef SPDELAB_NOISE_HPP
#define SPDELAB_NOISE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

/// Deterministic counter-based Gaussian stream: every draw is a pure function
/// of (seed, stream tags), so paths are reproducible and independent streams
/// can be generated concurrently.
namespace rng {
std::uint64_t mix64(std::uint64_t x);
/// standard normal, keyed by (seed, a, b, c)
double gaussian(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);
}  // namespace rng

/// Truncated cylindrical Wiener path: increments dW_k^n ~ N(0, dt), one per
/// mode k = 1..k_trunc and step n. Identical seed gives bit-identical
/// increments.
///
/// Refinement contract: write n_steps = m 2^L with m odd. Increments over the
/// m-step base grid are drawn directly from the (seed, mode) stream and then
/// refined L times by Levy midpoint bisection with independent midpoint
/// Gaussians. Two grids over the same horizon whose step counts share the odd
/// factor m therefore produce nested paths: each coarse increment is exactly
/// the sum of the fine increments it covers.
class WienerPath {
  public:
    WienerPath(std::uint64_t seed, const TimeGrid& times, std::size_t k_trunc);

    std::uint64_t seed() const { return seed_; }
    std::size_t k_trunc() const { return k_trunc_; }
    const TimeGrid& times() const { return times_; }

    /// dW_k^n, k = 1..k_trunc
    double increment(std::size_t step, std::size_t k) const {
        return increments_[step * k_trunc_ + (k - 1)];
    }
    const double* step_increments(std::size_t step) const {
        return increments_.data() + step * k_trunc_;
    }

  private:
    std::uint64_t seed_;
    TimeGrid times_;
    std::size_t k_trunc_;
    std::vector<double> increments_;
};

/// Diffusion operator H(u): per mode k, a field-level map u -> H(u)e_k.
///
/// finite_dim: K = R^d with functions H_k(x, xi) (smooth noise, finitely many
/// modes). linear_q: H(u)e_k = u q_k e_k with a diagonal multiplier sequence
/// q_k on the sine basis (linear multiplicative noise, infinitely many modes
/// truncated at k_trunc).
///
/// Instances lazily cache the sampled sine basis for the grid they are
/// applied to; give each replica its own copy rather than sharing one
/// instance across threads.
class NoiseModel {
  public:
    enum class Variant { finite_dim, linear_q };

    static NoiseModel finite(std::vector<std::function<double(double, double)>> hk,
                             std::size_t k_trunc);
    /// q_k supplied explicitly, k = 1..k_trunc
    static NoiseModel linear_q(std::vector<double> q);
    /// geometric law q_k = amp * ratio^{k-1}
    static NoiseModel linear_q_geometric(double amp, double ratio, std::size_t k_trunc);
    /// polynomial law q_k = amp * k^{-p}
    static NoiseModel linear_q_polynomial(double amp, double p, std::size_t k_trunc);
    static NoiseModel none();  // H = 0

    Variant variant() const { return variant_; }
    std::size_t k_trunc() const { return k_trunc_; }
    bool is_zero() const { return k_trunc_ == 0; }
    const std::vector<double>& q() const { return q_; }

    /// values H_k(x_i, u(x_i)) resp. u(x_i) q_k e_k(x_i); rejects non-finite output
    std::vector<double> apply(const std::vector<double>& u_level, std::size_t k,
                              const SpatialGrid& grid) const;

    /// pointwise H_k(x, xi); finite_dim only
    double eval_finite(std::size_t k, double x, double xi) const;

    /// noise field sum_k H(u)e_k dW_k for one step, all modes at once
    std::vector<double> apply_increments(const std::vector<double>& u_level, const double* dwk,
                                         const SpatialGrid& grid) const;

  private:
    Variant variant_ = Variant::linear_q;
    std::size_t k_trunc_ = 0;
    std::vector<double> q_;                                          // linear_q
    std::vector<std::function<double(double, double)>> hk_;          // finite_dim
    mutable std::vector<double> basis_cache_;                        // sqrt2 sin(k pi x_i)
    mutable std::size_t basis_cache_n_ = 0;
    const double* basis_row(std::size_t k, const SpatialGrid& grid) const;
};

WienerPath sample_path(std::uint64_t seed, const TimeGrid& times, std::size_t k_trunc);

/// Empirical verification of the linear growth bound
/// sum_k H_k(x, xi)^2 <= C (1 + xi^2): reports the best constant over a probe
/// set and whether it stays stable when the probe range doubles.
struct GrowthReport {
    double constant;          // best constant on the probe range
    double constant_doubled;  // same on the doubled range
    bool pass;
    std::string detail;
};

GrowthReport check_growth(const NoiseModel& model, const std::vector<double>& probe_values,
                          const SpatialGrid& grid, double stability_factor = 1.25);

/// Truncated Hilbert-Schmidt surrogate for the gamma-radonifying bound
/// (r = 2): S(u) = (sum_k ||H(u)e_k||_{a,2}^2)^{1/2} compared against
/// 1 + ||u||_{a,2} (plus the W^{1,2a} term when a > 1). Reports the worst
/// ratio over probe fields and its stability under doubling the mode
/// truncation.
struct HarReport {
    double a;
    double ratio_half;  // max over probes at half the mode truncation
    double ratio_full;  // same at the full truncation (doubled relative to half)
    bool trace_ok;      // finite_dim boundary condition H_k(x,0)=0 at x in {0,1}
    bool pass;
};

HarReport check_har_surrogate(const NoiseModel& model, double a,
                              const std::vector<std::vector<double>>& probe_fields,
                              const DirichletEigenSystem& eig, double stability_factor = 1.25);

}  // namespace spdelab

#endif
