#ifndef SPDELAB_REGULARITY_HPP
#define SPDELAB_REGULARITY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

struct HolderOptions {
    std::size_t max_exhaustive_pairs = 2'000'000;
    std::size_t samples_per_decade = 2000;
    std::uint64_t seed = 0x5eed;
};

/// Discrete parabolic Hoelder norm: sup |f| over the stored grid points plus
/// sup over point pairs of |f(t,x)-f(s,y)| / d^beta with the parabolic
/// distance d = max(|t-s|^{1/2}, |x-y|). Pair enumeration is exhaustive up to
/// max_exhaustive_pairs, then stratified by distance decade with
/// samples_per_decade draws per decade. Requires beta in (0,1). On grids with
/// all pair distances below one the seminorm is nondecreasing in beta.
double parabolic_holder_norm(const SpaceTimeField& field, double beta,
                             const HolderOptions& opts = {});

struct ExponentEstimate {
    double exponent = 0.0;  // median over nodes (resp. levels) of per-fit slopes
    double std_error = 0.0; // median least-squares slope error
    double r2 = 0.0;        // median fit quality
    std::vector<double> scales;    // dyadic lags (time) or separations (space)
    std::vector<double> mean_abs;  // pooled mean |increment| per scale
    double fit_lo = 0.0, fit_hi = 0.0;
};

/// Time-regularity exponent from increments anchored in the initial block:
/// per node, least-squares slope of log E|f(t0+tau,x) - f(t0,x)| against
/// log tau over dyadic lags tau in [4 dt, T/8], with E estimated over
/// replicas and the lag-scaled anchors t0 in {0, tau/4, tau/2, 3tau/4}; the
/// estimate is the median slope over nodes. The anchor set scales with the
/// lag, so exact power laws |t|^alpha keep their exponent. Requires at least
/// four dyadic lag levels; throws on a degenerate (constant-in-time) field.
ExponentEstimate estimate_time_exponent(const std::vector<const SpaceTimeField*>& replicas);

/// Space-regularity exponent: per time level, the lag-restricted sup
/// max_x |f(x+s) - f(x)| over dyadic separations s in [2h, 1/8], averaged
/// over replicas; slope per level, median over levels.
ExponentEstimate estimate_space_exponent(const std::vector<const SpaceTimeField*>& replicas);

/// Per-level Bessel norms for each requested order, plus their stability
/// under doubling the mode truncation (half of k_max vs all of it): the
/// reported cutoff is the largest order whose time-aggregated norm grows by
/// at most stability_factor when the truncation doubles.
struct BesselProfile {
    std::vector<double> a_list;
    std::vector<std::vector<double>> norms;  // [level][a index], full truncation
    std::vector<double> aggregate_half;      // l2-in-time aggregate at k_max/2
    std::vector<double> aggregate_full;      // same at k_max
    std::vector<double> ratio;               // full/half per order
    double cutoff = -1.0;                    // -1 when no order is stable
};

BesselProfile bessel_regularity_profile(const SpaceTimeField& field,
                                        const std::vector<double>& a_list,
                                        const DirichletEigenSystem& eig,
                                        double stability_factor = 1.25);

/// Measured regularity of one simulated field.
struct RegularityReport {
    std::string field_name;
    std::optional<ExponentEstimate> time_exponent;
    std::optional<ExponentEstimate> space_exponent;
    std::optional<BesselProfile> bessel;
    std::size_t nx = 0;
    std::size_t n_steps = 0;
    double dt = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::size_t replicas = 0;
};

}  // namespace spdelab

#endif
