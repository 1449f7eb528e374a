#ifndef SPDELAB_SPECTRAL_HPP
#define SPDELAB_SPECTRAL_HPP

#include <cstddef>
#include <vector>

#include "spdelab/grid.hpp"

namespace spdelab {

/// Coefficients c_k, k = 1..k_max, of a field in the Dirichlet sine basis.
struct SpectralField {
    std::vector<double> c;  // c[k-1] belongs to mode k
    std::size_t k_max() const { return c.size(); }
};

/// Eigenpairs of the Dirichlet Laplacian on (0,1): lambda_k = (k pi)^2 and
/// e_k(x) = sqrt(2) sin(k pi x), sampled on a grid. The sampled basis is
/// exactly orthonormal in the discrete L2 inner product (weight h) as long as
/// k_max <= n_interior, so the transform below round-trips exactly at
/// k_max = n_interior.
///
/// The continuum eigenvalues make the semigroup exact in time and the Bessel
/// norms grid-independent. The eigenvalues of the discrete Laplacian matrix,
/// 2(1-cos(k pi h))/h^2, are available behind a switch for scheme-error
/// studies.
class DirichletEigenSystem {
  public:
    enum class Eigenvalues { continuum, discrete_stencil };

    DirichletEigenSystem(const SpatialGrid& grid, std::size_t k_max,
                         Eigenvalues which = Eigenvalues::continuum);

    std::size_t k_max() const { return k_max_; }
    const SpatialGrid& grid() const { return grid_; }
    double lambda(std::size_t k) const { return lambda_[k - 1]; }  // k = 1..k_max
    /// e_k(x_i), k = 1..k_max, i = 0..n_interior-1
    double basis(std::size_t k, std::size_t i) const { return basis_[(k - 1) * grid_.n_interior + i]; }

    /// c_k = sum_i v_i e_k(x_i) h
    SpectralField transform(const std::vector<double>& values) const;
    /// v_i = sum_k c_k e_k(x_i)
    std::vector<double> inverse(const SpectralField& c) const;

    /// coefficients of S(t): c_k -> c_k exp(-lambda_k t); rejects t < 0
    SpectralField semigroup_apply(const SpectralField& c, double t) const;

    /// (sum_k (1+lambda_k)^a c_k^2)^{1/2}; rejects a < 0
    double bessel_norm(const SpectralField& c, double a) const;

  private:
    SpatialGrid grid_;
    std::size_t k_max_;
    std::vector<double> lambda_;
    std::vector<double> basis_;
};

/// One row of the semigroup regularization probe: the measured operator norm
/// of S(t): H^a -> H^{a+delta} over single-mode probes, and the product
/// ratio * t^{delta/2} that the regularization estimate predicts to stay
/// bounded.
struct RegularizationProbeRow {
    double t;
    double ratio;
    double scaled;  // ratio * t^{delta/2}
};

std::vector<RegularizationProbeRow> regularization_constant_probe(
    const DirichletEigenSystem& eig, double a, double delta, const std::vector<double>& t_list);

}  // namespace spdelab

#endif
