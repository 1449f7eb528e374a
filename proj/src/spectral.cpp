#include "spdelab/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdelab {

namespace {
constexpr double kPi = std::numbers::pi;
}

DirichletEigenSystem::DirichletEigenSystem(const SpatialGrid& grid, std::size_t k_max,
                                           Eigenvalues which)
    : grid_(grid), k_max_(k_max) {
    if (k_max_ == 0) throw std::invalid_argument("DirichletEigenSystem: k_max must be positive");
    if (k_max_ > grid_.n_interior)
        throw std::invalid_argument("DirichletEigenSystem: k_max exceeds n_interior");
    lambda_.resize(k_max_);
    basis_.resize(k_max_ * grid_.n_interior);
    const double h = grid_.h;
    for (std::size_t k = 1; k <= k_max_; ++k) {
        const double kpi = static_cast<double>(k) * kPi;
        lambda_[k - 1] = (which == Eigenvalues::continuum)
                             ? kpi * kpi
                             : 2.0 * (1.0 - std::cos(kpi * h)) / (h * h);
        for (std::size_t i = 0; i < grid_.n_interior; ++i)
            basis_[(k - 1) * grid_.n_interior + i] = std::sqrt(2.0) * std::sin(kpi * grid_.node(i));
    }
}

SpectralField DirichletEigenSystem::transform(const std::vector<double>& values) const {
    if (values.size() != grid_.n_interior)
        throw std::invalid_argument("sine_transform: level size mismatch");
    SpectralField out;
    out.c.resize(k_max_);
    for (std::size_t k = 1; k <= k_max_; ++k) {
        const double* row = basis_.data() + (k - 1) * grid_.n_interior;
        double s = 0.0;
        for (std::size_t i = 0; i < grid_.n_interior; ++i) s += row[i] * values[i];
        out.c[k - 1] = s * grid_.h;
    }
    return out;
}

std::vector<double> DirichletEigenSystem::inverse(const SpectralField& c) const {
    if (c.k_max() > k_max_) throw std::invalid_argument("inverse: coefficient count exceeds k_max");
    std::vector<double> v(grid_.n_interior, 0.0);
    for (std::size_t k = 1; k <= c.k_max(); ++k) {
        const double ck = c.c[k - 1];
        if (ck == 0.0) continue;
        const double* row = basis_.data() + (k - 1) * grid_.n_interior;
        for (std::size_t i = 0; i < grid_.n_interior; ++i) v[i] += ck * row[i];
    }
    return v;
}

SpectralField DirichletEigenSystem::semigroup_apply(const SpectralField& c, double t) const {
    if (t < 0.0) throw std::invalid_argument("semigroup_apply: t must be nonnegative");
    if (c.k_max() > k_max_) throw std::invalid_argument("semigroup_apply: mode count exceeds k_max");
    SpectralField out = c;
    for (std::size_t k = 1; k <= c.k_max(); ++k) out.c[k - 1] *= std::exp(-lambda_[k - 1] * t);
    return out;
}

double DirichletEigenSystem::bessel_norm(const SpectralField& c, double a) const {
    if (a < 0.0) throw std::invalid_argument("bessel_norm: negative order not supported");
    if (c.k_max() > k_max_) throw std::invalid_argument("bessel_norm: mode count exceeds k_max");
    double s = 0.0;
    for (std::size_t k = 1; k <= c.k_max(); ++k) {
        const double ck = c.c[k - 1];
        s += std::pow(1.0 + lambda_[k - 1], a) * ck * ck;
    }
    return std::sqrt(s);
}

std::vector<RegularizationProbeRow> regularization_constant_probe(
    const DirichletEigenSystem& eig, double a, double delta, const std::vector<double>& t_list) {
    if (delta < 0.0) throw std::invalid_argument("regularization_constant_probe: delta >= 0 required");
    (void)a;  // the single-mode ratio (1+lambda_k)^{delta/2} e^{-lambda_k t} is independent of a
    std::vector<RegularizationProbeRow> rows;
    rows.reserve(t_list.size());
    for (double t : t_list) {
        if (t < 0.0) throw std::invalid_argument("regularization_constant_probe: t >= 0 required");
        double best = 0.0;
        for (std::size_t k = 1; k <= eig.k_max(); ++k) {
            const double r = std::pow(1.0 + eig.lambda(k), delta / 2.0) * std::exp(-eig.lambda(k) * t);
            best = std::max(best, r);
        }
        rows.push_back({t, best, best * std::pow(t, delta / 2.0)});
    }
    return rows;
}

}  // namespace spdelab
