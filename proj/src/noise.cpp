#include "spdelab/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdelab {

namespace rng {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double gaussian(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t s = seed;
    s = mix64(s ^ (a * 0xD6E8FEB86659FD93ULL));
    s = mix64(s ^ (b * 0xA2D7289F5AE1F34BULL));
    s = mix64(s ^ (c * 0x9E3779B97F4A7C15ULL));
    const std::uint64_t u1bits = mix64(s);
    const std::uint64_t u2bits = mix64(s ^ 0x6C62272E07BB0142ULL);
    const double u1 = (static_cast<double>(u1bits >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(u2bits >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rng

WienerPath::WienerPath(std::uint64_t seed, const TimeGrid& times, std::size_t k_trunc)
    : seed_(seed), times_(times), k_trunc_(k_trunc) {
    if (k_trunc_ == 0) throw std::invalid_argument("WienerPath: k_trunc must be >= 1");
    const std::size_t n_steps = times_.n_steps;
    increments_.resize(n_steps * k_trunc_);

    // n_steps = m 2^L, m odd
    std::size_t m = n_steps;
    std::size_t levels = 0;
    while (m % 2 == 0) {
        m /= 2;
        ++levels;
    }

    std::vector<double> inc, fine;
    for (std::size_t k = 1; k <= k_trunc_; ++k) {
        inc.assign(m, 0.0);
        double len = times_.horizon / static_cast<double>(m);
        const double sbase = std::sqrt(len);
        for (std::size_t j = 0; j < m; ++j) inc[j] = rng::gaussian(seed_, k, 0, j) * sbase;
        for (std::size_t lvl = 1; lvl <= levels; ++lvl) {
            fine.assign(inc.size() * 2, 0.0);
            const double smid = std::sqrt(len / 4.0);
            for (std::size_t j = 0; j < inc.size(); ++j) {
                const double xi = rng::gaussian(seed_, k, lvl, j) * smid;
                fine[2 * j] = 0.5 * inc[j] + xi;
                fine[2 * j + 1] = 0.5 * inc[j] - xi;
            }
            inc.swap(fine);
            len /= 2.0;
        }
        for (std::size_t n = 0; n < n_steps; ++n) increments_[n * k_trunc_ + (k - 1)] = inc[n];
    }
}

WienerPath sample_path(std::uint64_t seed, const TimeGrid& times, std::size_t k_trunc) {
    return WienerPath(seed, times, k_trunc);
}

NoiseModel NoiseModel::finite(std::vector<std::function<double(double, double)>> hk,
                              std::size_t k_trunc) {
    if (hk.empty() || hk.size() != k_trunc)
        throw std::invalid_argument("NoiseModel::finite: need one H_k per mode");
    NoiseModel m;
    m.variant_ = Variant::finite_dim;
    m.k_trunc_ = k_trunc;
    m.hk_ = std::move(hk);
    return m;
}

NoiseModel NoiseModel::linear_q(std::vector<double> q) {
    if (q.empty()) throw std::invalid_argument("NoiseModel::linear_q: empty multiplier sequence");
    NoiseModel m;
    m.variant_ = Variant::linear_q;
    m.k_trunc_ = q.size();
    m.q_ = std::move(q);
    return m;
}

NoiseModel NoiseModel::linear_q_geometric(double amp, double ratio, std::size_t k_trunc) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("linear_q_geometric: ratio must be in (0,1)");
    std::vector<double> q(k_trunc);
    double v = amp;
    for (std::size_t k = 0; k < k_trunc; ++k) {
        q[k] = v;
        v *= ratio;
    }
    return linear_q(std::move(q));
}

NoiseModel NoiseModel::linear_q_polynomial(double amp, double p, std::size_t k_trunc) {
    std::vector<double> q(k_trunc);
    for (std::size_t k = 0; k < k_trunc; ++k)
        q[k] = amp * std::pow(static_cast<double>(k + 1), -p);
    return linear_q(std::move(q));
}

NoiseModel NoiseModel::none() {
    NoiseModel m;
    m.variant_ = Variant::linear_q;
    m.k_trunc_ = 0;
    return m;
}

const double* NoiseModel::basis_row(std::size_t k, const SpatialGrid& grid) const {
    const std::size_t n = grid.n_interior;
    if (basis_cache_n_ != n) {
        basis_cache_.resize(k_trunc_ * n);
        for (std::size_t kk = 1; kk <= k_trunc_; ++kk)
            for (std::size_t i = 0; i < n; ++i)
                basis_cache_[(kk - 1) * n + i] =
                    std::sqrt(2.0) * std::sin(static_cast<double>(kk) * std::numbers::pi * grid.node(i));
        basis_cache_n_ = n;
    }
    return basis_cache_.data() + (k - 1) * n;
}

double NoiseModel::eval_finite(std::size_t k, double x, double xi) const {
    if (variant_ != Variant::finite_dim)
        throw std::logic_error("NoiseModel::eval_finite: finite_dim models only");
    if (k == 0 || k > k_trunc_) throw std::invalid_argument("eval_finite: mode out of range");
    return hk_[k - 1](x, xi);
}

std::vector<double> NoiseModel::apply(const std::vector<double>& u_level, std::size_t k,
                                      const SpatialGrid& grid) const {
    if (k == 0 || k > k_trunc_) throw std::invalid_argument("NoiseModel::apply: mode out of range");
    if (u_level.size() != grid.n_interior)
        throw std::invalid_argument("NoiseModel::apply: level size mismatch");
    const std::size_t n = grid.n_interior;
    std::vector<double> out(n);
    if (variant_ == Variant::finite_dim) {
        const auto& f = hk_[k - 1];
        for (std::size_t i = 0; i < n; ++i) out[i] = f(grid.node(i), u_level[i]);
    } else {
        const double* ek = basis_row(k, grid);
        const double qk = q_[k - 1];
        for (std::size_t i = 0; i < n; ++i) out[i] = u_level[i] * qk * ek[i];
    }
    for (double v : out)
        if (!std::isfinite(v)) throw std::runtime_error("NoiseModel::apply: non-finite output");
    return out;
}

std::vector<double> NoiseModel::apply_increments(const std::vector<double>& u_level,
                                                 const double* dwk, const SpatialGrid& grid) const {
    const std::size_t n = grid.n_interior;
    std::vector<double> out(n, 0.0);
    if (k_trunc_ == 0) return out;
    if (u_level.size() != n)
        throw std::invalid_argument("NoiseModel::apply_increments: level size mismatch");
    if (variant_ == Variant::finite_dim) {
        for (std::size_t k = 1; k <= k_trunc_; ++k) {
            const auto& f = hk_[k - 1];
            const double dw = dwk[k - 1];
            for (std::size_t i = 0; i < n; ++i) out[i] += f(grid.node(i), u_level[i]) * dw;
        }
    } else {
        // u q_k e_k summed over modes: accumulate s_i = sum_k (q_k dW_k) e_k(x_i)
        std::vector<double> s(n, 0.0);
        for (std::size_t k = 1; k <= k_trunc_; ++k) {
            const double w = q_[k - 1] * dwk[k - 1];
            if (w == 0.0) continue;
            const double* ek = basis_row(k, grid);
            for (std::size_t i = 0; i < n; ++i) s[i] += w * ek[i];
        }
        for (std::size_t i = 0; i < n; ++i) out[i] = u_level[i] * s[i];
    }
    for (double v : out)
        if (!std::isfinite(v))
            throw std::runtime_error("NoiseModel::apply_increments: non-finite output");
    return out;
}

GrowthReport check_growth(const NoiseModel& model, const std::vector<double>& probe_values,
                          const SpatialGrid& grid, double stability_factor) {
    if (probe_values.empty()) throw std::invalid_argument("check_growth: empty probe set");
    const std::size_t n = grid.n_interior;
    auto best_constant = [&](double scale) {
        double best = 0.0;
        std::vector<double> level(n);
        for (double xi0 : probe_values) {
            const double xi = scale * xi0;
            level.assign(n, xi);
            std::vector<double> sumsq(n, 0.0);
            for (std::size_t k = 1; k <= model.k_trunc(); ++k) {
                auto hv = model.apply(level, k, grid);
                for (std::size_t i = 0; i < n; ++i) sumsq[i] += hv[i] * hv[i];
            }
            for (std::size_t i = 0; i < n; ++i) best = std::max(best, sumsq[i] / (1.0 + xi * xi));
        }
        return best;
    };
    GrowthReport r{};
    r.constant = model.is_zero() ? 0.0 : best_constant(1.0);
    r.constant_doubled = model.is_zero() ? 0.0 : best_constant(2.0);
    r.pass = std::isfinite(r.constant) && std::isfinite(r.constant_doubled) &&
             r.constant_doubled <= r.constant * stability_factor + 1e-12;
    r.detail = r.pass ? "growth constant stable under probe-range doubling"
                      : "growth constant rises superlinearly with probe range";
    return r;
}

namespace {

// W^{1,p} surrogate via discrete gradient and lp sums
double w1p_norm(const std::vector<double>& u, double h, double p) {
    const auto g = discrete_gradient(u, h);
    double su = 0.0, sg = 0.0;
    for (double v : u) su += std::pow(std::abs(v), p);
    for (double v : g) sg += std::pow(std::abs(v), p);
    return std::pow(su * h + sg * h, 1.0 / p);
}

double har_ratio(const NoiseModel& model, double a, const std::vector<double>& u,
                 const DirichletEigenSystem& eig, std::size_t k_trunc) {
    const SpatialGrid& grid = eig.grid();
    double ssq = 0.0;
    for (std::size_t k = 1; k <= k_trunc; ++k) {
        auto hv = model.apply(u, k, grid);
        const double nk = eig.bessel_norm(eig.transform(hv), a);
        ssq += nk * nk;
    }
    double rhs = 1.0 + eig.bessel_norm(eig.transform(u), a);
    if (a > 1.0) rhs += std::pow(w1p_norm(u, grid.h, 2.0 * a), a);
    return std::sqrt(ssq) / rhs;
}

}  // namespace

HarReport check_har_surrogate(const NoiseModel& model, double a,
                              const std::vector<std::vector<double>>& probe_fields,
                              const DirichletEigenSystem& eig, double stability_factor) {
    if (a < 0.0) throw std::invalid_argument("check_har_surrogate: a >= 0 required");
    HarReport rep{};
    rep.a = a;
    const std::size_t k_full = model.k_trunc();
    const std::size_t k_half = std::max<std::size_t>(1, k_full / 2);
    for (const auto& u : probe_fields) {
        if (k_full == 0) break;
        rep.ratio_half = std::max(rep.ratio_half, har_ratio(model, a, u, eig, k_half));
        rep.ratio_full = std::max(rep.ratio_full, har_ratio(model, a, u, eig, k_full));
    }
    rep.trace_ok = true;
    if (model.variant() == NoiseModel::Variant::finite_dim && a > 0.5) {
        // boundary condition H_k(x, 0) = 0 at x in {0,1}, required when a > 1/r
        for (std::size_t k = 1; k <= k_full; ++k)
            if (std::abs(model.eval_finite(k, 0.0, 0.0)) > 1e-12 ||
                std::abs(model.eval_finite(k, 1.0, 0.0)) > 1e-12)
                rep.trace_ok = false;
    }
    rep.pass = std::isfinite(rep.ratio_full) &&
               rep.ratio_full <= std::max(rep.ratio_half * stability_factor, 1e-9);
    return rep;
}

}  // namespace spdelab
