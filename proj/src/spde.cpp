#include "spdelab/spde.hpp"

#include <cmath>
#include <stdexcept>

namespace spdelab {

void CoefficientSet::validate(double range, std::size_t samples) const {
    if (!(nu > 0.0) || nu > mu)
        throw std::invalid_argument("CoefficientSet: require 0 < nu <= mu, got nu=" +
                                    std::to_string(nu) + " mu=" + std::to_string(mu));
    double growth = 0.0;
    for (std::size_t j = 0; j < samples; ++j) {
        const double xi = -range + 2.0 * range * static_cast<double>(j) /
                                       static_cast<double>(samples - 1);
        const double a = A(xi);
        if (!(a >= nu - 1e-12) || !(a <= mu + 1e-12))
            throw std::invalid_argument("CoefficientSet: A(" + std::to_string(xi) +
                                        ")=" + std::to_string(a) + " outside [nu,mu]");
        growth = std::max(growth, (std::abs(B(xi)) + std::abs(F(xi))) / (1.0 + std::abs(xi)));
        if (!std::isfinite(growth))
            throw std::invalid_argument("CoefficientSet: B or F non-finite at xi=" +
                                        std::to_string(xi));
    }
}

CoefficientSet CoefficientSet::heat() {
    CoefficientSet c;
    c.A = [](double) { return 1.0; };
    c.Aprime = [](double) { return 0.0; };
    c.B = [](double) { return 0.0; };
    c.Bprime = [](double) { return 0.0; };
    c.F = [](double) { return 0.0; };
    c.Fprime = [](double) { return 0.0; };
    c.nu = 1.0;
    c.mu = 1.0;
    return c;
}

CoefficientSet CoefficientSet::twoplus_sin_A() {
    CoefficientSet c = heat();
    c.A = [](double xi) { return 2.0 + std::sin(xi); };
    c.Aprime = [](double xi) { return std::cos(xi); };
    c.nu = 1.0;
    c.mu = 3.0;
    return c;
}

CoefficientSet CoefficientSet::with_burgers_flux(CoefficientSet base, double clip) {
    base.B = [clip](double xi) {
        if (std::abs(xi) <= clip) return 0.5 * xi * xi;
        return clip * std::abs(xi) - 0.5 * clip * clip;  // C^1 linear extension
    };
    base.Bprime = [clip](double xi) {
        if (std::abs(xi) <= clip) return xi;
        return xi > 0.0 ? clip : -clip;
    };
    return base;
}

CoefficientSet CoefficientSet::with_linear_drift(CoefficientSet base, double rate) {
    base.F = [rate](double xi) { return rate * xi; };
    base.Fprime = [rate](double) { return rate; };
    return base;
}

std::vector<double> solve_tridiagonal(std::vector<double> diag, const std::vector<double>& lower,
                                      const std::vector<double>& upper, std::vector<double> rhs) {
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n)
        throw std::invalid_argument("solve_tridiagonal: size mismatch");
    // forward sweep; lower[0] and upper[n-1] are ignored
    for (std::size_t i = 1; i < n; ++i) {
        const double piv = diag[i - 1];
        if (!(std::abs(piv) > 1e-300) || !std::isfinite(piv))
            throw std::runtime_error("solve_tridiagonal: degenerate pivot at row " +
                                     std::to_string(i - 1) + " (ellipticity breach?)");
        const double w = lower[i] / piv;
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if (!(std::abs(diag[n - 1]) > 1e-300) || !std::isfinite(diag[n - 1]))
        throw std::runtime_error("solve_tridiagonal: degenerate pivot at last row");
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    return rhs;
}

std::vector<double> spde_step(const std::vector<double>& u_n, double dt, double h,
                              const CoefficientSet& coeffs, const NoiseModel& model,
                              const double* dwk, const SpatialGrid& grid, const StepOptions& opts) {
    const std::size_t n = u_n.size();
    // face values by arithmetic mean, zero boundary neighbours
    std::vector<double> a_face(n + 1), b_face(n + 1);
    for (std::size_t f = 0; f <= n; ++f) {
        const double ul = (f == 0) ? 0.0 : u_n[f - 1];
        const double ur = (f == n) ? 0.0 : u_n[f];
        const double um = 0.5 * (ul + ur);
        a_face[f] = coeffs.A(um);
        b_face[f] = coeffs.B(um);
    }

    std::vector<double> diag(n), lower(n), upper(n), rhs(n);
    const double r = dt / (h * h);
    for (std::size_t i = 0; i < n; ++i) {
        diag[i] = 1.0 + r * (a_face[i] + a_face[i + 1]);
        lower[i] = (i == 0) ? 0.0 : -r * a_face[i];
        upper[i] = (i + 1 == n) ? 0.0 : -r * a_face[i + 1];
        rhs[i] = u_n[i] + dt * ((b_face[i + 1] - b_face[i]) / h + coeffs.F(u_n[i]));
    }
    if (!model.is_zero()) {
        const auto noise = model.apply_increments(u_n, dwk, grid);
        for (std::size_t i = 0; i < n; ++i) rhs[i] += noise[i];
    }

    auto u_next = solve_tridiagonal(std::move(diag), lower, upper, std::move(rhs));
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(u_next[i]))
            throw std::runtime_error("spde_step: non-finite state (blow-up)");
        if (std::abs(u_next[i]) > opts.blowup_ceiling)
            throw std::runtime_error("spde_step: sup-norm exceeded blow-up ceiling " +
                                     std::to_string(opts.blowup_ceiling));
    }
    return u_next;
}

SpdeRun run_spde(const SpdeRunConfig& config) {
    config.coeffs.validate(config.ellipticity_probe_range);
    const std::size_t n = config.grid.n_interior;
    const std::size_t k_trunc = config.model.is_zero() ? 1 : config.model.k_trunc();

    SpdeRun out{make_field(config.grid, config.times, config.u0),
                WienerPath(config.seed, config.times, k_trunc),
                config.coeffs,
                config.model,
                config.seed,
                config.scheme_tag,
                {}};

    auto& mon = out.monitor;
    mon.l2.resize(config.times.n_steps + 1);
    mon.grad_l2.resize(config.times.n_steps + 1);
    mon.sup.resize(config.times.n_steps + 1);

    std::vector<double> u_cur(out.u.level(0), out.u.level(0) + n);
    auto record = [&](std::size_t level, const std::vector<double>& v) {
        mon.l2[level] = l2_norm(v, config.grid.h);
        mon.grad_l2[level] = l2_norm(discrete_gradient(v, config.grid.h), config.grid.h);
        mon.sup[level] = sup_norm(v);
    };
    record(0, u_cur);

    for (std::size_t step = 0; step < config.times.n_steps; ++step) {
        try {
            u_cur = spde_step(u_cur, config.times.dt, config.grid.h, config.coeffs, config.model,
                              out.path.step_increments(step), config.grid, config.step_opts);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("run_spde: step " + std::to_string(step) + " (seed " +
                                     std::to_string(config.seed) + "): " + e.what());
        }
        double* dst = out.u.level(step + 1);
        for (std::size_t i = 0; i < n; ++i) dst[i] = u_cur[i];
        record(step + 1, u_cur);
    }
    return out;
}

APrioriSeries a_priori_monitor(const SpdeRun& run, double p, double ceiling) {
    if (p < 2.0) throw std::invalid_argument("a_priori_monitor: p >= 2 required");
    const auto& f = run.u;
    const double h = f.grid().h;
    const double dt = f.times().dt;
    APrioriSeries s;
    s.lp.resize(f.n_levels());
    s.grad_energy.resize(f.n_levels());
    double acc = 0.0;
    for (std::size_t l = 0; l < f.n_levels(); ++l) {
        std::vector<double> v(f.level(l), f.level(l) + f.grid().n_interior);
        s.lp[l] = lp_norm(v, h, p);
        const double g = l2_norm(discrete_gradient(v, h), h);
        if (l > 0) acc += g * g * dt;
        s.grad_energy[l] = acc;
        if (s.lp[l] > ceiling) s.ceiling_exceeded = true;
    }
    return s;
}

}  // namespace spdelab
