#include "spdelab/split.hpp"

#include <cmath>
#include <stdexcept>

namespace spdelab {

SpaceTimeField stochastic_convolution(const WienerPath& path, const NoiseModel& model,
                                      const SpaceTimeField& u, const DirichletEigenSystem& eig) {
    if (!model.is_zero() && path.k_trunc() != model.k_trunc())
        throw std::invalid_argument("stochastic_convolution: path/model mode truncation mismatch");
    if (path.times().n_steps != u.times().n_steps)
        throw std::invalid_argument("stochastic_convolution: path and u time grids differ");

    const SpatialGrid& grid = u.grid();
    const TimeGrid& times = u.times();
    const double dt = times.dt;

    SpaceTimeField z(grid, times);  // level 0 stays zero: Z(0) = 0
    if (model.is_zero()) return z;

    std::vector<double> damp(eig.k_max());
    for (std::size_t k = 1; k <= eig.k_max(); ++k) damp[k - 1] = std::exp(-eig.lambda(k) * dt);

    SpectralField c;
    c.c.assign(eig.k_max(), 0.0);
    std::vector<double> u_level(grid.n_interior);
    for (std::size_t n = 0; n < times.n_steps; ++n) {
        for (std::size_t i = 0; i < grid.n_interior; ++i) u_level[i] = u.at(n, i);
        const auto noise = model.apply_increments(u_level, path.step_increments(n), grid);
        const auto nc = eig.transform(noise);
        for (std::size_t k = 0; k < eig.k_max(); ++k) c.c[k] = damp[k] * (c.c[k] + nc.c[k]);
        const auto level = eig.inverse(c);
        double* dst = z.level(n + 1);
        for (std::size_t i = 0; i < grid.n_interior; ++i) dst[i] = level[i];
    }
    return z;
}

YSolveResult solve_y_divergence(const SpaceTimeField& u, const SpaceTimeField& z,
                                const CoefficientSet& coeffs) {
    if (u.grid().n_interior != z.grid().n_interior || u.times().n_steps != z.times().n_steps)
        throw std::invalid_argument("solve_y_divergence: u and z grids differ");
    const SpatialGrid& grid = u.grid();
    const TimeGrid& times = u.times();
    const std::size_t n = grid.n_interior;
    const double h = grid.h;
    const double dt = times.dt;

    YSolveResult out{SpaceTimeField(grid, times), {}};
    out.forcing.g_faces.resize(times.n_steps);
    out.forcing.f_nodes.resize(times.n_steps);

    std::vector<double> y_cur(u.level(0), u.level(0) + n);  // y(0) = u0
    double* dst0 = out.y.level(0);
    for (std::size_t i = 0; i < n; ++i) dst0[i] = y_cur[i];

    std::vector<double> a_face(n + 1), g_face(n + 1), f_node(n);
    std::vector<double> diag(n), lower(n), upper(n), rhs(n);
    const double r = dt / (h * h);

    for (std::size_t step = 0; step < times.n_steps; ++step) {
        const double* un = u.level(step);
        const auto grad_z = discrete_gradient(z, step);
        for (std::size_t f = 0; f <= n; ++f) {
            const double ul = (f == 0) ? 0.0 : un[f - 1];
            const double ur = (f == n) ? 0.0 : un[f];
            const double um = 0.5 * (ul + ur);
            const double af = coeffs.A(um);
            a_face[f] = af;
            g_face[f] = coeffs.B(um) + (af - 1.0) * grad_z[f];
        }
        for (std::size_t i = 0; i < n; ++i) f_node[i] = coeffs.F(un[i]);

        for (std::size_t i = 0; i < n; ++i) {
            diag[i] = 1.0 + r * (a_face[i] + a_face[i + 1]);
            lower[i] = (i == 0) ? 0.0 : -r * a_face[i];
            upper[i] = (i + 1 == n) ? 0.0 : -r * a_face[i + 1];
            rhs[i] = y_cur[i] + dt * ((g_face[i + 1] - g_face[i]) / h + f_node[i]);
        }
        y_cur = solve_tridiagonal(diag, lower, upper, rhs);

        double* dst = out.y.level(step + 1);
        for (std::size_t i = 0; i < n; ++i) dst[i] = y_cur[i];
        out.forcing.g_faces[step] = g_face;
        out.forcing.f_nodes[step] = f_node;
    }
    return out;
}

SpaceTimeField solve_nondivergence(const SpaceTimeField& a, const SpaceTimeField& f,
                                   const std::vector<double>& v0,
                                   const std::function<double(double, int)>& phi, double nu,
                                   double mu) {
    const SpatialGrid& grid = a.grid();
    const TimeGrid& times = a.times();
    const std::size_t n = grid.n_interior;
    if (f.grid().n_interior != n || f.times().n_steps != times.n_steps || v0.size() != n)
        throw std::invalid_argument("solve_nondivergence: shape mismatch");
    const double h = grid.h;
    const double dt = times.dt;
    const double r = dt / (h * h);

    SpaceTimeField v(grid, times);
    std::vector<double> v_cur = v0;
    double* dst0 = v.level(0);
    for (std::size_t i = 0; i < n; ++i) dst0[i] = v_cur[i];

    std::vector<double> diag(n), lower(n), upper(n), rhs(n);
    for (std::size_t step = 0; step < times.n_steps; ++step) {
        const double* an = a.level(step);
        const double* fn = f.level(step);
        const double t_next = times.time(step + 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double ai = an[i];
            if (!(ai >= nu - 1e-12) || !(ai <= mu + 1e-12))
                throw std::invalid_argument("solve_nondivergence: coefficient outside [nu,mu]");
            diag[i] = 1.0 + 2.0 * r * ai;
            lower[i] = (i == 0) ? 0.0 : -r * ai;
            upper[i] = (i + 1 == n) ? 0.0 : -r * ai;
            rhs[i] = v_cur[i] + dt * fn[i];
        }
        rhs[0] += r * an[0] * phi(t_next, 0);
        rhs[n - 1] += r * an[n - 1] * phi(t_next, 1);
        v_cur = solve_tridiagonal(diag, lower, upper, rhs);
        double* dst = v.level(step + 1);
        for (std::size_t i = 0; i < n; ++i) dst[i] = v_cur[i];
    }
    return v;
}

DecompositionResult decompose(const SpdeRun& run, const DirichletEigenSystem& eig) {
    DecompositionResult out{stochastic_convolution(run.path, run.model, run.u, eig),
                            SpaceTimeField{},
                            {},
                            0.0,
                            {}};
    auto ysol = solve_y_divergence(run.u, out.z, run.coeffs);
    out.y = std::move(ysol.y);
    out.forcing = std::move(ysol.forcing);

    const std::size_t n = run.u.grid().n_interior;
    out.residual_series.resize(run.u.n_levels());
    for (std::size_t l = 0; l < run.u.n_levels(); ++l) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            m = std::max(m, std::abs(run.u.at(l, i) - out.y.at(l, i) - out.z.at(l, i)));
        out.residual_series[l] = m;
        out.residual_sup = std::max(out.residual_sup, m);
    }
    return out;
}

namespace {

double spacetime_lp(const std::vector<std::vector<double>>& levels, double h, double dt, double p) {
    double s = 0.0;
    for (const auto& lev : levels)
        for (double v : lev) s += std::pow(std::abs(v), p);
    return std::pow(s * h * dt, 1.0 / p);
}

}  // namespace

EstimateReport energy_estimate_check(const SpaceTimeField& y, const std::vector<double>& v0,
                                     const YForcing& forcing, double c_max) {
    const double h = y.grid().h;
    const double dt = y.times().dt;
    const std::size_t n = y.grid().n_interior;

    double linf_l2 = 0.0;
    double grad_energy = 0.0;
    for (std::size_t l = 0; l < y.n_levels(); ++l) {
        std::vector<double> v(y.level(l), y.level(l) + n);
        linf_l2 = std::max(linf_l2, l2_norm(v, h));
        if (l > 0) {
            const double g = l2_norm(discrete_gradient(v, h), h);
            grad_energy += g * g * dt;
        }
    }
    EstimateReport rep;
    rep.lhs = linf_l2 + std::sqrt(grad_energy);
    rep.rhs = l2_norm(v0, h) + spacetime_lp(forcing.g_faces, h, dt, 2.0) +
              spacetime_lp(forcing.f_nodes, h, dt, 2.0);
    if (rep.rhs < 1e-14) {
        rep.pass = rep.lhs <= 1e-10;
        rep.ratio = 0.0;
        rep.detail = rep.pass ? "zero data, zero solution"
                              : "contradiction: zero data but nonzero solution";
        return rep;
    }
    rep.ratio = rep.lhs / rep.rhs;
    rep.pass = rep.ratio <= c_max;
    rep.detail = "energy ratio vs C_max=" + std::to_string(c_max);
    return rep;
}

EstimateReport linfty_bound_check(const SpaceTimeField& y, const std::vector<double>& v0,
                                  const YForcing& forcing, double r0, double c_max) {
    if (r0 < 2.0) throw std::invalid_argument("linfty_bound_check: r0 >= 2 required");
    const double h = y.grid().h;
    const double dt = y.times().dt;

    double sup = 0.0;
    for (double v : y.raw()) sup = std::max(sup, std::abs(v));

    EstimateReport rep;
    rep.lhs = sup;
    rep.rhs = sup_norm(v0) + spacetime_lp(forcing.g_faces, h, dt, 2.0 * r0) +
              spacetime_lp(forcing.f_nodes, h, dt, r0);
    if (rep.rhs < 1e-14) {
        rep.pass = rep.lhs <= 1e-10;
        rep.ratio = 0.0;
        rep.detail = rep.pass ? "zero data, zero solution"
                              : "contradiction: zero data but nonzero solution";
        return rep;
    }
    rep.ratio = rep.lhs / rep.rhs;
    rep.pass = rep.ratio <= c_max;
    rep.detail = "sup bound ratio at r0=" + std::to_string(r0);
    return rep;
}

namespace {

// linear extrapolation of (x1,v1),(x2,v2) to x=0
double extrap0(double x1, double v1, double x2, double v2) {
    return v1 - x1 * (v2 - v1) / (x2 - x1);
}

}  // namespace

CompatibilityReport compatibility_check(const std::vector<double>& u0, double h,
                                        const CoefficientSet& coeffs, int order,
                                        double tol_factor) {
    const std::size_t n = u0.size();
    if (order < 1 || order > 4)
        throw std::invalid_argument("compatibility_check: order k in {1,2,3,4}");
    const std::size_t needed = (order >= 4) ? 10 : (order >= 2 ? 6 : 3);
    if (n < needed)
        throw std::invalid_argument(
            "compatibility_check: profile has too few nodes for the requested order "
            "(insufficient discrete smoothness)");
    const double tol = tol_factor * h;

    CompatibilityReport rep;
    rep.order = order;
    auto push = [&](const std::string& name, double left, double right) {
        const bool ok = std::abs(left) <= tol && std::abs(right) <= tol;
        rep.conditions.push_back({name, left, right, tol, ok});
        rep.all_pass = rep.all_pass && ok;
    };

    // u0 trace from the two nodes nearest each endpoint
    push("u0_boundary", extrap0(h, u0[0], 2 * h, u0[1]),
         extrap0(h, u0[n - 1], 2 * h, u0[n - 2]));
    if (order < 2) return rep;

    // u0^(1) = A'(u0) (u0')^2 + A(u0) u0'' + B'(u0) u0' + F(u0) at interior nodes,
    // central differences on the sampled profile (no boundary values assumed)
    std::vector<double> u1(n, 0.0);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double d1 = (u0[j + 1] - u0[j - 1]) / (2.0 * h);
        const double d2 = (u0[j + 1] - 2.0 * u0[j] + u0[j - 1]) / (h * h);
        u1[j] = coeffs.Aprime(u0[j]) * d1 * d1 + coeffs.A(u0[j]) * d2 +
                coeffs.Bprime(u0[j]) * d1 + coeffs.F(u0[j]);
        if (!std::isfinite(u1[j]))
            throw std::runtime_error("compatibility_check: non-finite u0^(1) (profile too rough)");
    }
    // u1 is defined on nodes 1..n-2; extrapolate from the two nearest usable nodes
    push("u0_1_boundary", extrap0(2 * h, u1[1], 3 * h, u1[2]),
         extrap0(2 * h, u1[n - 2], 3 * h, u1[n - 3]));
    if (order < 4) return rep;

    // second-order condition 2 A'(0) u0' (u1)' + B'(0) (u1)' + A(0) (u1)''
    // u1 usable on 1..n-2, so its central derivatives live on 2..n-3
    std::vector<double> expr(n, 0.0);
    for (std::size_t j = 2; j + 2 < n; ++j) {
        const double du0 = (u0[j + 1] - u0[j - 1]) / (2.0 * h);
        const double du1 = (u1[j + 1] - u1[j - 1]) / (2.0 * h);
        const double d2u1 = (u1[j + 1] - 2.0 * u1[j] + u1[j - 1]) / (h * h);
        expr[j] = 2.0 * coeffs.Aprime(0.0) * du0 * du1 + coeffs.Bprime(0.0) * du1 +
                  coeffs.A(0.0) * d2u1;
    }
    push("second_order_k4", extrap0(3 * h, expr[2], 4 * h, expr[3]),
         extrap0(3 * h, expr[n - 3], 4 * h, expr[n - 4]));
    return rep;
}

}  // namespace spdelab
