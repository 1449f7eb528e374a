#include "spdelab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace spdelab {

namespace {

struct FitResult {
    double slope;
    double se;
    double r2;
    bool ok;
};

FitResult fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    // least squares on (log x, log y); drops nonpositive y
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (ys[i] > 0.0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    }
    const std::size_t m = lx.size();
    if (m < 2) return {0.0, 0.0, 0.0, false};
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx <= 0.0) return {0.0, 0.0, 0.0, false};
    const double slope = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = ly[i] - my - slope * (lx[i] - mx);
        ss_res += r * r;
    }
    const double r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
    const double se = (m > 2) ? std::sqrt(ss_res / (static_cast<double>(m - 2) * sxx)) : 0.0;
    return {slope, se, r2, true};
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return (m % 2 == 1) ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace

double parabolic_holder_norm(const SpaceTimeField& field, double beta, const HolderOptions& opts) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("parabolic_holder_norm: beta must lie in (0,1)");
    const std::size_t n = field.grid().n_interior;
    const std::size_t nl = field.n_levels();
    const double h = field.grid().h;
    const double dt = field.times().dt;

    double sup = 0.0;
    for (double v : field.raw()) sup = std::max(sup, std::abs(v));

    const std::size_t npts = nl * n;
    const double npairs = 0.5 * static_cast<double>(npts) * static_cast<double>(npts - 1);

    double semi = 0.0;
    auto consider = [&](std::size_t l1, std::size_t j1, std::size_t l2, std::size_t j2) {
        if (l1 == l2 && j1 == j2) return;
        const double dtau = std::abs(static_cast<double>(l1) - static_cast<double>(l2)) * dt;
        const double dx = std::abs(static_cast<double>(j1) - static_cast<double>(j2)) * h;
        const double d = std::max(std::sqrt(dtau), dx);
        if (d <= 0.0) return;
        const double df = std::abs(field.at(l1, j1) - field.at(l2, j2));
        semi = std::max(semi, df / std::pow(d, beta));
    };

    if (npairs <= static_cast<double>(opts.max_exhaustive_pairs)) {
        for (std::size_t p = 0; p < npts; ++p)
            for (std::size_t q = p + 1; q < npts; ++q)
                consider(p / n, p % n, q / n, q % n);
        return sup + semi;
    }

    // stratified sampling by distance decade; short distances would be
    // hopelessly undersampled by uniform pair draws
    const double d_max = std::max(std::sqrt(field.times().horizon), 1.0);
    const double d_min = std::min(std::sqrt(dt), h);
    std::mt19937_64 gen(opts.seed);
    std::uniform_int_distribution<std::size_t> pick_level(0, nl - 1);
    std::uniform_int_distribution<std::size_t> pick_col(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (double hi = d_max; hi > d_min; hi /= 10.0) {
        const double lo = hi / 10.0;
        for (std::size_t s = 0; s < opts.samples_per_decade; ++s) {
            const std::size_t l1 = pick_level(gen);
            const std::size_t j1 = pick_col(gen);
            const double d_target = lo * std::pow(hi / lo, unit(gen));
            // split the target distance between the two axes
            const double frac = unit(gen);
            long dl = static_cast<long>(std::llround(frac * d_target * d_target / dt));
            long dj = static_cast<long>(std::llround((1.0 - frac) * d_target / h));
            if (dl == 0 && dj == 0) (unit(gen) < 0.5 ? dl : dj) = 1;
            const long l2 = static_cast<long>(l1) + (unit(gen) < 0.5 ? dl : -dl);
            const long j2 = static_cast<long>(j1) + (unit(gen) < 0.5 ? dj : -dj);
            if (l2 < 0 || l2 >= static_cast<long>(nl) || j2 < 0 || j2 >= static_cast<long>(n))
                continue;
            consider(l1, j1, static_cast<std::size_t>(l2), static_cast<std::size_t>(j2));
        }
    }
    return sup + semi;
}

namespace {

std::vector<std::size_t> dyadic_lags(std::size_t base, std::size_t cap) {
    std::vector<std::size_t> lags;
    for (std::size_t lag = base; lag <= cap; lag *= 2) lags.push_back(lag);
    return lags;
}

ExponentEstimate finish_estimate(const std::vector<double>& scales,
                                 const std::vector<std::vector<double>>& per_fit_means,
                                 const std::vector<double>& pooled) {
    std::vector<double> slopes, ses, r2s;
    for (const auto& means : per_fit_means) {
        const auto fit = fit_loglog(scales, means);
        if (fit.ok) {
            slopes.push_back(fit.slope);
            ses.push_back(fit.se);
            r2s.push_back(fit.r2);
        }
    }
    if (slopes.empty())
        throw std::runtime_error("exponent estimate: degenerate field, increments vanish");
    ExponentEstimate est;
    est.exponent = median(slopes);
    est.std_error = median(ses);
    est.r2 = median(r2s);
    est.scales = scales;
    est.mean_abs = pooled;
    est.fit_lo = scales.front();
    est.fit_hi = scales.back();
    return est;
}

}  // namespace

ExponentEstimate estimate_time_exponent(const std::vector<const SpaceTimeField*>& replicas) {
    if (replicas.empty()) throw std::invalid_argument("estimate_time_exponent: no replicas");
    const SpaceTimeField& f0 = *replicas.front();
    const std::size_t n = f0.grid().n_interior;
    const std::size_t n_steps = f0.times().n_steps;
    const double dt = f0.times().dt;

    const std::size_t cap = n_steps / 8;  // tau <= T/8
    const auto lags = dyadic_lags(4, cap);
    if (lags.size() < 4)
        throw std::invalid_argument(
            "estimate_time_exponent: fewer than 4 dyadic lag levels in [4dt, T/8]");

    std::vector<double> scales(lags.size());
    for (std::size_t j = 0; j < lags.size(); ++j) scales[j] = static_cast<double>(lags[j]) * dt;

    // anchor set scales with the lag so that power laws are preserved exactly
    std::vector<std::vector<std::size_t>> anchors(lags.size());
    for (std::size_t j = 0; j < lags.size(); ++j) {
        for (std::size_t q = 0; q < 4; ++q) {
            const std::size_t t0 = q * lags[j] / 4;
            if (anchors[j].empty() || anchors[j].back() != t0) anchors[j].push_back(t0);
        }
    }

    // per node: mean over replicas and anchors of |f(t0 + tau, x) - f(t0, x)|
    std::vector<std::vector<double>> node_means(n, std::vector<double>(lags.size(), 0.0));
    for (const SpaceTimeField* fp : replicas) {
        if (fp->grid().n_interior != n || fp->times().n_steps != n_steps)
            throw std::invalid_argument("estimate_time_exponent: replica grids differ");
        for (std::size_t j = 0; j < lags.size(); ++j) {
            const double w = 1.0 / static_cast<double>(anchors[j].size());
            for (std::size_t t0 : anchors[j])
                for (std::size_t i = 0; i < n; ++i)
                    node_means[i][j] += w * std::abs(fp->at(t0 + lags[j], i) - fp->at(t0, i));
        }
    }
    const double inv_r = 1.0 / static_cast<double>(replicas.size());
    std::vector<double> pooled(lags.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < lags.size(); ++j) {
            node_means[i][j] *= inv_r;
            pooled[j] += node_means[i][j] / static_cast<double>(n);
        }
    return finish_estimate(scales, node_means, pooled);
}

ExponentEstimate estimate_space_exponent(const std::vector<const SpaceTimeField*>& replicas) {
    if (replicas.empty()) throw std::invalid_argument("estimate_space_exponent: no replicas");
    const SpaceTimeField& f0 = *replicas.front();
    const std::size_t n = f0.grid().n_interior;
    const std::size_t nl = f0.n_levels();
    const double h = f0.grid().h;

    // separations s = 2h * 2^j <= 1/8, i.e. node offsets 2*2^j <= (n+1)/8
    const std::size_t cap = (n + 1) / 8;
    const auto seps = dyadic_lags(2, cap);
    if (seps.size() < 4)
        throw std::invalid_argument(
            "estimate_space_exponent: fewer than 4 dyadic separation levels in [2h, 1/8]");

    std::vector<double> scales(seps.size());
    for (std::size_t j = 0; j < seps.size(); ++j) scales[j] = static_cast<double>(seps[j]) * h;

    std::vector<std::vector<double>> level_means(nl, std::vector<double>(seps.size(), 0.0));
    for (const SpaceTimeField* fp : replicas) {
        if (fp->grid().n_interior != n || fp->n_levels() != nl)
            throw std::invalid_argument("estimate_space_exponent: replica grids differ");
        for (std::size_t l = 0; l < nl; ++l)
            for (std::size_t j = 0; j < seps.size(); ++j) {
                const std::size_t d = seps[j];
                double m = 0.0;
                for (std::size_t i = 0; i + d < n; ++i)
                    m = std::max(m, std::abs(fp->at(l, i + d) - fp->at(l, i)));
                level_means[l][j] += m;
            }
    }
    const double inv_r = 1.0 / static_cast<double>(replicas.size());
    std::vector<double> pooled(seps.size(), 0.0);
    for (std::size_t l = 0; l < nl; ++l)
        for (std::size_t j = 0; j < seps.size(); ++j) {
            level_means[l][j] *= inv_r;
            pooled[j] += level_means[l][j] / static_cast<double>(nl);
        }
    return finish_estimate(scales, level_means, pooled);
}

BesselProfile bessel_regularity_profile(const SpaceTimeField& field,
                                        const std::vector<double>& a_list,
                                        const DirichletEigenSystem& eig,
                                        double stability_factor) {
    for (double a : a_list)
        if (a < 0.0) throw std::invalid_argument("bessel_regularity_profile: orders must be >= 0");
    BesselProfile prof;
    prof.a_list = a_list;
    const std::size_t nl = field.n_levels();
    const std::size_t na = a_list.size();
    const std::size_t k_half = std::max<std::size_t>(1, eig.k_max() / 2);
    const double dt = field.times().dt;

    prof.norms.assign(nl, std::vector<double>(na, 0.0));
    std::vector<double> agg_full(na, 0.0), agg_half(na, 0.0);
    std::vector<double> level(field.grid().n_interior);
    for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t i = 0; i < level.size(); ++i) level[i] = field.at(l, i);
        const SpectralField c = eig.transform(level);
        SpectralField c_half;
        c_half.c.assign(c.c.begin(), c.c.begin() + static_cast<long>(k_half));
        for (std::size_t ja = 0; ja < na; ++ja) {
            const double nf = eig.bessel_norm(c, a_list[ja]);
            const double nh = eig.bessel_norm(c_half, a_list[ja]);
            prof.norms[l][ja] = nf;
            agg_full[ja] += nf * nf * dt;
            agg_half[ja] += nh * nh * dt;
        }
    }
    prof.aggregate_full.resize(na);
    prof.aggregate_half.resize(na);
    prof.ratio.resize(na);
    for (std::size_t ja = 0; ja < na; ++ja) {
        prof.aggregate_full[ja] = std::sqrt(agg_full[ja]);
        prof.aggregate_half[ja] = std::sqrt(agg_half[ja]);
        prof.ratio[ja] = (prof.aggregate_half[ja] > 0.0)
                             ? prof.aggregate_full[ja] / prof.aggregate_half[ja]
                             : (prof.aggregate_full[ja] > 0.0 ? 1e300 : 1.0);
    }
    prof.cutoff = -1.0;
    for (std::size_t ja = 0; ja < na; ++ja) {
        if (prof.ratio[ja] <= stability_factor)
            prof.cutoff = a_list[ja];
        else
            break;
    }
    return prof;
}

}  // namespace spdelab
