#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "spdelab/noise.hpp"

using namespace spdelab;
namespace nm = std::numbers;

TEST_CASE("identical seed gives bit-identical increments") {
    TimeGrid t(48, 0.5);
    WienerPath a(12345, t, 3), b(12345, t, 3);
    for (std::size_t n = 0; n < 48; ++n)
        for (std::size_t k = 1; k <= 3; ++k) CHECK(a.increment(n, k) == b.increment(n, k));
    WienerPath c(12346, t, 3);
    bool any_diff = false;
    for (std::size_t n = 0; n < 48; ++n) any_diff = any_diff || c.increment(n, 1) != a.increment(n, 1);
    CHECK(any_diff);
}

TEST_CASE("increment moments over 1e5 draws") {
    // Monte Carlo oracle: sample variance of N(0, dt) lies in a 3-sigma band
    TimeGrid t(1, 0.01);
    const std::size_t n = 100000;
    double mean = 0.0, m2 = 0.0;
    std::vector<double> w1(n), w2(n);
    for (std::size_t s = 0; s < n; ++s) {
        WienerPath p(s, t, 2);
        w1[s] = p.increment(0, 1);
        w2[s] = p.increment(0, 2);
        const double d = w1[s] - mean;
        mean += d / static_cast<double>(s + 1);
        m2 += d * (w1[s] - mean);
    }
    const double var = m2 / static_cast<double>(n - 1);
    CHECK(var > 0.0095);
    CHECK(var < 0.0105);
    CHECK(std::abs(mean) < 3.0 * std::sqrt(0.01 / n));

    // distinct modes are uncorrelated to within the Monte Carlo band
    double c12 = 0.0, mu1 = 0.0, mu2 = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        mu1 += w1[s];
        mu2 += w2[s];
    }
    mu1 /= n;
    mu2 /= n;
    double v1 = 0.0, v2 = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        c12 += (w1[s] - mu1) * (w2[s] - mu2);
        v1 += (w1[s] - mu1) * (w1[s] - mu1);
        v2 += (w2[s] - mu2) * (w2[s] - mu2);
    }
    CHECK(std::abs(c12 / std::sqrt(v1 * v2)) < 0.02);
}

TEST_CASE("dyadic refinement is nested") {
    // same seed, same odd base: each coarse increment equals the sum of the
    // fine increments it covers
    TimeGrid coarse(20, 0.4);   // odd part 5
    TimeGrid fine(80, 0.4);     // odd part 5, two more levels
    WienerPath pc(99, coarse, 2), pf(99, fine, 2);
    for (std::size_t k = 1; k <= 2; ++k)
        for (std::size_t n = 0; n < 20; ++n) {
            double sum = 0.0;
            for (std::size_t j = 0; j < 4; ++j) sum += pf.increment(4 * n + j, k);
            CHECK(sum == doctest::Approx(pc.increment(n, k)).epsilon(1e-13));
        }
}

TEST_CASE("apply_noise_operator hand values") {
    SpatialGrid g(7);
    // linear_q with q1 = 1 on u = e_1: pointwise u * e_1
    auto lin = NoiseModel::linear_q({1.0});
    std::vector<double> u(7);
    for (std::size_t i = 0; i < 7; ++i) u[i] = std::sqrt(2.0) * std::sin(nm::pi * g.node(i));
    auto out = lin.apply(u, 1, g);
    for (std::size_t i = 0; i < 7; ++i)
        CHECK(out[i] == doctest::Approx(u[i] * std::sqrt(2.0) * std::sin(nm::pi * g.node(i)))
                            .epsilon(1e-14));

    // finite_dim H_1(x, xi) = xi on u = 0
    auto fd = NoiseModel::finite({[](double, double xi) { return xi; }}, 1);
    auto zero = fd.apply(std::vector<double>(7, 0.0), 1, g);
    for (double v : zero) CHECK(v == 0.0);

    // finite_dim H_1(x, xi) = sin(pi x) xi on the constant level u = 1
    auto fs = NoiseModel::finite({[](double x, double xi) { return std::sin(nm::pi * x) * xi; }}, 1);
    auto s = fs.apply(std::vector<double>(7, 1.0), 1, g);
    for (std::size_t i = 0; i < 7; ++i)
        CHECK(s[i] == doctest::Approx(std::sin(nm::pi * g.node(i))).epsilon(1e-14));

    CHECK_THROWS_AS(lin.apply(u, 2, g), std::invalid_argument);
    auto bad = NoiseModel::finite({[](double, double xi) { return 1.0 / xi; }}, 1);
    CHECK_THROWS_AS(bad.apply(std::vector<double>(7, 0.0), 1, g), std::runtime_error);
}

TEST_CASE("linear_q operator is linear in u") {
    SpatialGrid g(9);
    auto model = NoiseModel::linear_q_geometric(1.0, 0.5, 5);
    std::vector<double> u(9), u2(9);
    for (std::size_t i = 0; i < 9; ++i) {
        u[i] = std::cos(3.0 * g.node(i));
        u2[i] = -2.5 * u[i];
    }
    for (std::size_t k = 1; k <= 5; ++k) {
        auto a = model.apply(u, k, g);
        auto b = model.apply(u2, k, g);
        for (std::size_t i = 0; i < 9; ++i)
            CHECK(b[i] == doctest::Approx(-2.5 * a[i]).epsilon(1e-13));
    }
}

TEST_CASE("growth check on the geometric multiplier sequence") {
    // derived oracle: sum_k q_k^2 e_k(x)^2 <= 2 sum_k 4^{-(k-1)} = 8/3
    SpatialGrid g(63);
    auto model = NoiseModel::linear_q_geometric(1.0, 0.5, 63);
    std::vector<double> probes;
    for (int j = -20; j <= 20; ++j) probes.push_back(0.2 * j);
    auto rep = check_growth(model, probes, g);
    CHECK(rep.pass);
    CHECK(rep.constant <= 8.0 / 3.0 + 1e-6);
    CHECK(rep.constant > 1.0);  // the bound is near-attained at x = 1/2, large xi

    // independent summation oracle at the worst probe
    double oracle = 0.0;
    for (std::size_t i = 0; i < 63; ++i) {
        double s = 0.0;
        for (std::size_t k = 1; k <= 63; ++k) {
            const double qk = std::pow(0.5, static_cast<double>(k - 1));
            const double ek = std::sqrt(2.0) * std::sin(k * nm::pi * g.node(i));
            s += qk * qk * ek * ek;
        }
        oracle = std::max(oracle, s);
    }
    const double xi = 4.0;  // largest probe
    CHECK(rep.constant == doctest::Approx(oracle * xi * xi / (1.0 + xi * xi)).epsilon(1e-12));
}

TEST_CASE("growth check fails for quadratic noise and passes for zero noise") {
    SpatialGrid g(15);
    auto quad = NoiseModel::finite({[](double, double xi) { return xi * xi; }}, 1);
    std::vector<double> probes;
    for (int j = -8; j <= 8; ++j) probes.push_back(0.5 * j);
    auto rep = check_growth(quad, probes, g);
    CHECK_FALSE(rep.pass);

    auto zero = NoiseModel::finite({[](double, double) { return 0.0; }}, 1);
    auto zrep = check_growth(zero, probes, g);
    CHECK(zrep.pass);
    CHECK(zrep.constant == 0.0);

    CHECK_THROWS_AS(check_growth(quad, {}, g), std::invalid_argument);
}

namespace {
// test-side Hilbert-Schmidt surrogate, independent of check_har_surrogate
double surrogate_norm(const NoiseModel& m, const std::vector<double>& u, double a,
                      const DirichletEigenSystem& eig, std::size_t k_trunc) {
    double ssq = 0.0;
    for (std::size_t k = 1; k <= k_trunc; ++k) {
        const double nk = eig.bessel_norm(eig.transform(m.apply(u, k, eig.grid())), a);
        ssq += nk * nk;
    }
    return std::sqrt(ssq);
}
}  // namespace

TEST_CASE("Hilbert-Schmidt surrogate checks") {
    SpatialGrid g(31);
    DirichletEigenSystem eig(g, 31);
    auto model = NoiseModel::linear_q_geometric(1.0, 0.25, 31);

    // zero probe: surrogate and ratio vanish
    auto rep0 = check_har_surrogate(model, 1.0, {std::vector<double>(31, 0.0)}, eig);
    CHECK(rep0.ratio_full == 0.0);
    CHECK(rep0.pass);

    // e_1..e_4 probes at a = 1: finite ratio, stable under mode doubling
    std::vector<std::vector<double>> probes;
    for (std::size_t k = 1; k <= 4; ++k) {
        std::vector<double> p(31);
        for (std::size_t i = 0; i < 31; ++i) p[i] = eig.basis(k, i);
        probes.push_back(std::move(p));
    }
    auto rep = check_har_surrogate(model, 1.0, probes, eig);
    CHECK(rep.pass);
    CHECK(rep.ratio_full > 0.0);
    CHECK(rep.ratio_full <= rep.ratio_half * 1.25 + 1e-12);

    // finite_dim H_1(x, xi) = xi at a = 1: finite ratio
    auto fd = NoiseModel::finite({[](double, double xi) { return xi; }}, 1);
    auto frep = check_har_surrogate(fd, 1.0, probes, eig);
    CHECK(frep.pass);
    CHECK(std::isfinite(frep.ratio_full));
}

TEST_CASE("surrogate at a = 0 is controlled by the growth constant") {
    // Remark-style bound: (sum_k ||H_k(., u)||_2^2)^{1/2} <= sqrt(C) (1 + ||u||_2)
    SpatialGrid g(31);
    DirichletEigenSystem eig(g, 31);
    auto model = NoiseModel::linear_q_geometric(1.0, 0.5, 31);
    std::vector<double> probes_xi;
    for (int j = -10; j <= 10; ++j) probes_xi.push_back(0.4 * j);
    const double growth_c = check_growth(model, probes_xi, g).constant;

    std::vector<double> u(31);
    for (std::size_t i = 0; i < 31; ++i) u[i] = 2.0 * std::sin(5.0 * g.node(i));
    const double s0 = surrogate_norm(model, u, 0.0, eig, 31);
    CHECK(s0 <= std::sqrt(growth_c) * (1.0 + l2_norm(u, g.h)) + 1e-9);
}

TEST_CASE("surrogate norm is nondecreasing in the truncation") {
    SpatialGrid g(31);
    DirichletEigenSystem eig(g, 31);
    auto model = NoiseModel::linear_q_polynomial(1.0, 1.5, 31);
    std::vector<double> u(31);
    for (std::size_t i = 0; i < 31; ++i) u[i] = std::sin(7.0 * g.node(i));
    double prev = 0.0;
    for (std::size_t k : {4u, 8u, 16u, 31u}) {
        const double s = surrogate_norm(model, u, 0.5, eig, k);
        CHECK(s >= prev - 1e-15);
        prev = s;
    }
}

TEST_CASE("finite_dim boundary trace condition is flagged") {
    SpatialGrid g(15);
    DirichletEigenSystem eig(g, 15);
    std::vector<std::vector<double>> probes{std::vector<double>(15, 0.5)};
    // H_1(x, 0) = sin(pi x) * 0 = 0 at the boundary: ok
    auto ok = NoiseModel::finite({[](double x, double xi) { return std::sin(nm::pi * x) * xi; }}, 1);
    CHECK(check_har_surrogate(ok, 1.0, probes, eig).trace_ok);
    // H_1(x, 0) = 1 violates the trace condition
    auto bad = NoiseModel::finite({[](double, double xi) { return 1.0 + 0.0 * xi; }}, 1);
    CHECK_FALSE(check_har_surrogate(bad, 1.0, probes, eig).trace_ok);
}
