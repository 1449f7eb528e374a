#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spdelab/spectral.hpp"

using namespace spdelab;
namespace nm = std::numbers;

namespace {
std::vector<double> sample_mode(const SpatialGrid& g, std::size_t k) {
    std::vector<double> v(g.n_interior);
    for (std::size_t i = 0; i < g.n_interior; ++i)
        v[i] = std::sqrt(2.0) * std::sin(static_cast<double>(k) * nm::pi * g.node(i));
    return v;
}
}  // namespace

TEST_CASE("eigenvalues increase and the sampled basis is discretely orthonormal") {
    SpatialGrid g(16);
    DirichletEigenSystem eig(g, 16);
    for (std::size_t k = 2; k <= 16; ++k) CHECK(eig.lambda(k) > eig.lambda(k - 1));
    for (std::size_t k = 1; k <= 4; ++k)
        for (std::size_t l = 1; l <= 4; ++l) {
            double dot = 0.0;
            for (std::size_t i = 0; i < 16; ++i) dot += eig.basis(k, i) * eig.basis(l, i) * g.h;
            CHECK(dot == doctest::Approx(k == l ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
        }
    CHECK_THROWS_AS(DirichletEigenSystem(g, 17), std::invalid_argument);
}

TEST_CASE("discrete stencil eigenvalue variant") {
    SpatialGrid g(8);
    DirichletEigenSystem eig(g, 8, DirichletEigenSystem::Eigenvalues::discrete_stencil);
    for (std::size_t k = 1; k <= 8; ++k) {
        const double expected = 2.0 * (1.0 - std::cos(k * nm::pi * g.h)) / (g.h * g.h);
        CHECK(eig.lambda(k) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(eig.lambda(k) < (k * nm::pi) * (k * nm::pi));  // stencil underestimates
    }
}

TEST_CASE("sine transform of a pure mode") {
    SpatialGrid g(9);
    DirichletEigenSystem eig(g, 9);
    auto c = eig.transform(sample_mode(g, 1));
    CHECK(c.c[0] == doctest::Approx(1.0).epsilon(1e-13));
    for (std::size_t k = 2; k <= 9; ++k) CHECK(std::abs(c.c[k - 1]) < 1e-13);

    auto z = eig.transform(std::vector<double>(9, 0.0));
    for (double v : z.c) CHECK(v == 0.0);
}

TEST_CASE("round trip is exact at full truncation") {
    // derived round-trip oracle on a random vector, n = k_max = 8
    SpatialGrid g(8);
    DirichletEigenSystem eig(g, 8);
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(8);
    for (auto& x : v) x = u(gen);
    auto back = eig.inverse(eig.transform(v));
    for (std::size_t i = 0; i < 8; ++i) CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-12));
}

TEST_CASE("Parseval isometry at full truncation") {
    SpatialGrid g(32);
    DirichletEigenSystem eig(g, 32);
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(32);
    for (auto& x : v) x = u(gen);
    auto c = eig.transform(v);
    double sum_v = 0.0, sum_c = 0.0;
    for (double x : v) sum_v += x * x * g.h;
    for (double x : c.c) sum_c += x * x;
    CHECK(sum_c == doctest::Approx(sum_v).epsilon(1e-13));
}

TEST_CASE("semigroup action") {
    SpatialGrid g(8);
    DirichletEigenSystem eig(g, 8);
    SpectralField c;
    c.c = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};

    auto id = eig.semigroup_apply(c, 0.0);
    CHECK(id.c[0] == 1.0);

    auto s = eig.semigroup_apply(c, 0.1);
    CHECK(s.c[0] == doctest::Approx(std::exp(-0.1 * nm::pi * nm::pi)).epsilon(1e-15));
    CHECK(s.c[0] == doctest::Approx(0.3727).epsilon(1e-3));

    // coefficients decay monotonically to zero as t grows
    SpectralField mix;
    mix.c = {0.5, -0.3, 0.2, 0.0, 0.0, 0.0, 0.0, 0.1};
    double prev = 1e300;
    for (double t : {0.01, 0.1, 1.0, 10.0}) {
        auto out = eig.semigroup_apply(mix, t);
        double norm = eig.bessel_norm(out, 0.0);
        CHECK(norm < prev);
        prev = norm;
    }
    CHECK(prev < 1e-10);

    CHECK_THROWS_AS(eig.semigroup_apply(c, -1.0), std::invalid_argument);
}

TEST_CASE("semigroup property under composition") {
    SpatialGrid g(8);
    DirichletEigenSystem eig(g, 8);
    SpectralField c;
    c.c = {0.3, -1.2, 0.9, 0.01, 2.0, -0.4, 0.05, 1.0};
    auto once = eig.semigroup_apply(c, 0.07);
    auto twice = eig.semigroup_apply(eig.semigroup_apply(c, 0.03), 0.04);
    for (std::size_t k = 0; k < 8; ++k)
        CHECK(once.c[k] == doctest::Approx(twice.c[k]).epsilon(1e-14));
}

TEST_CASE("bessel norm") {
    SpatialGrid g(8);
    DirichletEigenSystem eig(g, 8);
    SpectralField c;
    c.c = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    CHECK(eig.bessel_norm(c, 0.0) == doctest::Approx(1.0));
    CHECK(eig.bessel_norm(c, 1.0) ==
          doctest::Approx(std::sqrt(1.0 + nm::pi * nm::pi)).epsilon(1e-14));
    CHECK(eig.bessel_norm(c, 1.0) == doctest::Approx(3.2969).epsilon(1e-4));
    CHECK_THROWS_AS(eig.bessel_norm(c, -0.5), std::invalid_argument);

    // a = 0 collapses to the plain l2 norm of the coefficients
    SpectralField r;
    r.c = {0.5, -0.25, 0.125, 0.0, 0.0, 0.0, 0.0, 0.0};
    double l2 = 0.0;
    for (double x : r.c) l2 += x * x;
    CHECK(eig.bessel_norm(r, 0.0) == doctest::Approx(std::sqrt(l2)).epsilon(1e-15));
}

TEST_CASE("bessel norm is monotone in the order and separates smooth from rough") {
    SpatialGrid g(16);
    DirichletEigenSystem eig(g, 16);
    SpectralField smooth, rough;
    smooth.c.assign(16, 0.0);
    smooth.c[0] = 1.0;  // sin(pi x)
    rough.c.resize(16);
    for (std::size_t k = 1; k <= 16; ++k) rough.c[k - 1] = 1.0 / static_cast<double>(k);

    double prev = 0.0;
    for (double a : {0.0, 0.5, 1.0, 1.5, 2.0}) {
        const double n = eig.bessel_norm(rough, a);
        CHECK(n >= prev);
        prev = n;
    }

    // independent summation oracle for the ratio growth with a
    auto oracle = [&](const SpectralField& c, double a) {
        double s = 0.0;
        for (std::size_t k = 1; k <= 16; ++k) {
            const double lam = (k * nm::pi) * (k * nm::pi);
            s += std::pow(1.0 + lam, a) * c.c[k - 1] * c.c[k - 1];
        }
        return std::sqrt(s);
    };
    double prev_ratio = 0.0;
    for (double a : {0.0, 1.0, 2.0}) {
        CHECK(eig.bessel_norm(rough, a) == doctest::Approx(oracle(rough, a)).epsilon(1e-13));
        const double ratio = eig.bessel_norm(rough, a) / eig.bessel_norm(smooth, a);
        CHECK(ratio > prev_ratio);
        prev_ratio = ratio;
    }
}

TEST_CASE("regularization probe matches the single-mode maximization oracle") {
    SpatialGrid g(32);
    DirichletEigenSystem eig(g, 32);
    const double delta = 0.75;
    const std::vector<double> ts = {1e-4, 4e-4, 1.6e-3, 6.4e-3, 2.56e-2, 1.024e-1};
    auto rows = regularization_constant_probe(eig, 1.0, delta, ts);
    REQUIRE(rows.size() == ts.size());
    for (std::size_t j = 0; j < ts.size(); ++j) {
        double best = 0.0;
        for (std::size_t k = 1; k <= 32; ++k) {
            const double lam = (k * nm::pi) * (k * nm::pi);
            best = std::max(best, std::pow(1.0 + lam, delta / 2.0) * std::exp(-lam * ts[j]));
        }
        CHECK(rows[j].ratio == doctest::Approx(best).epsilon(1e-12));
    }
    // the scaled product stays bounded: doubling t moves it by less than 2x
    for (std::size_t j = 0; j + 1 < rows.size(); ++j) {
        const double r = rows[j + 1].scaled / rows[j].scaled;
        CHECK(r < 2.0);
        CHECK(r > 0.25);
    }
}

TEST_CASE("regularization probe at delta = 0 is a contraction") {
    SpatialGrid g(8);
    DirichletEigenSystem eig(g, 8);
    for (const auto& row : regularization_constant_probe(eig, 0.0, 0.0, {0.0, 0.01, 0.1, 1.0}))
        CHECK(row.ratio <= 1.0 + 1e-15);
}
