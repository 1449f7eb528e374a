#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "spdelab/grid.hpp"

using namespace spdelab;
namespace nm = std::numbers;

TEST_CASE("spatial grid invariants") {
    for (std::size_t n : {1u, 3u, 7u, 127u}) {
        SpatialGrid g(n);
        CHECK(g.h * static_cast<double>(n + 1) == doctest::Approx(1.0).epsilon(1e-15));
        double prev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(g.node(i) > prev);
            CHECK(g.node(i) < 1.0);
            prev = g.node(i);
        }
    }
    CHECK_THROWS_AS(SpatialGrid(0), std::invalid_argument);
}

TEST_CASE("time grid invariants") {
    TimeGrid t(400, 0.1);
    CHECK(t.dt * 400 == doctest::Approx(0.1).epsilon(1e-15));
    CHECK_THROWS_AS(TimeGrid(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid(10, -1.0), std::invalid_argument);
}

TEST_CASE("make_field fills level 0 and zeroes the rest") {
    SpatialGrid g(3);
    TimeGrid t(4, 1.0);
    auto f = make_field(g, t, [](double x) { return std::sin(nm::pi * x); });
    CHECK(f.raw().size() == 5 * 3);
    CHECK(f.at(0, 0) == doctest::Approx(std::sin(nm::pi / 4)).epsilon(1e-15));
    CHECK(f.at(0, 1) == doctest::Approx(std::sin(nm::pi / 2)).epsilon(1e-15));
    CHECK(f.at(0, 2) == doctest::Approx(std::sin(3 * nm::pi / 4)).epsilon(1e-15));
    for (std::size_t l = 1; l <= 4; ++l)
        for (std::size_t i = 0; i < 3; ++i) CHECK(f.at(l, i) == 0.0);

    auto z = make_field(g, t, [](double) { return 0.0; });
    for (double v : z.raw()) CHECK(v == 0.0);

    SpatialGrid g1(1);
    auto q = make_field(g1, t, [](double x) { return x * (1.0 - x); });
    CHECK(q.at(0, 0) == doctest::Approx(0.25).epsilon(1e-15));

    CHECK_THROWS_AS(make_field(g, t, [](double) { return std::nan(""); }), std::invalid_argument);
}

TEST_CASE("discrete gradient hand values") {
    SpatialGrid g(1);
    TimeGrid t(1, 1.0);
    auto f = make_field(g, t, [](double) { return 1.0; });
    auto s = discrete_gradient(f, 0);
    REQUIRE(s.size() == 2);
    CHECK(s[0] == doctest::Approx(2.0));
    CHECK(s[1] == doctest::Approx(-2.0));

    auto z = discrete_gradient(std::vector<double>(5, 0.0), 1.0 / 6.0);
    for (double v : z) CHECK(v == 0.0);

    CHECK_THROWS_AS(discrete_gradient(f, 5), std::out_of_range);
}

TEST_CASE("discrete gradient reproduces linear profiles away from the boundary") {
    SpatialGrid g(63);
    std::vector<double> v(63);
    for (std::size_t i = 0; i < 63; ++i) v[i] = g.node(i);
    auto s = discrete_gradient(v, g.h);
    for (std::size_t f = 1; f < 63; ++f) CHECK(s[f] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gradient is linear in the field") {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1.0 / 18.0;
    std::vector<double> a(17), b(17), combo(17);
    for (int i = 0; i < 17; ++i) {
        a[i] = u(gen);
        b[i] = u(gen);
        combo[i] = 2.5 * a[i] - 0.75 * b[i];
    }
    auto ga = discrete_gradient(a, h);
    auto gb = discrete_gradient(b, h);
    auto gc = discrete_gradient(combo, h);
    for (std::size_t f = 0; f < gc.size(); ++f)
        CHECK(gc[f] == doctest::Approx(2.5 * ga[f] - 0.75 * gb[f]).epsilon(1e-12));
}

TEST_CASE("summation by parts against the divergence of the gradient") {
    // sum_faces grad(a) grad(b) h == -sum_nodes a div(grad b) h
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 31;
    const double h = 1.0 / 32.0;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = u(gen);
        b[i] = u(gen);
    }
    auto ga = discrete_gradient(a, h);
    auto gb = discrete_gradient(b, h);
    double lhs = 0.0;
    for (std::size_t f = 0; f <= n; ++f) lhs += ga[f] * gb[f] * h;
    double rhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) rhs -= a[i] * ((gb[i + 1] - gb[i]) / h) * h;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("csv dump format") {
    SpatialGrid g(3);
    TimeGrid t(2, 0.5);
    auto f = make_field(g, t, [](double x) { return 1.0 / 3.0 + x; });
    std::ostringstream os;
    write_field_csv(os, f);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,x,value");
    std::size_t rows = 0;
    std::string first_value;
    while (std::getline(is, line)) {
        if (rows == 0) first_value = line.substr(line.rfind(',') + 1);
        ++rows;
    }
    CHECK(rows == 3 * 3);
    // 17 significant digits round-trip exactly
    CHECK(std::stod(first_value) == f.at(0, 0));
}

TEST_CASE("space norms") {
    std::vector<double> v = {3.0, -4.0};
    CHECK(l2_norm(v, 0.5) == doctest::Approx(std::sqrt(12.5)));
    CHECK(sup_norm(v) == 4.0);
    CHECK(lp_norm(v, 0.5, 2.0) == doctest::Approx(l2_norm(v, 0.5)));
}
