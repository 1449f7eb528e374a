#include "spdelab/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace spdelab {

SpatialGrid::SpatialGrid(std::size_t n_interior_) : n_interior(n_interior_) {
    if (n_interior == 0) throw std::invalid_argument("SpatialGrid: n_interior must be positive");
    h = 1.0 / static_cast<double>(n_interior + 1);
}

std::vector<double> SpatialGrid::nodes() const {
    std::vector<double> x(n_interior);
    for (std::size_t i = 0; i < n_interior; ++i) x[i] = node(i);
    return x;
}

TimeGrid::TimeGrid(std::size_t n_steps_, double horizon_) : n_steps(n_steps_), horizon(horizon_) {
    if (n_steps == 0) throw std::invalid_argument("TimeGrid: n_steps must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
    dt = horizon / static_cast<double>(n_steps);
}

SpaceTimeField::SpaceTimeField(SpatialGrid grid, TimeGrid times)
    : grid_(grid), times_(times), values_((times.n_steps + 1) * grid.n_interior, 0.0) {}

SpaceTimeField make_field(const SpatialGrid& grid, const TimeGrid& times,
                          const std::function<double(double)>& init) {
    SpaceTimeField f(grid, times);
    for (std::size_t i = 0; i < grid.n_interior; ++i) {
        double v = init(grid.node(i));
        if (!std::isfinite(v))
            throw std::invalid_argument("make_field: non-finite initial value at x=" +
                                        std::to_string(grid.node(i)));
        f.at(0, i) = v;
    }
    return f;
}

std::vector<double> discrete_gradient(const std::vector<double>& v, double h) {
    const std::size_t n = v.size();
    std::vector<double> g(n + 1);
    double prev = 0.0;  // zero Dirichlet value at x = 0
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = (v[i] - prev) / h;
        prev = v[i];
    }
    g[n] = (0.0 - prev) / h;  // zero at x = 1
    return g;
}

std::vector<double> discrete_gradient(const SpaceTimeField& field, std::size_t level) {
    if (level >= field.n_levels()) throw std::out_of_range("discrete_gradient: level out of range");
    const std::size_t n = field.grid().n_interior;
    std::vector<double> v(field.level(level), field.level(level) + n);
    return discrete_gradient(v, field.grid().h);
}

double l2_norm(const std::vector<double>& v, double h) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s * h);
}

double lp_norm(const std::vector<double>& v, double h, double p) {
    if (p <= 0.0) throw std::invalid_argument("lp_norm: p must be positive");
    double s = 0.0;
    for (double x : v) s += std::pow(std::abs(x), p);
    return std::pow(s * h, 1.0 / p);
}

double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

void write_field_csv(std::ostream& os, const SpaceTimeField& field) {
    os << "t,x,value\n";
    char buf[160];
    const std::size_t n = field.grid().n_interior;
    for (std::size_t l = 0; l < field.n_levels(); ++l) {
        const double t = field.times().time(l);
        for (std::size_t i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", t, field.grid().node(i),
                          field.at(l, i));
            os << buf;
        }
    }
}

void write_field_csv(const std::string& path, const SpaceTimeField& field) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_field_csv: cannot open " + path);
    write_field_csv(os, field);
}

}  // namespace spdelab
