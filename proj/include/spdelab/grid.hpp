#ifndef SPDELAB_GRID_HPP
#define SPDELAB_GRID_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace spdelab {

/// Uniform grid of interior nodes on (0,1); the endpoints carry the
/// homogeneous Dirichlet condition and are never stored.
struct SpatialGrid {
    std::size_t n_interior = 0;
    double h = 0.0;  // h = 1/(n_interior+1)

    explicit SpatialGrid(std::size_t n_interior_);
    SpatialGrid() = default;

    double node(std::size_t i) const { return static_cast<double>(i + 1) * h; }
    std::vector<double> nodes() const;
};

/// Uniform partition of [0,T] into n_steps steps.
struct TimeGrid {
    std::size_t n_steps = 0;
    double dt = 0.0;
    double horizon = 0.0;

    TimeGrid(std::size_t n_steps_, double horizon_);
    TimeGrid() = default;

    double time(std::size_t level) const { return static_cast<double>(level) * dt; }
};

/// Scalar field on the space-time grid, (n_steps+1) x n_interior, row-major
/// by time level. Boundary values are identically zero by convention and not
/// stored. Levels are written once by the producing solver and then treated
/// as immutable; read-only sharing across threads is safe.
class SpaceTimeField {
  public:
    SpaceTimeField(SpatialGrid grid, TimeGrid times);
    SpaceTimeField() = default;

    const SpatialGrid& grid() const { return grid_; }
    const TimeGrid& times() const { return times_; }
    std::size_t n_levels() const { return times_.n_steps + 1; }

    double* level(std::size_t l) { return values_.data() + l * grid_.n_interior; }
    const double* level(std::size_t l) const { return values_.data() + l * grid_.n_interior; }
    double& at(std::size_t l, std::size_t i) { return values_[l * grid_.n_interior + i]; }
    double at(std::size_t l, std::size_t i) const { return values_[l * grid_.n_interior + i]; }

    const std::vector<double>& raw() const { return values_; }
    std::vector<double>& raw() { return values_; }

  private:
    SpatialGrid grid_;
    TimeGrid times_;
    std::vector<double> values_;
};

/// Fill time level 0 with init(x_i), later levels zero. Rejects non-finite
/// initial values.
SpaceTimeField make_field(const SpatialGrid& grid, const TimeGrid& times,
                          const std::function<double(double)>& init);

/// Face-centered slopes (v_{i+1}-v_i)/h at the n_interior+1 faces of one time
/// level, using the zero boundary values at both ends.
std::vector<double> discrete_gradient(const SpaceTimeField& field, std::size_t level);
std::vector<double> discrete_gradient(const std::vector<double>& level_values, double h);

// discrete space norms over one level (interior nodes, weight h)
double l2_norm(const std::vector<double>& v, double h);
double lp_norm(const std::vector<double>& v, double h, double p);
double sup_norm(const std::vector<double>& v);

/// CSV dump, header "t,x,value", row-major by time then node, 17 significant
/// digits.
void write_field_csv(std::ostream& os, const SpaceTimeField& field);
void write_field_csv(const std::string& path, const SpaceTimeField& field);

}  // namespace spdelab

#endif
