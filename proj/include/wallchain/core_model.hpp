#pragma once

// Physical constants, state representations, the energy inner product and a
// discrete realization of the skew-adjoint generator of the coupled
// field/oscillator system.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wallchain/error.hpp"

namespace wallchain {

struct MediumParams {
    double rho0 = 1.0;  // kg/m^3
    double a = 1.0;     // m/s
    double S = 1.0;     // m^2

    /// Characteristic impedance a*rho0.
    double impedance() const { return a * rho0; }
    void validate() const;
};

/// One finite configuration of walls: equilibrium positions, masses and
/// spring constants, all confined to [center - L/2, center + L/2].
struct OscillatorChain {
    std::vector<double> s;
    std::vector<double> M;
    std::vector<double> K;
    double L = 1.0;
    double center = 0.0;

    double lo() const { return center - 0.5 * L; }
    double hi() const { return center + 0.5 * L; }

    std::size_t size() const { return s.size(); }
    bool empty() const { return s.empty(); }
    void validate() const;
};

struct UniformGrid {
    double x_min = 0.0;
    double dx = 1.0;
    std::size_t nodes = 0;

    double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx; }
    double x_max() const { return x(nodes - 1); }

    /// Grid on [-half_extent, half_extent] containing x = 0 as a node.
    /// half_extent is rounded up to a whole number of cells.
    static UniformGrid centered(double half_extent, double dx);
};

/// A grid plus the node index of every wall, strictly increasing.
struct WallGrid {
    UniformGrid grid;
    std::vector<std::size_t> wall_nodes;

    /// wall index at node i, or -1.
    std::vector<int> wall_map() const;
    void validate() const;
};

/// A chain whose positions have been moved onto grid nodes.
struct SnappedChain {
    OscillatorChain chain;
    WallGrid mesh;
    std::vector<double> offsets;  // snapped - requested, per wall
};

/// Moves every wall onto its nearest node. Two walls on one node, or a wall
/// on (or outside) the outermost nodes, is an error.
SnappedChain snap_chain(const OscillatorChain& chain, const UniformGrid& grid);

/// (p, v, y, z) with p stored double valued at wall nodes. At a wall node k
/// (wall j), p[k] is the mean of p_left[j] and p_right[j]; v is single valued.
struct PhysicalState {
    WallGrid mesh;
    std::vector<double> p;
    std::vector<double> v;
    std::vector<double> p_left;
    std::vector<double> p_right;
    std::vector<double> y;
    std::vector<double> z;
    double t = 0.0;

    static PhysicalState zeros(const WallGrid& mesh);
    void check_shape() const;
};

/// Characteristic representation w+ = p + a rho0 v, w- = p - a rho0 v.
/// At wall node k of wall j, wplus[k] holds the value arriving from the left
/// (left limit) and wminus[k] the value arriving from the right (right
/// limit). The outgoing values follow from z_j, which makes v(s_j) = z_j hold
/// by construction.
struct FiniteState {
    WallGrid mesh;
    std::vector<double> wplus;
    std::vector<double> wminus;
    std::vector<double> y;
    std::vector<double> z;
    double t = 0.0;

    static FiniteState zeros(const WallGrid& mesh);
    void check_shape() const;
};

PhysicalState to_physical(const FiniteState& state, const MediumParams& medium);

/// Requires v(s_j) = z_j; the wall-node velocity is taken from z.
FiniteState to_characteristic(const PhysicalState& state, const MediumParams& medium);

struct EnergyBreakdown {
    double e_ac = 0.0;
    double e_osc = 0.0;
    double e_tot = 0.0;
};

struct JumpRegistry {
    std::vector<double> sigma;  // p(s+) - p(s-)
    std::vector<double> zeta;   // v'(s+) - v'(s-)
};

/// Composite trapezoid sum of f*g over the whole grid. At wall nodes the
/// left/right products are averaged.
double trapezoid(const UniformGrid& grid, std::span<const double> f);

EnergyBreakdown energy(const PhysicalState& state, const MediumParams& medium,
                       const OscillatorChain& chain);
EnergyBreakdown energy(const FiniteState& state, const MediumParams& medium,
                       const OscillatorChain& chain);

/// Field energy restricted to [x_lo, x_hi]; oscillators excluded. Partial
/// cells at the ends are handled by linear interpolation of the integrand.
double field_energy_in(const PhysicalState& state, const MediumParams& medium, double x_lo,
                       double x_hi);

double inner_product(const PhysicalState& psi1, const PhysicalState& psi2,
                     const MediumParams& medium, const OscillatorChain& chain);

/// sqrt(inner_product(psi, psi)).
double state_norm(const PhysicalState& psi, const MediumParams& medium,
                  const OscillatorChain& chain);

/// p_reg(x_i) = p(x_i) - 1/2 sum_j sigma_j sgn(x_i - s_j), with sgn(0) = 0.
std::vector<double> regular_part(const UniformGrid& grid, std::span<const double> p,
                                 const JumpRegistry& registry, const OscillatorChain& chain);

/// Regular part of a double-valued pressure; single valued on the grid.
std::vector<double> regular_part(const PhysicalState& state, const JumpRegistry& registry,
                                 const OscillatorChain& chain);

JumpRegistry extract_jumps(const PhysicalState& state, const OscillatorChain& chain);

struct GeneratorImage {
    PhysicalState image;
    double domain_residual = 0.0;  // max_j |v(s_j) - z_j|
};

GeneratorImage apply_generator(const PhysicalState& state, const MediumParams& medium,
                               const OscillatorChain& chain);

/// Kernel element with plateau levels[k] between walls k and k+1 (zero-based),
/// zero pressure outside [s_1, s_n], zero velocities, y_j = -S sigma_j / K_j.
PhysicalState static_solution(const OscillatorChain& chain, const MediumParams& medium,
                              const WallGrid& mesh, std::span<const double> levels);

/// The n-1 unit-plateau static states.
std::vector<PhysicalState> static_basis(const OscillatorChain& chain, const MediumParams& medium,
                                        const WallGrid& mesh);

namespace detail {

/// Derivative of a field that is smooth on each segment between walls. Each
/// wall node is the endpoint of two segments; `left`/`right` hold the one
/// sided field values there. Returns per-node derivatives plus one-sided
/// derivatives at walls. Second order everywhere a segment has >= 3 nodes.
struct SegmentDerivative {
    std::vector<double> d;        // at non-wall nodes; mean of one-sided at walls
    std::vector<double> d_left;   // per wall
    std::vector<double> d_right;  // per wall
};

SegmentDerivative segment_derivative(const WallGrid& mesh, std::span<const double> f,
                                     std::span<const double> left,
                                     std::span<const double> right);

}  // namespace detail

}  // namespace wallchain
