#pragma once

// Time stepping of the finite-n coupled system with a unit-CFL characteristic
// scheme: the field transport is an exact shift, all discretization error
// lives in the per-wall trapezoidal solve.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "wallchain/core_model.hpp"
#include "wallchain/initial_data.hpp"

namespace wallchain {

struct SimGrid {
    WallGrid mesh;
    double dt = 0.0;  // always dx / a
    std::vector<double> snap_offsets;
};

/// Half extent X such that nothing launched from [lo, hi] or from the
/// chain region [center - L/2, center + L/2] reaches +-X within t_max.
double required_half_extent(double support_lo, double support_hi, double L, double a,
                            double t_max, double dx, double center = 0.0);

/// Builds the grid on [-X, X] (X rounded up to whole cells) and snaps the
/// chain onto it.
std::pair<SimGrid, SnappedChain> make_sim_grid(const OscillatorChain& chain,
                                               const MediumParams& medium, double dx,
                                               double half_extent);

using FieldFunction = std::function<double(double)>;

/// Samples p0, v0 onto the grid with y = z = 0. Rejects data whose support
/// (detected by sampling) meets [-L/2, L/2].
FiniteState init_state(const FieldFunction& p0, const FieldFunction& v0,
                       const OscillatorChain& chain, const MediumParams& medium,
                       const WallGrid& mesh);

FiniteState init_state(const InitialData& data, const OscillatorChain& chain,
                       const MediumParams& medium, const WallGrid& mesh);

struct WallStep {
    double y = 0.0;
    double z = 0.0;
    double wout_left = 0.0;   // w- emitted to the left
    double wout_right = 0.0;  // w+ emitted to the right
};

/// One trapezoidal step of
///   dy/dt = z,  M dz/dt = -K y - S (w_right - w_left) - 2 a rho0 S z
/// with the incoming characteristics held at the supplied (time averaged)
/// values.
WallStep wall_update(double y, double z, double winc_left, double winc_right, double M, double K,
                     const MediumParams& medium, double dt);

/// Reusable buffers for repeated stepping on one grid.
class FiniteStepper {
public:
    FiniteStepper(const OscillatorChain& chain, const MediumParams& medium, const SimGrid& grid);

    void advance(FiniteState& state);

    /// Largest |characteristic| that has left through either grid edge.
    double max_edge_outflow() const { return max_edge_outflow_; }

private:
    OscillatorChain chain_;
    MediumParams medium_;
    SimGrid grid_;
    std::vector<int> wall_map_;
    std::vector<double> next_plus_, next_minus_;
    double max_edge_outflow_ = 0.0;
};

FiniteState step(const FiniteState& state, const OscillatorChain& chain,
                 const MediumParams& medium, const SimGrid& grid);

/// E_tot computed directly from the characteristics; agrees with energy() to
/// rounding.
EnergyBreakdown characteristic_energy(const FiniteState& state, const MediumParams& medium,
                                      const OscillatorChain& chain);

/// max_j of |v(s_j-) - z_j| and |v(s_j+) - z_j| reconstructed from the
/// one-sided characteristic pairs.
double interface_residual(const FiniteState& state, const MediumParams& medium);

/// dv/dt = -(1/rho0) dp_reg/dx at field nodes; the wall ODE acceleration at
/// wall nodes.
std::vector<double> velocity_rate(const PhysicalState& state, const MediumParams& medium,
                                  const OscillatorChain& chain);

/// Running maxima of the discrete a-priori norms against constants derived
/// from ||Psi0||, ||A Psi0|| and ||A^2 Psi0||.
struct BoundMonitor {
    struct Entry {
        double bound = 0.0;
        double max_value = 0.0;
    };
    Entry v_h1;        // ||v||_{H1}
    Entry vdot_h1;     // ||dv/dt||_{H1}
    Entry kinetic;     // sqrt(sum M z^2)
    Entry wall_accel;  // sqrt(sum M |K/M z - a^2 rho0 S/M zeta|^2)
    Entry vx_reg_h1;   // ||d/dx (dv/dx)_reg||_{L2}
    std::size_t samples = 0;

    bool within(double slack) const;
};

struct GeneratorNorms {
    double psi = 0.0;   // ||Psi0||
    double apsi = 0.0;  // ||A Psi0||
    double a2psi = 0.0; // ||A^2 Psi0||
};

/// Norms of the initial datum (p0, v0, 0, 0) from the analytic derivatives.
GeneratorNorms initial_generator_norms(const InitialData& data, const MediumParams& medium,
                                       const UniformGrid& grid);

/// Same, from two applications of the discrete generator.
GeneratorNorms discrete_generator_norms(const PhysicalState& psi, const MediumParams& medium,
                                        const OscillatorChain& chain);

BoundMonitor make_bound_monitor(const GeneratorNorms& norms, const MediumParams& medium);
void update_bound_monitor(BoundMonitor& monitor, const PhysicalState& state,
                          const std::vector<double>& vdot, const MediumParams& medium,
                          const OscillatorChain& chain);

struct FiniteRunConfig {
    MediumParams medium;
    OscillatorChain chain;
    InitialData initial;
    std::optional<PhysicalState> initial_state;  // overrides `initial` when set
    double dx = 1e-3;
    double t_max = 1.0;
    double half_extent = 0.0;         // 0: size automatically
    std::size_t snapshot_every = 0;   // steps between snapshots; 0: first and last only
    std::size_t monitor_every = 1;    // steps between bound evaluations; 0: off
    bool record_vdot = false;
    double edge_tolerance = 1e-12;    // relative to the initial max |w|
    /// Called at every snapshot step with the state and dv/dt. When set,
    /// snapshots are handed over instead of stored.
    std::function<void(std::size_t step, const PhysicalState&, const std::vector<double>& vdot)>
        observer;
};

struct Trajectory {
    SimGrid grid;
    OscillatorChain chain;  // snapped
    std::vector<PhysicalState> snapshots;
    std::vector<std::vector<double>> vdot;  // per snapshot, when requested
    std::vector<double> energy_times;
    std::vector<EnergyBreakdown> energy;
    std::vector<double> residual;  // per step
    BoundMonitor bounds;
    FiniteState final_state;
    std::size_t steps = 0;
    bool edge_reached = false;
    double max_edge_outflow = 0.0;

    double max_residual() const;
    double max_relative_drift() const;
};

Trajectory simulate(const FiniteRunConfig& config);

}  // namespace wallchain
