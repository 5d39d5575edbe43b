#pragma once

// Oscillator chains that discretize a density profile, checks of the
// assumptions on such sequences, and the comparison of finite-n runs against
// the homogenized limit.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "wallchain/core_model.hpp"
#include "wallchain/effective_sim.hpp"
#include "wallchain/finite_sim.hpp"
#include "wallchain/initial_data.hpp"

namespace wallchain {

enum class PlacementRule {
    midpoint,  // n equal cells, walls at the midpoints
    quantile,  // cells of equal oscillator mass, walls at the mass medians
};

std::string to_string(PlacementRule r);
PlacementRule parse_placement_rule(const std::string& s);

struct ChainSequencePlan {
    DensityProfile profile = DensityProfile::empty(1.0);
    std::vector<std::size_t> n_values;
    PlacementRule rule = PlacementRule::midpoint;
    MediumParams medium;

    void validate() const;
};

/// M_j = S * int_cell rho_M, K_j = S * int_cell rho_K. Cells carrying neither
/// mass nor stiffness hold no wall; a cell carrying only one of them is
/// rejected.
OscillatorChain discretize_densities(const DensityProfile& profile, std::size_t n,
                                     const MediumParams& medium,
                                     PlacementRule rule = PlacementRule::midpoint);

/// Test functions g_k(u), u = (x - center)/L, used for the weak-convergence
/// spot check: 1, u, u^2, cos(pi u), exp(u).
constexpr std::size_t weak_test_count = 5;
double weak_test_function(std::size_t k, double u);

struct ChainAssumptionCheck {
    std::size_t n = 0;
    bool a1_ok = true;  // all walls inside the interval
    double ratio_min = 0.0;
    double ratio_max = 0.0;
    bool ratio_ok = true;  // c1 < L^2 K_j / (a^2 M_j) < c2 for every j
    double total_M = 0.0;
    double total_K = 0.0;
    bool mass_ok = true;  // sum M_j < c and sum K_j < c
    std::array<double, weak_test_count> weak_M{};  // |sum M_j g(s_j) - S int rho_M g|
    std::array<double, weak_test_count> weak_K{};
};

struct AssumptionReport {
    std::vector<ChainAssumptionCheck> chains;
    bool weak_decreasing = true;  // per test function, along the sequence
    bool all_ok = true;
    std::vector<std::string> issues;
};

/// Report only; never throws on a failed check.
AssumptionReport verify_assumptions(const std::vector<OscillatorChain>& chains,
                                    const DensityProfile& profile, const MediumParams& medium,
                                    double c1, double c2, double c);

/// [0, t_max] x [x_lo, x_hi], sampled on an nt x nx lattice.
struct Rectangle {
    double t_max = 3.0;
    double x_lo = -1.0;
    double x_hi = 1.0;
    std::size_t nt = 201;
    std::size_t nx = 201;

    double t(std::size_t k) const { return t_max * static_cast<double>(k) / static_cast<double>(nt - 1); }
    double x(std::size_t m) const {
        return x_lo + (x_hi - x_lo) * static_cast<double>(m) / static_cast<double>(nx - 1);
    }
    void validate() const;
};

struct GridPolicy {
    double dx_finite = 1.0 / 3200.0;
    std::size_t reference_refinement = 4;  // effective dx = dx_finite / this
    std::size_t monitor_stride = 1;        // bound checks every this many lattice times
    bool measure_floor = true;             // extra effective run at twice the reference dx
};

struct ErrorTriple {
    double sup_v = 0.0;   // sup over the lattice of |v_n - v|
    double sup_vt = 0.0;  // sup over the lattice of |dv_n/dt - dv/dt|
    double l2_vx = 0.0;   // sup over lattice times of ||dv_n/dx - dv/dx||_L2(x_lo, x_hi)

    double operator[](std::size_t k) const { return k == 0 ? sup_v : (k == 1 ? sup_vt : l2_vx); }
};

inline constexpr std::array<const char*, 3> error_family_names{"sup_v", "sup_vt", "l2_vx"};

struct ConvergenceRow {
    std::size_t n = 0;
    std::size_t walls = 0;
    ErrorTriple error;
    double max_residual = 0.0;
    double energy_drift = 0.0;
    double max_snap_offset = 0.0;
    double static_overlap = 0.0;  // max |<<Psi_st, Psi_0>>| over the static basis, scaled
    BoundMonitor bounds;
    bool edge_reached = false;
};

struct ConvergenceReport {
    Rectangle rect;
    double dx_finite = 0.0;
    double dx_reference = 0.0;
    double dt_reference = 0.0;
    std::vector<ConvergenceRow> rows;
    ErrorTriple reference_floor;                  // reference vs its 2x coarser twin
    std::vector<ErrorTriple> ratios;              // e(n_{i+1}) / e(n_i)
    std::array<bool, 3> strictly_decreasing{};
    std::array<double, 3> end_ratio{};            // e(last) / e(first)

    bool bounds_ok(double slack = 1e-3) const;
    bool passed(double end_ratio_limit = 0.2) const;
};

/// Runs finite_sim for every n (in parallel over `jobs` threads) and
/// effective_sim once at dx_finite / reference_refinement, then compares
/// them on the rectangle lattice. The lattice step in t and x must be whole
/// multiples of the finite dt and dx.
ConvergenceReport convergence_study(const ChainSequencePlan& plan, const InitialData& initial,
                                    const Rectangle& rect, const GridPolicy& policy,
                                    unsigned jobs = 1);

}  // namespace wallchain
