#pragma once

// The homogenized limit equation
//     w v_tt = a^2 v_xx - q v,   w = 1 + rho_M/rho0,  q = rho_K/rho0,
// its Sturm-Liouville operator L f = (1/w)(-a^2 f'' + q f), and a frequency
// domain transfer-matrix oracle for a single constant-coefficient slab.

#include <complex>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "wallchain/core_model.hpp"
#include "wallchain/initial_data.hpp"

namespace wallchain {

/// Oscillator mass and stiffness densities per unit length, supported on
/// [center - L/2, center + L/2]. Either constant or piecewise linear through
/// a table.
class DensityProfile {
public:
    enum class Kind { constant, table };

    static DensityProfile constant(double L, double rho_M, double rho_K, double center = 0.0);
    static DensityProfile empty(double L, double center = 0.0) {
        return constant(L, 0.0, 0.0, center);
    }
    /// Breakpoints must run from center - L/2 to center + L/2.
    static DensityProfile table(double L, std::vector<double> x, std::vector<double> rho_M,
                                std::vector<double> rho_K, double center = 0.0);

    Kind kind() const { return kind_; }
    double L() const { return L_; }
    double center() const { return center_; }
    /// Same densities moved by delta.
    DensityProfile shifted(double delta) const;
    bool is_empty() const;

    /// Density at x; zero outside the support and the mean of the one-sided
    /// values exactly on +-L/2.
    double rho_M(double x) const { return eval(x, rho_M_); }
    double rho_K(double x) const { return eval(x, rho_K_); }

    /// Exact integral over [lo, hi] (Simpson on every linear piece).
    double integral_M(double lo, double hi) const { return integrate(lo, hi, rho_M_); }
    double integral_K(double lo, double hi) const { return integrate(lo, hi, rho_K_); }

    const std::vector<double>& breakpoints() const { return x_; }
    const std::vector<double>& rho_M_values() const { return rho_M_; }
    const std::vector<double>& rho_K_values() const { return rho_K_; }

    /// Range of L^2 rho_K / (a^2 rho_M) where rho_M > 0 (checked on the
    /// breakpoints and 64 points per piece).
    std::pair<double, double> ratio_range(double a) const;

    void validate() const;

private:
    double eval(double x, const std::vector<double>& vals) const;
    double inside(double x, const std::vector<double>& vals) const;
    double integrate(double lo, double hi, const std::vector<double>& vals) const;

    Kind kind_ = Kind::constant;
    double L_ = 1.0;
    double center_ = 0.0;
    std::vector<double> x_;  // breakpoints, center -+ L/2
    std::vector<double> rho_M_;
    std::vector<double> rho_K_;
};

struct EffectiveCoefficients {
    UniformGrid grid;
    std::vector<double> w;
    std::vector<double> q;

    double min_w() const;
};

EffectiveCoefficients coefficients(const DensityProfile& profile, const MediumParams& medium,
                                   const UniformGrid& grid);

/// Band-gap cutoff sqrt(rho_K / (rho0 + rho_M)) of a constant profile.
double cutoff_frequency(const DensityProfile& profile, const MediumParams& medium);

struct EffectiveState {
    UniformGrid grid;
    std::vector<double> v;
    std::vector<double> vdot;
    double t = 0.0;
};

/// v = v0, dv/dt = -(1/rho0) p0'. The derivative comes from the supplied
/// dp0 when given, otherwise from fourth-order central differences of p0.
EffectiveState effective_initial_data(const std::function<double(double)>& p0,
                                      const std::function<double(double)>& v0,
                                      const MediumParams& medium, const UniformGrid& grid,
                                      const std::function<double(double)>& dp0 = {});

EffectiveState effective_initial_data(const InitialData& data, const MediumParams& medium,
                                      const UniformGrid& grid);

enum class EdgeRule { dirichlet, periodic };

/// Largest admissible step: 0.9 dx sqrt(min w) / a.
double max_stable_dt(const EffectiveCoefficients& coeffs, const MediumParams& medium);

/// Leapfrog in kick-drift-kick form (equivalent to the three-level scheme),
/// centered second-order v_xx.
EffectiveState step_effective(const EffectiveState& state, const EffectiveCoefficients& coeffs,
                              const MediumParams& medium, double dt,
                              EdgeRule edges = EdgeRule::dirichlet);

/// In-place variant with a caller-owned acceleration buffer.
class EffectiveStepper {
public:
    EffectiveStepper(const EffectiveCoefficients& coeffs, const MediumParams& medium, double dt,
                     EdgeRule edges = EdgeRule::dirichlet);
    void advance(EffectiveState& state);

private:
    void acceleration(const std::vector<double>& v);

    EffectiveCoefficients coeffs_;
    double a2_;
    double dt_;
    EdgeRule edges_;
    std::vector<double> acc_;
    std::vector<double> inv_w_;
};

/// (1/w)(-a^2 f'' + q f) with zero extension beyond the grid.
std::vector<double> apply_L(std::span<const double> f, const EffectiveCoefficients& coeffs,
                            const MediumParams& medium);

/// sum_i w_i f_i g_i dx (trapezoid).
double weighted_inner(std::span<const double> f, std::span<const double> g,
                      const EffectiveCoefficients& coeffs);

/// 1/2 integral of w vdot^2 + a^2 v_x^2 + q v^2; v_x by cell differences.
double effective_energy(const EffectiveState& state, const EffectiveCoefficients& coeffs,
                        const MediumParams& medium);

/// Same integrand restricted to [x_lo, x_hi] (node-centred cells).
double effective_energy_in(const EffectiveState& state, const EffectiveCoefficients& coeffs,
                           const MediumParams& medium, double x_lo, double x_hi);

struct Slab {
    double w_in = 1.0;
    double q_in = 0.0;
    double width = 1.0;
};

struct SlabResponse {
    std::complex<double> R;
    std::complex<double> T;
};

/// Reflection/transmission of a unit wave e^{i(kx - wt)} incident from the
/// left on the slab [-width/2, width/2]; background w = 1, q = 0 outside.
SlabResponse slab_transfer(double omega, const Slab& slab, const MediumParams& medium);

struct EffectiveRunConfig {
    MediumParams medium;
    DensityProfile profile = DensityProfile::empty(1.0);
    InitialData initial;
    double dx = 1e-3;
    double dt = 0.0;  // 0: largest stable step
    double t_max = 1.0;
    double half_extent = 0.0;  // 0: size automatically
    std::size_t snapshot_every = 0;
    std::size_t energy_every = 1;
    /// Replaces snapshot storage when set.
    std::function<void(std::size_t step, const EffectiveState&)> observer;
};

struct EffectiveTrajectory {
    EffectiveCoefficients coeffs;
    double dt = 0.0;
    std::size_t steps = 0;
    std::vector<EffectiveState> snapshots;
    std::vector<double> energy_times;
    std::vector<double> energy;
    EffectiveState final_state;

    double max_relative_drift() const;
};

EffectiveTrajectory simulate_effective(const EffectiveRunConfig& config);

/// Same, on an explicitly given grid.
EffectiveTrajectory simulate_effective(const EffectiveRunConfig& config, const UniformGrid& grid);

}  // namespace wallchain
