#pragma once

// Energy bookkeeping for pulses scattered by a chain or a slab, frequency
// domain oracles for both systems, band-gap scans and static-state audits.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "wallchain/core_model.hpp"
#include "wallchain/effective_sim.hpp"
#include "wallchain/finite_sim.hpp"
#include "wallchain/initial_data.hpp"

namespace wallchain {

/// Energy is split at x_left < center - L/2 and x_right > center + L/2.
struct ProbePlanes {
    double x_left = -0.6;
    double x_right = 0.6;
};

/// Planes 10% of the interval length beyond its ends.
ProbePlanes default_probes(double L, double center = 0.0);

struct ScatterResult {
    double incident = 0.0;
    double reflected = 0.0;    // field energy left of x_left
    double transmitted = 0.0;  // field energy right of x_right
    double stored = 0.0;       // field energy between the planes plus oscillators
    double reflected_fraction = 0.0;
    double transmitted_fraction = 0.0;
    double stored_fraction = 0.0;
    double closure = 0.0;  // |sum of fractions - 1|
    bool still_decaying = false;
    std::vector<double> stored_times;
    std::vector<double> stored_history;
};

/// Uses the trajectory's snapshots; the first must hold all energy left of
/// x_left. still_decaying is raised when the stored fraction at the end
/// exceeds 1e-6 and fell over the last quarter of the snapshots.
ScatterResult reflect_transmit(const Trajectory& traj, const MediumParams& medium,
                               const ProbePlanes& probes);
ScatterResult reflect_transmit(const EffectiveTrajectory& traj, const MediumParams& medium,
                               const ProbePlanes& probes);

/// Transmission amplitude of one wall, time dependence e^{-i omega t}.
std::complex<double> single_wall_transmission(double omega, double M, double K,
                                              const MediumParams& medium);

struct ChainResponse {
    std::complex<double> R;
    std::complex<double> T;
};

/// Plane-wave response of a whole chain from 2x2 transfer matrices acting on
/// (p, v): free propagation between walls, p jumps by i(omega M - K/omega)/S v
/// across a wall.
ChainResponse chain_transfer(double omega, const OscillatorChain& chain,
                             const MediumParams& medium);

/// Expected transmitted energy fraction of a right-moving pulse: |T|^2
/// averaged over the pulse's energy spectrum.
double spectral_transmission(const Pulse& pulse, const MediumParams& medium,
                             const std::function<double(double omega)>& T2);

/// Right-moving Gaussian wave packet at carrier omega0 whose amplitude
/// spectrum has standard deviation omega0 / bandwidth_divisor, placed with
/// its support ending `gap` left of x_end.
InitialData narrowband_packet(double omega0, const MediumParams& medium, double x_end,
                              double bandwidth_divisor = 20.0, double gap = 0.0);

struct BandgapRow {
    double omega = 0.0;
    double T2 = 0.0;
    double R2 = 0.0;
};

struct BandgapScan {
    double omega_c = 0.0;
    std::vector<BandgapRow> rows;  // sorted by omega
    bool monotone_below_cutoff = true;
};

/// Slab oracle over a list of frequencies for a constant profile.
BandgapScan bandgap_scan(const DensityProfile& profile, std::vector<double> omegas,
                         const MediumParams& medium);

/// -log|T(2L)| / -log|T(L)| at frequency omega for a constant profile of
/// length L.
double gap_exponent_ratio(const DensityProfile& profile, double omega, const MediumParams& medium);

struct StaticAudit {
    std::size_t n = 0;
    std::size_t basis_size = 0;
    double max_generator = 0.0;  // max ||A Psi_st|| / ||Psi_st||
    double max_drift = 0.0;      // max over time of |Psi(t) - Psi_st| / max|Psi_st|
    double max_overlap = 0.0;    // max |<<Psi_st, Psi_scatter>>| / norms
    std::size_t random_draws = 0;

    bool passed(double tol = 1e-12) const {
        return max_generator <= tol && max_drift <= tol && max_overlap <= tol;
    }
};

/// Basis and random plateau combinations of the static family, checked for
/// A Psi = 0, invariance over t = L/a and orthogonality to a Gaussian pulse
/// left of the chain.
StaticAudit audit_static(const OscillatorChain& chain, const MediumParams& medium, double dx,
                         std::size_t random_draws = 4, std::uint64_t seed = 1);

struct Reciprocity {
    double left_to_right = 0.0;
    double right_to_left = 0.0;

    double difference() const { return std::abs(left_to_right - right_to_left); }
};

/// Transmitted fraction of a pulse sent from the left and of its mirror image
/// sent from the right.
Reciprocity reciprocity(const OscillatorChain& chain, const MediumParams& medium,
                        const InitialData& from_left, double dx, double t_max);

}  // namespace wallchain
