#include "wallchain/scattering_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace wallchain {

namespace {

using cd = std::complex<double>;

constexpr double inf = std::numeric_limits<double>::infinity();

void check_probes(const ProbePlanes& p) {
    if (!(p.x_left < p.x_right)) throw ConfigError("probes: x_left < x_right violated");
}

// Fills fractions, closure and the decay trend from the per-snapshot numbers.
void finish(ScatterResult& r) {
    if (!(r.incident > 0.0)) throw ConfigError("scatter: incident energy is zero");
    r.reflected_fraction = r.reflected / r.incident;
    r.transmitted_fraction = r.transmitted / r.incident;
    r.stored_fraction = r.stored / r.incident;
    r.closure = std::abs(r.reflected_fraction + r.transmitted_fraction + r.stored_fraction - 1.0);
    const std::size_t n = r.stored_history.size();
    if (n >= 2 && r.stored_fraction > 1e-6) {
        const std::size_t q = (3 * (n - 1)) / 4;
        r.still_decaying = r.stored_history[n - 1] < r.stored_history[q];
    }
}

}  // namespace

ProbePlanes default_probes(double L, double center) {
    if (!(L > 0.0)) throw ConfigError("probes: L > 0 violated");
    return {center - 0.6 * L, center + 0.6 * L};
}

ScatterResult reflect_transmit(const Trajectory& traj, const MediumParams& medium,
                               const ProbePlanes& probes) {
    check_probes(probes);
    if (traj.snapshots.size() < 2) throw ConfigError("scatter: need the first and last snapshot");
    if (probes.x_left > traj.chain.lo() || probes.x_right < traj.chain.hi()) {
        throw ConfigError("probes: planes must enclose the chain interval");
    }
    ScatterResult r;
    const auto& first = traj.snapshots.front();
    r.incident = energy(first, medium, traj.chain).e_tot;
    const double ahead = field_energy_in(first, medium, probes.x_left, inf);
    if (ahead > 1e-12 * r.incident) {
        throw ConfigError("scatter: initial energy must lie left of x_left");
    }
    for (const auto& s : traj.snapshots) {
        r.stored_times.push_back(s.t);
        r.stored_history.push_back(field_energy_in(s, medium, probes.x_left, probes.x_right) +
                                   energy(s, medium, traj.chain).e_osc);
    }
    const auto& last = traj.snapshots.back();
    r.reflected = field_energy_in(last, medium, -inf, probes.x_left);
    r.transmitted = field_energy_in(last, medium, probes.x_right, inf);
    r.stored = r.stored_history.back();
    finish(r);
    return r;
}

ScatterResult reflect_transmit(const EffectiveTrajectory& traj, const MediumParams& medium,
                               const ProbePlanes& probes) {
    check_probes(probes);
    if (traj.snapshots.size() < 2) throw ConfigError("scatter: need the first and last snapshot");
    // Half-open split so that no node or cell is counted twice.
    const double left_open = std::nextafter(probes.x_left, -inf);
    const double right_open = std::nextafter(probes.x_right, inf);
    const auto& c = traj.coeffs;
    ScatterResult r;
    const auto& first = traj.snapshots.front();
    r.incident = effective_energy(first, c, medium);
    if (effective_energy_in(first, c, medium, probes.x_left, inf) > 1e-12 * r.incident) {
        throw ConfigError("scatter: initial energy must lie left of x_left");
    }
    for (const auto& s : traj.snapshots) {
        r.stored_times.push_back(s.t);
        r.stored_history.push_back(effective_energy_in(s, c, medium, probes.x_left, probes.x_right));
    }
    const auto& last = traj.snapshots.back();
    r.reflected = effective_energy_in(last, c, medium, -inf, left_open);
    r.transmitted = effective_energy_in(last, c, medium, right_open, inf);
    r.stored = r.stored_history.back();
    finish(r);
    return r;
}

std::complex<double> single_wall_transmission(double omega, double M, double K,
                                              const MediumParams& medium) {
    if (!(omega > 0.0)) throw ConfigError("omega > 0 violated");
    const double two_sz = 2.0 * medium.S * medium.impedance();
    return two_sz / cd(two_sz, -(omega * M - K / omega));
}

ChainResponse chain_transfer(double omega, const OscillatorChain& chain,
                             const MediumParams& medium) {
    if (!(omega > 0.0)) throw ConfigError("omega > 0 violated");
    chain.validate();
    if (chain.empty()) return {cd(0.0), cd(1.0)};
    const double Z = medium.impedance();
    const double k = omega / medium.a;
    const cd I(0.0, 1.0);

    // Carries a (p, v) pair from s_1- to s_n+.
    auto carry = [&](cd p, cd v) {
        for (std::size_t j = 0; j < chain.size(); ++j) {
            if (j > 0) {
                const double d = chain.s[j] - chain.s[j - 1];
                const double c = std::cos(k * d), s = std::sin(k * d);
                const cd pn = c * p + I * Z * s * v;
                const cd vn = I * s / Z * p + c * v;
                p = pn;
                v = vn;
            }
            p += I * (omega * chain.M[j] - chain.K[j] / omega) / medium.S * v;
        }
        return std::pair<cd, cd>{p, v};
    };
    const double x0 = chain.s.front(), x1 = chain.s.back();
    const cd ein = std::exp(I * k * x0), eref = std::exp(-I * k * x0);
    const auto [pi, vi] = carry(ein, ein / Z);
    const auto [pr, vr] = carry(eref, -eref / Z);
    // No left-moving wave on the far side.
    const cd R = -(pi - Z * vi) / (pr - Z * vr);
    const cd T = 0.5 * ((pi + R * pr) + Z * (vi + R * vr)) * std::exp(-I * k * x1);
    return {R, T};
}

double spectral_transmission(const Pulse& pulse, const MediumParams& medium,
                             const std::function<double(double)>& T2) {
    pulse.validate();
    const double lo = pulse.support_lo(), hi = pulse.support_hi();
    const double len = hi - lo;
    double kmax;
    if (pulse.shape == PulseShape::bump) {
        kmax = 200.0 / pulse.width;
    } else {
        kmax = std::abs(pulse.wavenumber) + 12.0 / pulse.width;
    }
    const std::size_t nx = static_cast<std::size_t>(std::ceil(8.0 * kmax * len / std::numbers::pi)) + 1;
    const std::size_t nk = static_cast<std::size_t>(std::ceil(8.0 * kmax * len)) + 16;
    const double hx = len / static_cast<double>(nx - 1);
    std::vector<double> xs(nx), fs(nx);
    for (std::size_t i = 0; i < nx; ++i) {
        xs[i] = lo + hx * static_cast<double>(i);
        fs[i] = pulse.value(xs[i]) * ((i == 0 || i + 1 == nx) ? 0.5 : 1.0);
    }
    // Midpoint rule in k keeps omega = 0 out of T2.
    const double hk = kmax / static_cast<double>(nk);
    double num = 0.0, den = 0.0;
    for (std::size_t m = 0; m < nk; ++m) {
        const double k = hk * (static_cast<double>(m) + 0.5);
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            const double ph = k * (xs[i] - pulse.center);
            re += fs[i] * std::cos(ph);
            im -= fs[i] * std::sin(ph);
        }
        const double e = re * re + im * im;
        den += e;
        num += e * T2(medium.a * k);
    }
    return num / den;
}

InitialData narrowband_packet(double omega0, const MediumParams& medium, double x_end,
                              double bandwidth_divisor, double gap) {
    if (!(omega0 > 0.0) || !(bandwidth_divisor > 0.0) || !(gap >= 0.0)) {
        throw ConfigError("packet: omega0 > 0, divisor > 0, gap >= 0 required");
    }
    InitialData d;
    d.pulse.shape = PulseShape::wavepacket;
    d.pulse.wavenumber = omega0 / medium.a;
    d.pulse.width = medium.a * bandwidth_divisor / omega0;
    d.pulse.center = x_end - gap - Pulse::gaussian_cutoff * d.pulse.width;
    d.linkage = Linkage::right_moving;
    return d;
}

BandgapScan bandgap_scan(const DensityProfile& profile, std::vector<double> omegas,
                         const MediumParams& medium) {
    if (profile.kind() != DensityProfile::Kind::constant) {
        throw ConfigError("bandgap: constant density profile required");
    }
    const double rhoM = profile.rho_M_values().front(), rhoK = profile.rho_K_values().front();
    const Slab slab{1.0 + rhoM / medium.rho0, rhoK / medium.rho0, profile.L()};
    std::sort(omegas.begin(), omegas.end());
    BandgapScan scan;
    scan.omega_c = cutoff_frequency(profile, medium);
    double prev = -1.0;
    for (double w : omegas) {
        const auto r = slab_transfer(w, slab, medium);
        const double T2 = std::norm(r.T);
        scan.rows.push_back({w, T2, std::norm(r.R)});
        if (w <= scan.omega_c) {
            if (T2 < prev) scan.monotone_below_cutoff = false;
            prev = T2;
        }
    }
    return scan;
}

double gap_exponent_ratio(const DensityProfile& profile, double omega, const MediumParams& medium) {
    if (profile.kind() != DensityProfile::Kind::constant) {
        throw ConfigError("bandgap: constant density profile required");
    }
    const double rhoM = profile.rho_M_values().front(), rhoK = profile.rho_K_values().front();
    Slab slab{1.0 + rhoM / medium.rho0, rhoK / medium.rho0, profile.L()};
    const double e1 = -std::log(std::abs(slab_transfer(omega, slab, medium).T));
    slab.width *= 2.0;
    const double e2 = -std::log(std::abs(slab_transfer(omega, slab, medium).T));
    return e2 / e1;
}

StaticAudit audit_static(const OscillatorChain& chain, const MediumParams& medium, double dx,
                         std::size_t random_draws, std::uint64_t seed) {
    chain.validate();
    medium.validate();
    StaticAudit audit;
    audit.n = chain.size();
    audit.random_draws = random_draws;

    InitialData pulse;
    pulse.pulse.width = 0.05 * chain.L;
    pulse.pulse.center = chain.lo() - 9.0 * pulse.pulse.width;
    const double t_end = chain.L / medium.a;
    const double half = required_half_extent(pulse.pulse.support_lo(), pulse.pulse.support_hi(),
                                             chain.L, medium.a, t_end, dx, chain.center);
    auto [grid, snapped] = make_sim_grid(chain, medium, dx, half);
    const OscillatorChain& ch = snapped.chain;
    const WallGrid& mesh = grid.mesh;

    std::vector<PhysicalState> states = static_basis(ch, medium, mesh);
    audit.basis_size = states.size();
    if (ch.size() >= 2) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (std::size_t k = 0; k < random_draws; ++k) {
            std::vector<double> levels(ch.size() - 1);
            for (auto& l : levels) l = u(rng);
            states.push_back(static_solution(ch, medium, mesh, levels));
        }
    }

    PhysicalState scatter = PhysicalState::zeros(mesh);
    {
        const FiniteState fs = init_state(pulse, ch, medium, mesh);
        scatter = to_physical(fs, medium);
    }
    const double scatter_norm = state_norm(scatter, medium, ch);

    for (const auto& psi : states) {
        const double norm = state_norm(psi, medium, ch);
        const auto img = apply_generator(psi, medium, ch);
        audit.max_generator = std::max(audit.max_generator, state_norm(img.image, medium, ch) / norm);
        audit.max_overlap = std::max(
            audit.max_overlap, std::abs(inner_product(psi, scatter, medium, ch)) / (norm * scatter_norm));

        double scale = 0.0;
        auto grab = [&](const std::vector<double>& f) {
            for (double x : f) scale = std::max(scale, std::abs(x));
        };
        grab(psi.p);
        grab(psi.p_left);
        grab(psi.p_right);
        grab(psi.y);

        FiniteRunConfig cfg;
        cfg.medium = medium;
        cfg.chain = ch;
        cfg.initial_state = psi;
        cfg.dx = dx;
        cfg.t_max = t_end;
        cfg.snapshot_every = 1;
        cfg.monitor_every = 0;
        double drift = 0.0;
        auto diff = [&](const std::vector<double>& a, const std::vector<double>& b) {
            for (std::size_t i = 0; i < a.size(); ++i) drift = std::max(drift, std::abs(a[i] - b[i]));
        };
        cfg.observer = [&](std::size_t, const PhysicalState& st, const std::vector<double>&) {
            diff(st.p, psi.p);
            diff(st.v, psi.v);
            diff(st.p_left, psi.p_left);
            diff(st.p_right, psi.p_right);
            diff(st.y, psi.y);
            diff(st.z, psi.z);
        };
        simulate(cfg);
        audit.max_drift = std::max(audit.max_drift, drift / scale);
    }
    return audit;
}

Reciprocity reciprocity(const OscillatorChain& chain, const MediumParams& medium,
                        const InitialData& from_left, double dx, double t_max) {
    chain.validate();
    InitialData from_right = from_left;
    from_right.pulse.center = 2.0 * chain.center - from_left.pulse.center;
    from_right.pulse.phase = -from_left.pulse.phase;  // cos is even
    if (from_left.linkage == Linkage::right_moving) from_right.linkage = Linkage::left_moving;
    else if (from_left.linkage == Linkage::left_moving) from_right.linkage = Linkage::right_moving;
    else throw ConfigError("reciprocity: a travelling pulse is required");

    const double half =
        std::max(required_half_extent(from_left.pulse.support_lo(), from_left.pulse.support_hi(),
                                      chain.L, medium.a, t_max, dx, chain.center),
                 required_half_extent(from_right.pulse.support_lo(), from_right.pulse.support_hi(),
                                      chain.L, medium.a, t_max, dx, chain.center));
    const ProbePlanes probes = default_probes(chain.L, chain.center);

    auto run = [&](const InitialData& d, bool left) {
        FiniteRunConfig cfg;
        cfg.medium = medium;
        cfg.chain = chain;
        cfg.initial = d;
        cfg.dx = dx;
        cfg.t_max = t_max;
        cfg.half_extent = half;
        cfg.monitor_every = 0;
        const auto tr = simulate(cfg);
        const auto& first = tr.snapshots.front();
        const auto& last = tr.snapshots.back();
        const double e0 = energy(first, medium, tr.chain).e_tot;
        const double out = left ? field_energy_in(last, medium, probes.x_right, inf)
                                : field_energy_in(last, medium, -inf, probes.x_left);
        return out / e0;
    };
    return {run(from_left, true), run(from_right, false)};
}

}  // namespace wallchain
