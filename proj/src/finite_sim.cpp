#include "wallchain/finite_sim.hpp"

#include <algorithm>
#include <cmath>

namespace wallchain {

double required_half_extent(double support_lo, double support_hi, double L, double a,
                            double t_max, double dx, double center) {
    const double reach =
        std::max({std::abs(support_lo), std::abs(support_hi), std::abs(center) + 0.5 * L});
    return reach + a * t_max + 4.0 * dx;
}

std::pair<SimGrid, SnappedChain> make_sim_grid(const OscillatorChain& chain,
                                               const MediumParams& medium, double dx,
                                               double half_extent) {
    medium.validate();
    const UniformGrid grid = UniformGrid::centered(half_extent, dx);
    SnappedChain snapped = snap_chain(chain, grid);
    SimGrid sg;
    sg.mesh = snapped.mesh;
    sg.dt = dx / medium.a;
    sg.snap_offsets = snapped.offsets;
    return {sg, std::move(snapped)};
}

FiniteState init_state(const FieldFunction& p0, const FieldFunction& v0,
                       const OscillatorChain& chain, const MediumParams& medium,
                       const WallGrid& mesh) {
    // Scattering setup: nothing may start inside the oscillator region.
    // Without walls there is no such region and any data is admissible.
    const double half = chain.empty() ? -1.0 : 0.5 * chain.L;
    constexpr int probes = 4001;
    for (int i = 0; i < probes && !chain.empty(); ++i) {
        const double x = chain.lo() + chain.L * i / (probes - 1);
        if (p0(x) != 0.0 || v0(x) != 0.0) {
            throw ConfigError("initial: support of (p0, v0) meets [-L/2, L/2] (nonzero at x = " +
                              std::to_string(x) + ")");
        }
    }
    FiniteState st = FiniteState::zeros(mesh);
    const double Z = medium.impedance();
    for (std::size_t i = 0; i < mesh.grid.nodes; ++i) {
        const double x = mesh.grid.x(i);
        if (std::abs(x - chain.center) <= half) continue;
        const double p = p0(x), v = v0(x);
        st.wplus[i] = p + Z * v;
        st.wminus[i] = p - Z * v;
    }
    return st;
}

FiniteState init_state(const InitialData& data, const OscillatorChain& chain,
                       const MediumParams& medium, const WallGrid& mesh) {
    data.pulse.validate();
    return init_state([&](double x) { return data.p0(x, medium); },
                      [&](double x) { return data.v0(x, medium); }, chain, medium, mesh);
}

WallStep wall_update(double y, double z, double winc_left, double winc_right, double M, double K,
                     const MediumParams& medium, double dt) {
    const double Z = medium.impedance();
    const double S = medium.S;
    // Trapezoidal rule on the 2x2 linear system, y eliminated:
    //   z' (M + K dt^2/4 + Z S dt) = z (M - K dt^2/4 - Z S dt) - dt K y - dt S (wr - wl)
    const double kq = 0.25 * K * dt * dt;
    const double damp = Z * S * dt;
    WallStep out;
    out.z = (z * (M - kq - damp) - dt * K * y - dt * S * (winc_right - winc_left)) /
            (M + kq + damp);
    out.y = y + 0.5 * dt * (z + out.z);
    out.wout_left = winc_left - 2.0 * Z * out.z;
    out.wout_right = winc_right + 2.0 * Z * out.z;
    return out;
}

FiniteStepper::FiniteStepper(const OscillatorChain& chain, const MediumParams& medium,
                             const SimGrid& grid)
    : chain_(chain),
      medium_(medium),
      grid_(grid),
      wall_map_(grid.mesh.wall_map()),
      next_plus_(grid.mesh.grid.nodes),
      next_minus_(grid.mesh.grid.nodes) {
    if (chain.size() != grid.mesh.wall_nodes.size()) {
        throw ConfigError("step: chain size differs from grid wall count");
    }
}

void FiniteStepper::advance(FiniteState& state) {
    const std::size_t N = grid_.mesh.grid.nodes;
    const double twoZ = 2.0 * medium_.impedance();
    auto& wp = state.wplus;
    auto& wm = state.wminus;
    const auto& walls = grid_.mesh.wall_nodes;

    // Exact transport with zero inflow at both edges; walls are strictly
    // interior, so the edge outflow is plain field data.
    max_edge_outflow_ = std::max({max_edge_outflow_, std::abs(wp[N - 1]), std::abs(wm[0])});
    next_plus_[0] = 0.0;
    std::copy(wp.begin(), wp.end() - 1, next_plus_.begin() + 1);
    next_minus_[N - 1] = 0.0;
    std::copy(wm.begin() + 1, wm.end(), next_minus_.begin());
    // What leaves a wall node is the reflected/transmitted characteristic.
    for (std::size_t j = 0; j < walls.size(); ++j) {
        const std::size_t k = walls[j];
        next_plus_[k + 1] = wm[k] + twoZ * state.z[j];
        next_minus_[k - 1] = wp[k] - twoZ * state.z[j];
    }

    for (std::size_t j = 0; j < walls.size(); ++j) {
        const std::size_t k = walls[j];
        const double wl = 0.5 * (wp[k] + next_plus_[k]);
        const double wr = 0.5 * (wm[k] + next_minus_[k]);
        const WallStep ws =
            wall_update(state.y[j], state.z[j], wl, wr, chain_.M[j], chain_.K[j], medium_, grid_.dt);
        state.y[j] = ws.y;
        state.z[j] = ws.z;
    }
    wp.swap(next_plus_);
    wm.swap(next_minus_);
    state.t += grid_.dt;
}

FiniteState step(const FiniteState& state, const OscillatorChain& chain,
                 const MediumParams& medium, const SimGrid& grid) {
    state.check_shape();
    FiniteStepper stepper(chain, medium, grid);
    FiniteState out = state;
    stepper.advance(out);
    return out;
}

EnergyBreakdown characteristic_energy(const FiniteState& state, const MediumParams& medium,
                                      const OscillatorChain& chain) {
    const std::size_t N = state.mesh.grid.nodes;
    const double Z = medium.impedance();
    const auto& wp = state.wplus;
    const auto& wm = state.wminus;
    double sum = 0.0;
    for (std::size_t i = 1; i + 1 < N; ++i) sum += wp[i] * wp[i] + wm[i] * wm[i];
    sum += 0.5 * (wp[0] * wp[0] + wm[0] * wm[0] + wp[N - 1] * wp[N - 1] + wm[N - 1] * wm[N - 1]);
    EnergyBreakdown e;
    for (std::size_t j = 0; j < state.mesh.wall_nodes.size(); ++j) {
        const std::size_t k = state.mesh.wall_nodes[j];
        const double wl_out = wp[k] - 2.0 * Z * state.z[j];
        const double wr_out = wm[k] + 2.0 * Z * state.z[j];
        // swap the node's single-valued term for the mean of both sides
        sum += 0.5 * (wl_out * wl_out + wr_out * wr_out - wp[k] * wp[k] - wm[k] * wm[k]);
        e.e_osc += 0.5 * chain.K[j] * state.y[j] * state.y[j] +
                   0.5 * chain.M[j] * state.z[j] * state.z[j];
    }
    e.e_ac = medium.S / (4.0 * medium.a * medium.a * medium.rho0) * sum * state.mesh.grid.dx;
    e.e_tot = e.e_ac + e.e_osc;
    return e;
}

double interface_residual(const FiniteState& state, const MediumParams& medium) {
    const double Z = medium.impedance();
    double r = 0.0;
    for (std::size_t j = 0; j < state.mesh.wall_nodes.size(); ++j) {
        const std::size_t k = state.mesh.wall_nodes[j];
        const double wl_out = state.wplus[k] - 2.0 * Z * state.z[j];
        const double wr_out = state.wminus[k] + 2.0 * Z * state.z[j];
        const double v_left = (state.wplus[k] - wl_out) / (2.0 * Z);
        const double v_right = (wr_out - state.wminus[k]) / (2.0 * Z);
        r = std::max({r, std::abs(v_left - state.z[j]), std::abs(v_right - state.z[j])});
    }
    return r;
}

std::vector<double> velocity_rate(const PhysicalState& state, const MediumParams& medium,
                                  const OscillatorChain& chain) {
    const auto dp = detail::segment_derivative(state.mesh, state.p, state.p_left, state.p_right);
    std::vector<double> out(state.p.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -dp.d[i] / medium.rho0;
    for (std::size_t j = 0; j < chain.size(); ++j) {
        const double sigma = state.p_right[j] - state.p_left[j];
        out[state.mesh.wall_nodes[j]] =
            -(chain.K[j] * state.y[j] + medium.S * sigma) / chain.M[j];
    }
    return out;
}

bool BoundMonitor::within(double slack) const {
    for (const Entry* e : {&v_h1, &vdot_h1, &kinetic, &wall_accel, &vx_reg_h1}) {
        if (e->max_value > e->bound * (1.0 + slack)) return false;
    }
    return true;
}

GeneratorNorms initial_generator_norms(const InitialData& data, const MediumParams& medium,
                                       const UniformGrid& grid) {
    const std::size_t N = grid.nodes;
    std::vector<double> pp(N), vv(N), dpp(N), dvv(N), d2pp(N), d2vv(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double x = grid.x(i);
        const double p = data.p0(x, medium), v = data.v0(x, medium);
        const double dp = data.dp0(x, medium), dv = data.dv0(x, medium);
        const double d2p = data.d2p0(x, medium), d2v = data.d2v0(x, medium);
        pp[i] = p * p;
        vv[i] = v * v;
        dpp[i] = dp * dp;
        dvv[i] = dv * dv;
        d2pp[i] = d2p * d2p;
        d2vv[i] = d2v * d2v;
    }
    const double a = medium.a, rho0 = medium.rho0;
    GeneratorNorms n;
    n.psi = std::sqrt(trapezoid(grid, pp) / (a * a * rho0) + rho0 * trapezoid(grid, vv));
    n.apsi = std::sqrt(a * a * rho0 * trapezoid(grid, dvv) + trapezoid(grid, dpp) / rho0);
    n.a2psi = std::sqrt(a * a / rho0 * trapezoid(grid, d2pp) +
                        rho0 * a * a * a * a * trapezoid(grid, d2vv));
    return n;
}

GeneratorNorms discrete_generator_norms(const PhysicalState& psi, const MediumParams& medium,
                                        const OscillatorChain& chain) {
    GeneratorNorms n;
    n.psi = state_norm(psi, medium, chain);
    const auto a1 = apply_generator(psi, medium, chain).image;
    n.apsi = state_norm(a1, medium, chain);
    n.a2psi = state_norm(apply_generator(a1, medium, chain).image, medium, chain);
    return n;
}

BoundMonitor make_bound_monitor(const GeneratorNorms& g, const MediumParams& m) {
    const double a2 = m.a * m.a;
    BoundMonitor b;
    b.v_h1.bound = std::sqrt(g.psi * g.psi / m.rho0 + g.apsi * g.apsi / (a2 * m.rho0));
    b.vdot_h1.bound = std::sqrt(g.apsi * g.apsi / m.rho0 + g.a2psi * g.a2psi / (a2 * m.rho0));
    b.kinetic.bound = std::sqrt(m.S) * g.psi;
    b.wall_accel.bound = std::sqrt(m.S) * g.a2psi;
    b.vx_reg_h1.bound = g.a2psi / (a2 * std::sqrt(m.rho0));
    return b;
}

namespace {

double h1_norm(const UniformGrid& grid, const std::vector<double>& f) {
    double l2 = 0.0, d2 = 0.0;
    const std::size_t N = f.size();
    for (std::size_t i = 0; i < N; ++i) {
        const double w = (i == 0 || i + 1 == N) ? 0.5 : 1.0;
        l2 += w * f[i] * f[i];
    }
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const double d = (f[i + 1] - f[i]) / grid.dx;
        d2 += d * d;
    }
    return std::sqrt((l2 + d2) * grid.dx);
}

}  // namespace

void update_bound_monitor(BoundMonitor& b, const PhysicalState& state,
                          const std::vector<double>& vdot, const MediumParams& m,
                          const OscillatorChain& chain) {
    const auto& g = state.mesh.grid;
    auto bump = [](BoundMonitor::Entry& e, double value) { e.max_value = std::max(e.max_value, value); };
    bump(b.v_h1, h1_norm(g, state.v));
    bump(b.vdot_h1, h1_norm(g, vdot));

    double kin = 0.0, acc = 0.0;
    const auto jumps = extract_jumps(state, chain);
    const double a2rhoS = m.a * m.a * m.rho0 * m.S;
    for (std::size_t j = 0; j < chain.size(); ++j) {
        kin += chain.M[j] * state.z[j] * state.z[j];
        const double r = chain.K[j] * state.z[j] - a2rhoS * jumps.zeta[j];
        acc += r * r / chain.M[j];
    }
    bump(b.kinetic, std::sqrt(kin));
    bump(b.wall_accel, std::sqrt(acc));

    // Second differences inside each segment; wall nodes carry the kink.
    const auto walls = state.mesh.wall_map();
    double reg = 0.0;
    const double h2 = g.dx * g.dx;
    for (std::size_t i = 1; i + 1 < g.nodes; ++i) {
        if (walls[i] >= 0) continue;
        const double d2 = (state.v[i + 1] - 2.0 * state.v[i] + state.v[i - 1]) / h2;
        reg += d2 * d2;
    }
    bump(b.vx_reg_h1, std::sqrt(reg * g.dx));
    ++b.samples;
}

double Trajectory::max_residual() const {
    double r = 0.0;
    for (double x : residual) r = std::max(r, x);
    return r;
}

double Trajectory::max_relative_drift() const {
    if (energy.empty() || energy.front().e_tot == 0.0) return 0.0;
    const double e0 = energy.front().e_tot;
    double d = 0.0;
    for (const auto& e : energy) d = std::max(d, std::abs(e.e_tot - e0) / e0);
    return d;
}

Trajectory simulate(const FiniteRunConfig& cfg) {
    cfg.medium.validate();
    cfg.chain.validate();
    if (!(cfg.dx > 0.0)) throw ConfigError("grid: dx > 0 violated");
    if (!(cfg.t_max >= 0.0)) throw ConfigError("grid: t_max >= 0 violated");

    double half = cfg.half_extent;
    if (cfg.initial_state) {
        const auto& g = cfg.initial_state->mesh.grid;
        half = -g.x_min;
    } else if (half <= 0.0) {
        const double lo = cfg.initial.is_zero() ? 0.0 : cfg.initial.pulse.support_lo();
        const double hi = cfg.initial.is_zero() ? 0.0 : cfg.initial.pulse.support_hi();
        half = required_half_extent(lo, hi, cfg.chain.L, cfg.medium.a, cfg.t_max, cfg.dx,
                                    cfg.chain.center);
    }
    auto [grid, snapped] = make_sim_grid(cfg.chain, cfg.medium, cfg.dx, half);
    const OscillatorChain& chain = snapped.chain;

    Trajectory traj;
    traj.grid = grid;
    traj.chain = chain;

    FiniteState state;
    GeneratorNorms norms;
    if (cfg.initial_state) {
        const auto& init = *cfg.initial_state;
        if (init.mesh.grid.nodes != grid.mesh.grid.nodes ||
            init.mesh.wall_nodes != grid.mesh.wall_nodes) {
            throw ConfigError("initial: supplied state does not match the simulation grid");
        }
        state = to_characteristic(init, cfg.medium);
        norms = discrete_generator_norms(init, cfg.medium, chain);
    } else {
        state = init_state(cfg.initial, chain, cfg.medium, grid.mesh);
        norms = initial_generator_norms(cfg.initial, cfg.medium, grid.mesh.grid);
    }
    traj.bounds = make_bound_monitor(norms, cfg.medium);

    double w_scale = 0.0;
    for (std::size_t i = 0; i < state.wplus.size(); ++i) {
        w_scale = std::max({w_scale, std::abs(state.wplus[i]), std::abs(state.wminus[i])});
    }

    const auto steps = static_cast<std::size_t>(std::llround(cfg.t_max / grid.dt));
    traj.steps = steps;
    FiniteStepper stepper(chain, cfg.medium, grid);

    auto record = [&](std::size_t k) {
        traj.energy_times.push_back(state.t);
        traj.energy.push_back(characteristic_energy(state, cfg.medium, chain));
        traj.residual.push_back(interface_residual(state, cfg.medium));
        const bool snap = k == 0 || k == steps ||
                          (cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0);
        const bool monitor = cfg.monitor_every > 0 && (k % cfg.monitor_every == 0 || k == steps);
        if (!snap && !monitor) return;
        PhysicalState phys = to_physical(state, cfg.medium);
        std::vector<double> vdot;
        if (monitor || cfg.record_vdot || (snap && cfg.observer)) {
            vdot = velocity_rate(phys, cfg.medium, chain);
        }
        if (monitor) update_bound_monitor(traj.bounds, phys, vdot, cfg.medium, chain);
        if (snap && cfg.observer) {
            cfg.observer(k, phys, vdot);
        } else if (snap) {
            if (cfg.record_vdot) traj.vdot.push_back(vdot);
            traj.snapshots.push_back(std::move(phys));
        }
    };

    record(0);
    for (std::size_t k = 1; k <= steps; ++k) {
        stepper.advance(state);
        record(k);
    }
    traj.max_edge_outflow = stepper.max_edge_outflow();
    traj.edge_reached = w_scale > 0.0 && traj.max_edge_outflow > cfg.edge_tolerance * w_scale;
    traj.final_state = std::move(state);
    return traj;
}

}  // namespace wallchain
