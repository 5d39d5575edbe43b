#include "wallchain/effective_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wallchain/finite_sim.hpp"

namespace wallchain {

DensityProfile DensityProfile::constant(double L, double rho_M, double rho_K, double center) {
    DensityProfile p;
    p.kind_ = Kind::constant;
    p.L_ = L;
    p.center_ = center;
    p.x_ = {center - 0.5 * L, center + 0.5 * L};
    p.rho_M_ = {rho_M, rho_M};
    p.rho_K_ = {rho_K, rho_K};
    p.validate();
    return p;
}

DensityProfile DensityProfile::table(double L, std::vector<double> x, std::vector<double> rho_M,
                                     std::vector<double> rho_K, double center) {
    DensityProfile p;
    p.kind_ = Kind::table;
    p.L_ = L;
    p.center_ = center;
    p.x_ = std::move(x);
    p.rho_M_ = std::move(rho_M);
    p.rho_K_ = std::move(rho_K);
    p.validate();
    return p;
}

void DensityProfile::validate() const {
    if (!(L_ > 0.0)) throw ConfigError("profile: L > 0 violated");
    if (x_.size() < 2 || rho_M_.size() != x_.size() || rho_K_.size() != x_.size()) {
        throw ConfigError("profile: x, rho_M and rho_K need equal lengths >= 2");
    }
    const double tol = 1e-12 * L_;
    if (std::abs(x_.front() - (center_ - 0.5 * L_)) > tol ||
        std::abs(x_.back() - (center_ + 0.5 * L_)) > tol) {
        throw ConfigError("profile: breakpoints must span exactly [center - L/2, center + L/2]");
    }
    for (std::size_t i = 0; i < x_.size(); ++i) {
        if (i > 0 && !(x_[i] > x_[i - 1])) throw ConfigError("profile: x strictly increasing violated");
        if (!(rho_M_[i] >= 0.0)) throw ConfigError("profile: rho_M >= 0 violated");
        if (!(rho_K_[i] >= 0.0)) throw ConfigError("profile: rho_K >= 0 violated");
    }
}

DensityProfile DensityProfile::shifted(double delta) const {
    DensityProfile p = *this;
    p.center_ += delta;
    for (auto& x : p.x_) x += delta;
    return p;
}

bool DensityProfile::is_empty() const {
    return std::all_of(rho_M_.begin(), rho_M_.end(), [](double r) { return r == 0.0; }) &&
           std::all_of(rho_K_.begin(), rho_K_.end(), [](double r) { return r == 0.0; });
}

double DensityProfile::inside(double x, const std::vector<double>& vals) const {
    x = std::clamp(x, x_.front(), x_.back());
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - x_.begin());
    if (hi >= x_.size()) hi = x_.size() - 1;
    const std::size_t lo = hi - 1;
    const double t = (x - x_[lo]) / (x_[hi] - x_[lo]);
    return vals[lo] + t * (vals[hi] - vals[lo]);
}

double DensityProfile::eval(double x, const std::vector<double>& vals) const {
    const double half = 0.5 * L_;
    const double tol = 1e-12 * L_;
    const double u = x - center_;
    if (std::abs(u) > half + tol) return 0.0;
    if (std::abs(std::abs(u) - half) <= tol) return 0.5 * inside(x, vals);
    return inside(x, vals);
}

double DensityProfile::integrate(double lo, double hi, const std::vector<double>& vals) const {
    lo = std::max(lo, x_.front());
    hi = std::min(hi, x_.back());
    if (hi <= lo) return 0.0;
    std::vector<double> cuts{lo};
    for (double b : x_) {
        if (b > lo && b < hi) cuts.push_back(b);
    }
    cuts.push_back(hi);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        const double m = 0.5 * (a + b);
        sum += (b - a) / 6.0 * (inside(a, vals) + 4.0 * inside(m, vals) + inside(b, vals));
    }
    return sum;
}

std::pair<double, double> DensityProfile::ratio_range(double a) const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
        for (int k = 0; k <= 64; ++k) {
            const double x = x_[i] + (x_[i + 1] - x_[i]) * k / 64.0;
            const double m = inside(x, rho_M_);
            if (m <= 0.0) continue;
            const double r = L_ * L_ * inside(x, rho_K_) / (a * a * m);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    }
    if (hi == 0.0 && std::isinf(lo)) lo = 0.0;
    return {lo, hi};
}

double EffectiveCoefficients::min_w() const {
    return w.empty() ? 1.0 : *std::min_element(w.begin(), w.end());
}

EffectiveCoefficients coefficients(const DensityProfile& profile, const MediumParams& medium,
                                   const UniformGrid& grid) {
    profile.validate();
    medium.validate();
    EffectiveCoefficients c;
    c.grid = grid;
    c.w.resize(grid.nodes);
    c.q.resize(grid.nodes);
    for (std::size_t i = 0; i < grid.nodes; ++i) {
        const double x = grid.x(i);
        c.w[i] = 1.0 + profile.rho_M(x) / medium.rho0;
        c.q[i] = profile.rho_K(x) / medium.rho0;
    }
    return c;
}

double cutoff_frequency(const DensityProfile& profile, const MediumParams& medium) {
    if (profile.kind() != DensityProfile::Kind::constant) {
        throw ConfigError("profile: cutoff frequency is defined for constant profiles only");
    }
    const double rho_M = profile.rho_M_values().front();
    const double rho_K = profile.rho_K_values().front();
    return std::sqrt(rho_K / (medium.rho0 + rho_M));
}

EffectiveState effective_initial_data(const std::function<double(double)>& p0,
                                      const std::function<double(double)>& v0,
                                      const MediumParams& medium, const UniformGrid& grid,
                                      const std::function<double(double)>& dp0) {
    EffectiveState st;
    st.grid = grid;
    st.v.resize(grid.nodes);
    st.vdot.resize(grid.nodes);
    const double h = grid.dx;
    for (std::size_t i = 0; i < grid.nodes; ++i) {
        const double x = grid.x(i);
        st.v[i] = v0(x);
        double d;
        if (dp0) {
            d = dp0(x);
        } else {
            d = (-p0(x + 2 * h) + 8.0 * p0(x + h) - 8.0 * p0(x - h) + p0(x - 2 * h)) / (12.0 * h);
        }
        st.vdot[i] = -d / medium.rho0;
    }
    return st;
}

EffectiveState effective_initial_data(const InitialData& data, const MediumParams& medium,
                                      const UniformGrid& grid) {
    data.pulse.validate();
    return effective_initial_data([&](double x) { return data.p0(x, medium); },
                                  [&](double x) { return data.v0(x, medium); }, medium, grid,
                                  [&](double x) { return data.dp0(x, medium); });
}

double max_stable_dt(const EffectiveCoefficients& coeffs, const MediumParams& medium) {
    return 0.9 * coeffs.grid.dx * std::sqrt(coeffs.min_w()) / medium.a;
}

EffectiveStepper::EffectiveStepper(const EffectiveCoefficients& coeffs, const MediumParams& medium,
                                   double dt, EdgeRule edges)
    : coeffs_(coeffs), a2_(medium.a * medium.a), dt_(dt), edges_(edges) {
    if (!(dt > 0.0)) throw ConfigError("effective: dt > 0 violated");
    const double limit = max_stable_dt(coeffs, medium);
    if (dt > limit * (1.0 + 1e-12)) {
        throw ConfigError("effective: CFL violated, dt <= 0.9 dx sqrt(min w)/a = " +
                          std::to_string(limit));
    }
    acc_.resize(coeffs.grid.nodes);
    inv_w_.resize(coeffs.grid.nodes);
    for (std::size_t i = 0; i < inv_w_.size(); ++i) inv_w_[i] = 1.0 / coeffs.w[i];
}

void EffectiveStepper::acceleration(const std::vector<double>& v) {
    const std::size_t N = v.size();
    const double c = a2_ / (coeffs_.grid.dx * coeffs_.grid.dx);
    for (std::size_t i = 1; i + 1 < N; ++i) {
        acc_[i] = (c * (v[i + 1] - 2.0 * v[i] + v[i - 1]) - coeffs_.q[i] * v[i]) * inv_w_[i];
    }
    if (edges_ == EdgeRule::periodic) {
        acc_[0] = (c * (v[1] - 2.0 * v[0] + v[N - 1]) - coeffs_.q[0] * v[0]) * inv_w_[0];
        acc_[N - 1] =
            (c * (v[0] - 2.0 * v[N - 1] + v[N - 2]) - coeffs_.q[N - 1] * v[N - 1]) * inv_w_[N - 1];
    } else {
        acc_[0] = acc_[N - 1] = 0.0;
    }
}

void EffectiveStepper::advance(EffectiveState& st) {
    const std::size_t N = st.v.size();
    const double h = 0.5 * dt_;
    acceleration(st.v);
    for (std::size_t i = 0; i < N; ++i) {
        st.vdot[i] += h * acc_[i];
        st.v[i] += dt_ * st.vdot[i];
    }
    if (edges_ == EdgeRule::dirichlet) {
        st.v.front() = st.v.back() = 0.0;
        st.vdot.front() = st.vdot.back() = 0.0;
    }
    acceleration(st.v);
    for (std::size_t i = 0; i < N; ++i) st.vdot[i] += h * acc_[i];
    st.t += dt_;
}

EffectiveState step_effective(const EffectiveState& state, const EffectiveCoefficients& coeffs,
                              const MediumParams& medium, double dt, EdgeRule edges) {
    if (state.v.size() != coeffs.grid.nodes || state.vdot.size() != coeffs.grid.nodes) {
        throw ConfigError("effective: state and coefficients use different grids");
    }
    EffectiveStepper stepper(coeffs, medium, dt, edges);
    EffectiveState out = state;
    stepper.advance(out);
    return out;
}

std::vector<double> apply_L(std::span<const double> f, const EffectiveCoefficients& coeffs,
                            const MediumParams& medium) {
    const std::size_t N = f.size();
    if (N != coeffs.grid.nodes) throw ConfigError("apply_L: sample count differs from grid");
    const double c = medium.a * medium.a / (coeffs.grid.dx * coeffs.grid.dx);
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double left = i > 0 ? f[i - 1] : 0.0;
        const double right = i + 1 < N ? f[i + 1] : 0.0;
        out[i] = (-c * (right - 2.0 * f[i] + left) + coeffs.q[i] * f[i]) / coeffs.w[i];
    }
    return out;
}

double weighted_inner(std::span<const double> f, std::span<const double> g,
                      const EffectiveCoefficients& coeffs) {
    std::vector<double> prod(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) prod[i] = coeffs.w[i] * f[i] * g[i];
    return trapezoid(coeffs.grid, prod);
}

double effective_energy_in(const EffectiveState& st, const EffectiveCoefficients& coeffs,
                           const MediumParams& medium, double x_lo, double x_hi) {
    const auto& g = coeffs.grid;
    const double a2 = medium.a * medium.a;
    double nodal = 0.0, grad = 0.0;
    for (std::size_t i = 0; i < g.nodes; ++i) {
        const double x = g.x(i);
        if (x < x_lo || x > x_hi) continue;
        nodal += coeffs.w[i] * st.vdot[i] * st.vdot[i] + coeffs.q[i] * st.v[i] * st.v[i];
    }
    for (std::size_t i = 0; i + 1 < g.nodes; ++i) {
        const double xm = g.x(i) + 0.5 * g.dx;
        if (xm < x_lo || xm > x_hi) continue;
        const double d = (st.v[i + 1] - st.v[i]) / g.dx;
        grad += d * d;
    }
    return 0.5 * g.dx * (nodal + a2 * grad);
}

double effective_energy(const EffectiveState& st, const EffectiveCoefficients& coeffs,
                        const MediumParams& medium) {
    const double inf = std::numeric_limits<double>::infinity();
    return effective_energy_in(st, coeffs, medium, -inf, inf);
}

SlabResponse slab_transfer(double omega, const Slab& slab, const MediumParams& medium) {
    using cd = std::complex<double>;
    if (!(omega >= 0.0)) throw ConfigError("slab: omega >= 0 violated");
    if (!(slab.w_in > 0.0) || !(slab.q_in >= 0.0) || !(slab.width > 0.0)) {
        throw ConfigError("slab: w_in > 0, q_in >= 0, width > 0 required");
    }
    const double a = medium.a;
    const double W = slab.width;
    const double k0 = omega / a;
    const double lambda = (slab.w_in * omega * omega - slab.q_in) / (a * a);  // k_in^2

    if (omega == 0.0 && slab.q_in == 0.0) return {cd(0.0), cd(1.0)};

    // Propagator of (v, v') across the slab; entire in lambda.
    double c, s_over_k, k_s;
    if (lambda > 0.0) {
        const double k = std::sqrt(lambda);
        c = std::cos(k * W);
        s_over_k = std::sin(k * W) / k;
        k_s = k * std::sin(k * W);
    } else if (lambda < 0.0) {
        const double kappa = std::sqrt(-lambda);
        c = std::cosh(kappa * W);
        s_over_k = std::sinh(kappa * W) / kappa;
        k_s = -kappa * std::sinh(kappa * W);
    } else {
        c = 1.0;
        s_over_k = W;
        k_s = 0.0;
    }
    const double P11 = c, P12 = s_over_k, P21 = -k_s, P22 = c;
    const cd ik0(0.0, k0);
    const cd D = -P21 + ik0 * (P11 + P22) + k0 * k0 * P12;
    const cd phase = std::exp(cd(0.0, -k0 * W));
    SlabResponse r;
    r.R = (P21 + ik0 * (P22 - P11) + k0 * k0 * P12) / D * phase;
    r.T = 2.0 * ik0 / D * phase;
    return r;
}

double EffectiveTrajectory::max_relative_drift() const {
    if (energy.empty() || energy.front() == 0.0) return 0.0;
    double d = 0.0;
    for (double e : energy) d = std::max(d, std::abs(e - energy.front()) / energy.front());
    return d;
}

EffectiveTrajectory simulate_effective(const EffectiveRunConfig& cfg, const UniformGrid& grid) {
    cfg.medium.validate();
    EffectiveTrajectory traj;
    traj.coeffs = coefficients(cfg.profile, cfg.medium, grid);
    const double dt_max = max_stable_dt(traj.coeffs, cfg.medium);
    if (cfg.dt > 0.0) {
        traj.dt = cfg.dt;
        traj.steps = static_cast<std::size_t>(std::llround(cfg.t_max / cfg.dt));
    } else {
        traj.steps = static_cast<std::size_t>(std::ceil(cfg.t_max / dt_max - 1e-9));
        traj.dt = traj.steps > 0 ? cfg.t_max / static_cast<double>(traj.steps) : dt_max;
    }
    EffectiveStepper stepper(traj.coeffs, cfg.medium, traj.dt);
    EffectiveState st = effective_initial_data(cfg.initial, cfg.medium, grid);

    auto record = [&](std::size_t k) {
        if (cfg.energy_every > 0 && (k % cfg.energy_every == 0 || k == traj.steps)) {
            traj.energy_times.push_back(st.t);
            traj.energy.push_back(effective_energy(st, traj.coeffs, cfg.medium));
        }
        if (k == 0 || k == traj.steps || (cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0)) {
            if (cfg.observer) {
                cfg.observer(k, st);
            } else {
                traj.snapshots.push_back(st);
            }
        }
    };
    record(0);
    for (std::size_t k = 1; k <= traj.steps; ++k) {
        stepper.advance(st);
        st.t = static_cast<double>(k) * traj.dt;
        record(k);
    }
    traj.final_state = std::move(st);
    return traj;
}

EffectiveTrajectory simulate_effective(const EffectiveRunConfig& cfg) {
    if (!(cfg.dx > 0.0)) throw ConfigError("grid: dx > 0 violated");
    double half = cfg.half_extent;
    if (half <= 0.0) {
        const double lo = cfg.initial.is_zero() ? 0.0 : cfg.initial.pulse.support_lo();
        const double hi = cfg.initial.is_zero() ? 0.0 : cfg.initial.pulse.support_hi();
        half = required_half_extent(lo, hi, cfg.profile.L(), cfg.medium.a, cfg.t_max, cfg.dx,
                                    cfg.profile.center());
    }
    return simulate_effective(cfg, UniformGrid::centered(half, cfg.dx));
}

}  // namespace wallchain
