#include "wallchain/homogenize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace wallchain {

std::string to_string(PlacementRule r) {
    return r == PlacementRule::midpoint ? "midpoint" : "quantile";
}

PlacementRule parse_placement_rule(const std::string& s) {
    if (s == "midpoint") return PlacementRule::midpoint;
    if (s == "quantile") return PlacementRule::quantile;
    throw ConfigError("placement: expected midpoint or quantile, got '" + s + "'");
}

void ChainSequencePlan::validate() const {
    profile.validate();
    medium.validate();
    if (n_values.empty()) throw ConfigError("plan: n_values must not be empty");
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        if (n_values[i] < 1) throw ConfigError("plan: n_values entries must be >= 1");
        if (i > 0 && n_values[i] <= n_values[i - 1]) {
            throw ConfigError("plan: n_values strictly increasing violated");
        }
    }
}

namespace {

// x with int_{lo}^{x} rho_M = target, by bisection.
double mass_quantile(const DensityProfile& p, double target) {
    const double lo0 = p.center() - 0.5 * p.L();
    double lo = lo0, hi = p.center() + 0.5 * p.L();
    for (int it = 0; it < 200 && hi - lo > 1e-15 * p.L(); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (p.integral_M(lo0, mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Composite 5-point Gauss-Legendre over [a, b].
template <class F>
double gauss_integral(F&& f, double a, double b, int pieces) {
    static constexpr double xg[5] = {0.0, -0.5384693101056831, 0.5384693101056831,
                                     -0.9061798459386640, 0.9061798459386640};
    static constexpr double wg[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                     0.2369268850561891, 0.2369268850561891};
    const double h = (b - a) / pieces;
    double sum = 0.0;
    for (int i = 0; i < pieces; ++i) {
        const double c = a + (i + 0.5) * h;
        for (int k = 0; k < 5; ++k) sum += wg[k] * f(c + 0.5 * h * xg[k]);
    }
    return 0.5 * h * sum;
}

}  // namespace

OscillatorChain discretize_densities(const DensityProfile& profile, std::size_t n,
                                     const MediumParams& medium, PlacementRule rule) {
    profile.validate();
    medium.validate();
    if (n < 1) throw ConfigError("discretize: n >= 1 violated");
    const double L = profile.L();
    const double lo = profile.center() - 0.5 * L;

    std::vector<double> edges(n + 1), mids(n);
    if (rule == PlacementRule::midpoint) {
        for (std::size_t j = 0; j <= n; ++j) edges[j] = lo + L * static_cast<double>(j) / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
            mids[j] = lo + L * (static_cast<double>(j) + 0.5) / static_cast<double>(n);
        }
    } else {
        const double total = profile.integral_M(lo, lo + L);
        if (!(total > 0.0)) throw ConfigError("discretize: quantile placement needs rho_M > 0 somewhere");
        edges[0] = lo;
        edges[n] = lo + L;
        for (std::size_t j = 1; j < n; ++j) {
            edges[j] = mass_quantile(profile, total * static_cast<double>(j) / static_cast<double>(n));
        }
        for (std::size_t j = 0; j < n; ++j) {
            mids[j] = mass_quantile(profile, total * (static_cast<double>(j) + 0.5) / static_cast<double>(n));
        }
    }

    OscillatorChain chain;
    chain.L = L;
    chain.center = profile.center();
    for (std::size_t j = 0; j < n; ++j) {
        const double M = medium.S * profile.integral_M(edges[j], edges[j + 1]);
        const double K = medium.S * profile.integral_K(edges[j], edges[j + 1]);
        if (M <= 0.0 && K <= 0.0) continue;  // nothing to attach a wall to
        if (M <= 0.0 || K <= 0.0) {
            throw ConfigError("discretize: cell " + std::to_string(j) +
                              " carries " + (M <= 0.0 ? "stiffness but no mass" : "mass but no stiffness") +
                              "; the ratio bound cannot hold");
        }
        chain.s.push_back(mids[j]);
        chain.M.push_back(M);
        chain.K.push_back(K);
    }
    return chain;
}

double weak_test_function(std::size_t k, double u) {
    switch (k) {
        case 0: return 1.0;
        case 1: return u;
        case 2: return u * u;
        case 3: return std::cos(M_PI * u);
        case 4: return std::exp(u);
    }
    throw ConfigError("weak test function index out of range");
}

AssumptionReport verify_assumptions(const std::vector<OscillatorChain>& chains,
                                    const DensityProfile& profile, const MediumParams& medium,
                                    double c1, double c2, double c) {
    AssumptionReport rep;
    const double L = profile.L();
    const double lo = profile.center() - 0.5 * L;
    const double hi = lo + L;
    std::array<double, weak_test_count> target_M{}, target_K{};
    for (std::size_t k = 0; k < weak_test_count; ++k) {
        auto g = [&](double x) { return weak_test_function(k, (x - profile.center()) / L); };
        const auto& bps = profile.breakpoints();
        for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
            target_M[k] += medium.S * gauss_integral([&](double x) { return profile.rho_M(x) * g(x); },
                                                     bps[i], bps[i + 1], 64);
            target_K[k] += medium.S * gauss_integral([&](double x) { return profile.rho_K(x) * g(x); },
                                                     bps[i], bps[i + 1], 64);
        }
    }

    for (const auto& ch : chains) {
        ChainAssumptionCheck chk;
        chk.n = ch.size();
        const double tol = 1e-12 * L;
        chk.ratio_min = std::numeric_limits<double>::infinity();
        chk.ratio_max = 0.0;
        for (std::size_t j = 0; j < ch.size(); ++j) {
            if (ch.s[j] < lo - tol || ch.s[j] > hi + tol) chk.a1_ok = false;
            const double r = ch.M[j] > 0.0
                                 ? L * L * ch.K[j] / (medium.a * medium.a * ch.M[j])
                                 : std::numeric_limits<double>::infinity();
            chk.ratio_min = std::min(chk.ratio_min, r);
            chk.ratio_max = std::max(chk.ratio_max, r);
            chk.total_M += ch.M[j];
            chk.total_K += ch.K[j];
        }
        if (ch.empty()) chk.ratio_min = 0.0;
        chk.ratio_ok = ch.empty() || (chk.ratio_min > c1 && chk.ratio_max < c2);
        chk.mass_ok = chk.total_M < c && chk.total_K < c;
        for (std::size_t k = 0; k < weak_test_count; ++k) {
            double sM = 0.0, sK = 0.0;
            for (std::size_t j = 0; j < ch.size(); ++j) {
                const double g = weak_test_function(k, (ch.s[j] - profile.center()) / L);
                sM += ch.M[j] * g;
                sK += ch.K[j] * g;
            }
            chk.weak_M[k] = std::abs(sM - target_M[k]);
            chk.weak_K[k] = std::abs(sK - target_K[k]);
        }
        const std::string tag = "chain n=" + std::to_string(chk.n) + ": ";
        if (!chk.a1_ok) rep.issues.push_back(tag + "wall outside [center - L/2, center + L/2]");
        if (!chk.ratio_ok) {
            rep.issues.push_back(tag + "ratio L^2 K_j/(a^2 M_j) in [" + std::to_string(chk.ratio_min) +
                                 ", " + std::to_string(chk.ratio_max) + "] not inside (c1, c2)");
        }
        if (!chk.mass_ok) rep.issues.push_back(tag + "total mass or stiffness not below c");
        rep.chains.push_back(chk);
    }

    // Weak convergence: errors must not grow along the sequence (above the
    // quadrature floor).
    constexpr double floor = 1e-13;
    for (std::size_t i = 1; i < rep.chains.size(); ++i) {
        for (std::size_t k = 0; k < weak_test_count; ++k) {
            const auto& a = rep.chains[i - 1];
            const auto& b = rep.chains[i];
            if (b.weak_M[k] > std::max(a.weak_M[k], floor) || b.weak_K[k] > std::max(a.weak_K[k], floor)) {
                rep.weak_decreasing = false;
            }
        }
    }
    if (!rep.weak_decreasing) rep.issues.push_back("weak-convergence error does not decrease along the sequence");
    rep.all_ok = rep.issues.empty();
    return rep;
}

void Rectangle::validate() const {
    if (!(t_max > 0.0)) throw ConfigError("rectangle: t_max > 0 violated");
    if (!(x_hi > x_lo)) throw ConfigError("rectangle: x_hi > x_lo violated");
    if (nt < 2 || nx < 2) throw ConfigError("rectangle: nt >= 2 and nx >= 2 required");
}

bool ConvergenceReport::bounds_ok(double slack) const {
    return std::all_of(rows.begin(), rows.end(), [&](const ConvergenceRow& r) { return r.bounds.within(slack); });
}

bool ConvergenceReport::passed(double end_ratio_limit) const {
    if (rows.size() < 2) return false;
    for (std::size_t f = 0; f < 3; ++f) {
        if (!strictly_decreasing[f] || !(end_ratio[f] < end_ratio_limit)) return false;
    }
    return true;
}

namespace {

double interpolate(const UniformGrid& g, const std::vector<double>& f, double x) {
    const double u = (x - g.x_min) / g.dx;
    auto i = static_cast<long long>(std::floor(u));
    i = std::clamp<long long>(i, 0, static_cast<long long>(g.nodes) - 2);
    const double t = u - static_cast<double>(i);
    const auto k = static_cast<std::size_t>(i);
    return (1.0 - t) * f[k] + t * f[k + 1];
}

// Reference values on the lattice: v and dv/dt at the lattice abscissae, and
// v at the comparison nodes used for the dv/dx norm.
struct LatticeSamples {
    std::vector<std::vector<double>> v, vt, v_nodes;
};

struct Comparison {
    const Rectangle& rect;
    const std::vector<double>& nodes;  // finite-grid nodes spanning [x_lo, x_hi]
    double dx_nodes;
    const LatticeSamples& ref;
    ErrorTriple err;

    void add(std::size_t k, const std::vector<double>& v, const std::vector<double>& vt,
             const std::vector<double>& v_nodes) {
        for (std::size_t m = 0; m < rect.nx; ++m) {
            err.sup_v = std::max(err.sup_v, std::abs(v[m] - ref.v[k][m]));
            err.sup_vt = std::max(err.sup_vt, std::abs(vt[m] - ref.vt[k][m]));
        }
        double sq = 0.0;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            const double d = (v_nodes[i + 1] - v_nodes[i]) - (ref.v_nodes[k][i + 1] - ref.v_nodes[k][i]);
            sq += d * d;
        }
        err.l2_vx = std::max(err.l2_vx, std::sqrt(sq / dx_nodes));
    }
};

struct EffectiveSampling {
    std::size_t per_lattice = 0;
    double dt = 0.0;
};

EffectiveSampling effective_sampling(const EffectiveCoefficients& c, const MediumParams& m,
                                     double lattice_dt) {
    EffectiveSampling s;
    const double dt_max = max_stable_dt(c, m);
    s.per_lattice = static_cast<std::size_t>(std::ceil(lattice_dt / dt_max - 1e-12));
    s.dt = lattice_dt / static_cast<double>(s.per_lattice);
    return s;
}

template <class Sink>
void run_effective_lattice(const ChainSequencePlan& plan, const InitialData& initial,
                           const Rectangle& rect, const std::vector<double>& nodes, double dx,
                           double half, Sink&& sink, double* dt_used = nullptr) {
    const UniformGrid grid = UniformGrid::centered(half, dx);
    const auto coeffs = coefficients(plan.profile, plan.medium, grid);
    const double lattice_dt = rect.t_max / static_cast<double>(rect.nt - 1);
    const auto smp = effective_sampling(coeffs, plan.medium, lattice_dt);
    if (dt_used) *dt_used = smp.dt;

    EffectiveRunConfig cfg;
    cfg.medium = plan.medium;
    cfg.profile = plan.profile;
    cfg.initial = initial;
    cfg.dx = dx;
    cfg.dt = smp.dt;
    cfg.t_max = rect.t_max;
    cfg.snapshot_every = smp.per_lattice;
    cfg.energy_every = 0;
    std::vector<double> v(rect.nx), vt(rect.nx), vn(nodes.size());
    cfg.observer = [&](std::size_t step, const EffectiveState& st) {
        const std::size_t k = step / smp.per_lattice;
        for (std::size_t m = 0; m < rect.nx; ++m) {
            v[m] = interpolate(grid, st.v, rect.x(m));
            vt[m] = interpolate(grid, st.vdot, rect.x(m));
        }
        for (std::size_t i = 0; i < nodes.size(); ++i) vn[i] = interpolate(grid, st.v, nodes[i]);
        sink(k, v, vt, vn);
    };
    simulate_effective(cfg, grid);
}

double static_overlap(const OscillatorChain& chain, const WallGrid& mesh, const MediumParams& m,
                      const PhysicalState& psi0) {
    const std::size_t n = chain.size();
    if (n < 2) return 0.0;
    const double norm0 = state_norm(psi0, m, chain);
    if (norm0 == 0.0) return 0.0;
    std::vector<double> levels(n - 1, 0.0);
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        std::fill(levels.begin(), levels.end(), 0.0);
        levels[k] = 1.0;
        const auto st = static_solution(chain, m, mesh, levels);
        const double ip = inner_product(st, psi0, m, chain);
        worst = std::max(worst, std::abs(ip) / (state_norm(st, m, chain) * norm0));
    }
    return worst;
}

}  // namespace

ConvergenceReport convergence_study(const ChainSequencePlan& plan, const InitialData& initial,
                                    const Rectangle& rect, const GridPolicy& policy,
                                    unsigned jobs) {
    plan.validate();
    rect.validate();
    initial.pulse.validate();
    const auto& med = plan.medium;
    const double dx_f = policy.dx_finite;
    if (!(dx_f > 0.0)) throw ConfigError("grid: dx > 0 violated");
    if (policy.reference_refinement < 1) throw ConfigError("grid: reference_refinement >= 1 violated");
    const double dt_f = dx_f / med.a;
    const double lattice_dt = rect.t_max / static_cast<double>(rect.nt - 1);
    const auto per_lattice = static_cast<std::size_t>(std::llround(lattice_dt / dt_f));
    if (per_lattice == 0 || std::abs(static_cast<double>(per_lattice) * dt_f - lattice_dt) > 1e-9 * lattice_dt) {
        throw ConfigError("grid: lattice time step t_max/(nt-1) must be a whole multiple of dx/a");
    }

    double half = required_half_extent(initial.pulse.support_lo(), initial.pulse.support_hi(),
                                       plan.profile.L(), med.a, rect.t_max, dx_f,
                                       plan.profile.center());
    half = std::max({half, std::abs(rect.x_lo) + 4.0 * dx_f, std::abs(rect.x_hi) + 4.0 * dx_f});
    const UniformGrid fgrid = UniformGrid::centered(half, dx_f);

    // Finite-grid nodes covering [x_lo, x_hi].
    std::vector<double> nodes;
    for (std::size_t i = 0; i < fgrid.nodes; ++i) {
        const double x = fgrid.x(i);
        if (x >= rect.x_lo - 1e-9 * dx_f && x <= rect.x_hi + 1e-9 * dx_f) nodes.push_back(x);
    }
    if (nodes.size() < 2) throw ConfigError("rectangle: fewer than two grid nodes in [x_lo, x_hi]");

    ConvergenceReport rep;
    rep.rect = rect;
    rep.dx_finite = dx_f;
    rep.dx_reference = dx_f / static_cast<double>(policy.reference_refinement);

    LatticeSamples ref;
    ref.v.resize(rect.nt);
    ref.vt.resize(rect.nt);
    ref.v_nodes.resize(rect.nt);
    run_effective_lattice(
        plan, initial, rect, nodes, rep.dx_reference, half,
        [&](std::size_t k, const std::vector<double>& v, const std::vector<double>& vt,
            const std::vector<double>& vn) {
            ref.v[k] = v;
            ref.vt[k] = vt;
            ref.v_nodes[k] = vn;
        },
        &rep.dt_reference);

    // Chains are built up front so a bad plan fails before any long run.
    std::vector<OscillatorChain> chains;
    for (std::size_t n : plan.n_values) chains.push_back(discretize_densities(plan.profile, n, med, plan.rule));
    std::vector<double> snap_offset(chains.size(), 0.0);
    for (std::size_t i = 0; i < chains.size(); ++i) {
        const auto sc = snap_chain(chains[i], fgrid);
        for (double o : sc.offsets) snap_offset[i] = std::max(snap_offset[i], std::abs(o));
        chains[i] = sc.chain;
    }

    rep.rows.resize(chains.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= chains.size()) return;
            try {
                auto& row = rep.rows[idx];
                row.n = plan.n_values[idx];
                row.walls = chains[idx].size();
                Comparison cmp{rect, nodes, dx_f, ref, {}};
                FiniteRunConfig cfg;
                cfg.medium = med;
                cfg.chain = chains[idx];
                cfg.initial = initial;
                cfg.dx = dx_f;
                cfg.t_max = rect.t_max;
                cfg.half_extent = half;
                cfg.snapshot_every = per_lattice;
                cfg.monitor_every = per_lattice * std::max<std::size_t>(1, policy.monitor_stride);
                std::vector<double> v(rect.nx), vt(rect.nx), vn(nodes.size());
                bool first = true;
                cfg.observer = [&](std::size_t step, const PhysicalState& st,
                                   const std::vector<double>& vdot) {
                    const auto& g = st.mesh.grid;
                    if (first) {
                        first = false;
                        row.static_overlap = static_overlap(chains[idx], st.mesh, med, st);
                    }
                    for (std::size_t m = 0; m < rect.nx; ++m) {
                        v[m] = interpolate(g, st.v, rect.x(m));
                        vt[m] = interpolate(g, vdot, rect.x(m));
                    }
                    for (std::size_t i = 0; i < nodes.size(); ++i) vn[i] = interpolate(g, st.v, nodes[i]);
                    cmp.add(step / per_lattice, v, vt, vn);
                };
                const auto tr = simulate(cfg);
                row.error = cmp.err;
                row.max_residual = tr.max_residual();
                row.energy_drift = tr.max_relative_drift();
                row.max_snap_offset = snap_offset[idx];
                row.bounds = tr.bounds;
                row.edge_reached = tr.edge_reached;
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_lock);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(chains.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    if (policy.measure_floor) {
        Comparison cmp{rect, nodes, dx_f, ref, {}};
        run_effective_lattice(plan, initial, rect, nodes, 2.0 * rep.dx_reference, half,
                              [&](std::size_t k, const std::vector<double>& v,
                                  const std::vector<double>& vt, const std::vector<double>& vn) {
                                  cmp.add(k, v, vt, vn);
                              });
        rep.reference_floor = cmp.err;
    }

    for (std::size_t f = 0; f < 3; ++f) rep.strictly_decreasing[f] = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        const auto& a = rep.rows[i - 1].error;
        const auto& b = rep.rows[i].error;
        rep.ratios.push_back({b.sup_v / a.sup_v, b.sup_vt / a.sup_vt, b.l2_vx / a.l2_vx});
        for (std::size_t f = 0; f < 3; ++f) {
            if (!(b[f] < a[f])) rep.strictly_decreasing[f] = false;
        }
    }
    if (!rep.rows.empty()) {
        const auto& a = rep.rows.front().error;
        const auto& b = rep.rows.back().error;
        for (std::size_t f = 0; f < 3; ++f) rep.end_ratio[f] = a[f] > 0.0 ? b[f] / a[f] : 0.0;
    }
    return rep;
}

}  // namespace wallchain
