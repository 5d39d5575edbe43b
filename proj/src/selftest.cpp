#include "wallchain/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>

#include "wallchain/batteries.hpp"
#include "wallchain/homogenize.hpp"
#include "wallchain/scattering_analysis.hpp"

namespace wallchain {

namespace {

// Tolerances of the acceptance criteria.
constexpr double drift_limit = 1e-6;
constexpr double drift_shrink = 3.0;
constexpr double skew_spread = 0.2;
constexpr double kernel_tol = 1e-12;
constexpr double interface_tol = 1e-12;
constexpr double end_ratio_limit = 0.2;
constexpr double oracle_rel = 0.05;
constexpr double unitarity_tol = 1e-12;
constexpr double gap_doubling_rel = 0.01;
constexpr double gap_reduction = 10.0;
constexpr double bound_slack = 1e-3;
constexpr double free_field_tol = 1e-13;

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

MediumParams unit_medium() { return MediumParams{1.0, 1.0, 1.0}; }

// rho_M = rho0, rho_K = rho0 a^2 / L^2 on [-L/2, L/2], L = 1.
DensityProfile unit_profile() { return DensityProfile::constant(1.0, 1.0, 1.0); }

InitialData unit_pulse() {
    InitialData d;
    d.pulse.center = -1.55;
    d.pulse.width = 0.125;
    return d;
}

struct Shared {
    double max_residual = 0.0;
    std::size_t finite_runs = 0;
    const ConvergenceReport* convergence = nullptr;

    void note(double r) {
        max_residual = std::max(max_residual, r);
        ++finite_runs;
    }
};

CriterionResult energy_conservation(Shared& sh) {
    CriterionResult r{"energy_conservation", true, ""};
    const auto m = unit_medium();
    for (std::size_t n : {1, 10, 100}) {
        const auto chain = discretize_densities(unit_profile(), n, m);
        double d[2];
        for (int k = 0; k < 2; ++k) {
            FiniteRunConfig cfg;
            cfg.medium = m;
            cfg.chain = chain;
            cfg.initial = unit_pulse();
            cfg.dx = 1.0 / (2000.0 * (k + 1));
            cfg.t_max = 10.0;
            cfg.monitor_every = 0;
            const auto tr = simulate(cfg);
            sh.note(tr.max_residual());
            d[k] = tr.max_relative_drift();
        }
        const double shrink = d[0] / d[1];
        r.passed = r.passed && d[0] <= drift_limit && shrink >= drift_shrink;
        r.detail += "n=" + std::to_string(n) + " drift=" + fmt("%.2e", d[0]) + " shrink=" + fmt("%.2f", shrink) + "; ";
    }
    return r;
}

CriterionResult skew_symmetry() {
    CriterionResult r{"skew_symmetry", true, ""};
    const MediumParams m{1.1, 0.9, 1.5};
    for (std::size_t n : {1, 4, 10}) {
        double C[3];
        for (int level = 0; level < 3; ++level) {
            const double dx = (1.0 / 200.0) / std::pow(2.0, level);
            std::mt19937_64 rng(17 + n);
            const auto setup = random_chain_setup(n, 1.0, dx, m, rng, true);
            double worst = 0.0;
            for (int k = 0; k < 100; ++k) {
                const auto a = random_compatible_state(setup, m, rng);
                const auto b = random_compatible_state(setup, m, rng);
                worst = std::max(worst, skew_defect(a, b, m, setup.chain) / (dx * dx));
            }
            C[level] = worst;
        }
        for (int level = 1; level < 3; ++level) {
            r.passed = r.passed && std::abs(C[level] / C[0] - 1.0) <= skew_spread;
        }
        r.detail += "n=" + std::to_string(n) + " C=" + fmt("%.3g", C[0]) + "/" + fmt("%.3g", C[1]) + "/" +
                    fmt("%.3g", C[2]) + "; ";
    }
    return r;
}

CriterionResult static_solutions() {
    CriterionResult r{"static_solutions", true, ""};
    const auto m = unit_medium();
    for (std::size_t n : {2, 5, 20}) {
        const auto chain = discretize_densities(unit_profile(), n, m);
        const auto a = audit_static(chain, m, 1.0 / 1000.0, 4, 7);
        const bool ok = a.basis_size == n - 1 && a.max_generator <= kernel_tol && a.max_drift <= kernel_tol;
        r.passed = r.passed && ok;
        r.detail += "n=" + std::to_string(n) + " |A psi|=" + fmt("%.1e", a.max_generator) +
                    " drift=" + fmt("%.1e", a.max_drift) + "; ";
    }
    return r;
}

CriterionResult convergence(Shared& sh, ConvergenceReport& rep, unsigned jobs) {
    ChainSequencePlan plan;
    plan.profile = unit_profile();
    plan.n_values = {25, 50, 100, 200, 400};
    plan.medium = unit_medium();
    rep = convergence_study(plan, unit_pulse(), Rectangle{}, GridPolicy{}, jobs);
    sh.convergence = &rep;
    for (const auto& row : rep.rows) sh.note(row.max_residual);
    CriterionResult r{"homogenization_convergence", true, ""};
    for (std::size_t f = 0; f < 3; ++f) {
        r.passed = r.passed && rep.strictly_decreasing[f] && rep.end_ratio[f] < end_ratio_limit;
        r.detail += std::string(error_family_names[f]) + " e400/e25=" + fmt("%.3g", rep.end_ratio[f]) +
                    (rep.strictly_decreasing[f] ? " decreasing" : " NOT decreasing") + "; ";
    }
    return r;
}

CriterionResult bounds(const Shared& sh) {
    CriterionResult r{"a_priori_bounds", true, ""};
    if (!sh.convergence) return {"a_priori_bounds", false, "convergence battery did not run"};
    double worst = 0.0;
    for (const auto& row : sh.convergence->rows) {
        const auto& b = row.bounds;
        for (const auto* e : {&b.v_h1, &b.vdot_h1, &b.kinetic, &b.wall_accel, &b.vx_reg_h1}) {
            if (e->bound > 0.0) worst = std::max(worst, e->max_value / e->bound);
        }
        r.passed = r.passed && b.within(bound_slack) && b.samples > 0;
    }
    r.detail = "max norm/bound=" + fmt("%.4f", worst);
    return r;
}

CriterionResult oracle_equivalence() {
    CriterionResult r{"oracle_equivalence", true, ""};
    const auto m = unit_medium();
    const auto prof = unit_profile();
    const Slab slab{2.0, 1.0, 1.0};
    const double wc = cutoff_frequency(prof, m);
    const auto probes = default_probes(1.0);
    for (double f : {0.5, 1.5, 3.0}) {
        const double w0 = f * wc;
        const auto d = narrowband_packet(w0, m, probes.x_left);
        EffectiveRunConfig cfg;
        cfg.medium = m;
        cfg.profile = prof;
        cfg.initial = d;
        cfg.dx = 1.0 / 20.0;
        cfg.t_max = 16.0 * d.pulse.width + 20.0;
        cfg.snapshot_every = 200;
        cfg.energy_every = 0;
        const auto sr = reflect_transmit(simulate_effective(cfg), m, probes);
        const double T2 = std::norm(slab_transfer(w0, slab, m).T);
        const double rel = std::abs(sr.transmitted_fraction - T2) / T2;
        r.passed = r.passed && rel <= oracle_rel;
        r.detail += fmt("w0=%.2fwc", f) + " rel=" + fmt("%.2e", rel) + "; ";
    }
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uw(1.0, 5.0), uq(0.0, 5.0), uW(0.1, 10.0), uo(1e-3, 5.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const Slab s{uw(rng), uq(rng), uW(rng)};
        const auto t = slab_transfer(uo(rng), s, m);
        worst = std::max(worst, std::abs(std::norm(t.R) + std::norm(t.T) - 1.0));
    }
    r.passed = r.passed && worst <= unitarity_tol;
    r.detail += "max||R|^2+|T|^2-1|=" + fmt("%.1e", worst);
    return r;
}

CriterionResult band_gap() {
    CriterionResult r{"band_gap", true, ""};
    const auto m = unit_medium();
    const double L = 24.0;  // kappa L must be large for the exponent to scale linearly
    const auto prof = DensityProfile::constant(L, 1.0, 1.0);
    const double w0 = 0.5 * cutoff_frequency(prof, m);
    const double ratio = gap_exponent_ratio(prof, w0, m);
    double trans[2];
    for (int k = 0; k < 2; ++k) {
        const double W = L * (k + 1);
        const auto probes = default_probes(W);
        const auto d = narrowband_packet(w0, m, probes.x_left);
        EffectiveRunConfig cfg;
        cfg.medium = m;
        cfg.profile = DensityProfile::constant(W, 1.0, 1.0);
        cfg.initial = d;
        cfg.dx = 0.1;
        cfg.t_max = 16.0 * d.pulse.width + 1.2 * W + 20.0;
        cfg.snapshot_every = 1000;
        cfg.energy_every = 0;
        trans[k] = reflect_transmit(simulate_effective(cfg), m, probes).transmitted_fraction;
    }
    const double reduction = trans[0] / trans[1];
    r.passed = std::abs(ratio / 2.0 - 1.0) <= gap_doubling_rel && reduction >= gap_reduction;
    r.detail = "L=24->48 at wc/2: -log|T| ratio=" + fmt("%.4f", ratio) + " transmitted " + fmt("%.2e", trans[0]) +
               " -> " + fmt("%.2e", trans[1]) + " (reduction " + fmt("%.2e", reduction) + ")";
    return r;
}

CriterionResult free_field(Shared& sh) {
    const auto m = unit_medium();
    FiniteRunConfig cfg;
    cfg.medium = m;
    cfg.initial = unit_pulse();
    cfg.initial.pulse.center = -0.5;
    cfg.dx = 1.0 / 1000.0;
    cfg.t_max = 2000.0 * cfg.dx / m.a;
    cfg.snapshot_every = 1;
    cfg.monitor_every = 0;
    double worst = 0.0;
    const auto& d = cfg.initial;
    cfg.observer = [&](std::size_t step, const PhysicalState& st, const std::vector<double>&) {
        const auto& g = st.mesh.grid;
        // step * dt, not the accumulated st.t, so the oracle carries no summation error
        const double shift = static_cast<double>(step) * g.dx;
        for (std::size_t i = 0; i < g.nodes; ++i) {
            const double x0 = g.x(i) - shift;
            worst = std::max({worst, std::abs(st.p[i] - d.p0(x0, m)), std::abs(st.v[i] - d.v0(x0, m))});
        }
    };
    const auto tr = simulate(cfg);
    sh.note(tr.max_residual());
    const bool ok = worst <= free_field_tol && tr.steps == 2000;
    return {"free_field_exactness", ok, "steps=" + std::to_string(tr.steps) + " sup error=" + fmt("%.1e", worst)};
}

CriterionResult interface(const Shared& sh) {
    return {"interface_condition", sh.max_residual <= interface_tol && sh.finite_runs > 0,
            "max |v(s_j)-z_j|=" + fmt("%.1e", sh.max_residual) + " over " + std::to_string(sh.finite_runs) +
                " finite runs"};
}

}  // namespace

std::vector<CriterionResult> run_selftest(std::ostream& out, const SelftestOptions& options) {
    Shared sh;
    ConvergenceReport rep;
    std::vector<CriterionResult> results;
    auto go = [&](const std::string& name, const std::function<CriterionResult()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult r;
        try {
            r = f();
        } catch (const std::exception& e) {
            r = {name, false, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << fmt(" [%.1fs]", s) << std::endl;
        results.push_back(r);
    };
    go("energy_conservation", [&] { return energy_conservation(sh); });
    go("skew_symmetry", [&] { return skew_symmetry(); });
    go("static_solutions", [&] { return static_solutions(); });
    go("homogenization_convergence", [&] { return convergence(sh, rep, std::max(1u, options.jobs)); });
    go("oracle_equivalence", [&] { return oracle_equivalence(); });
    go("band_gap", [&] { return band_gap(); });
    go("a_priori_bounds", [&] { return bounds(sh); });
    go("free_field_exactness", [&] { return free_field(sh); });
    go("interface_condition", [&] { return interface(sh); });
    return results;
}

}  // namespace wallchain
