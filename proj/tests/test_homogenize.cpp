#include <cmath>

#include "doctest.h"
#include "wallchain/homogenize.hpp"

using namespace wallchain;

TEST_CASE("discretize: equal cells at the midpoints") {
    MediumParams m{1.0, 1.0, 1.0};
    auto ch = discretize_densities(DensityProfile::constant(1.0, 1.0, 1.0), 4, m);
    REQUIRE(ch.size() == 4);
    const double s[] = {-0.375, -0.125, 0.125, 0.375};
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(ch.s[j] == doctest::Approx(s[j]).epsilon(1e-15));
        CHECK(ch.M[j] == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(ch.K[j] == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(ch.L * ch.L * ch.K[j] / (m.a * m.a * ch.M[j]) == doctest::Approx(1.0));
    }
}

TEST_CASE("discretize: exact masses for a linear density") {
    MediumParams m{1.0, 1.0, 1.0};
    auto p = DensityProfile::table(1.0, {-0.5, 0.5}, {0.5, 1.5}, {1.0, 1.0});
    auto ch = discretize_densities(p, 2, m);
    CHECK(ch.M[0] == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(ch.M[1] == doctest::Approx(0.625).epsilon(1e-15));
}

TEST_CASE("discretize: totals are conserved") {
    MediumParams m{1.2, 0.7, 2.5};
    auto p = DensityProfile::table(2.0, {-1.0, -0.2, 0.4, 1.0}, {0.3, 2.0, 1.1, 0.6},
                                   {1.0, 0.5, 2.2, 0.9});
    for (auto rule : {PlacementRule::midpoint, PlacementRule::quantile}) {
        auto ch = discretize_densities(p, 37, m, rule);
        double M = 0.0, K = 0.0;
        for (std::size_t j = 0; j < ch.size(); ++j) {
            M += ch.M[j];
            K += ch.K[j];
        }
        CHECK(std::abs(M - m.S * p.integral_M(-1.0, 1.0)) <= 1e-10);
        CHECK(std::abs(K - m.S * p.integral_K(-1.0, 1.0)) <= 1e-10);
    }
}

TEST_CASE("discretize: quantile cells carry equal mass") {
    MediumParams m;
    auto p = DensityProfile::table(1.0, {-0.5, 0.5}, {0.2, 1.8}, {1.0, 1.0});
    auto ch = discretize_densities(p, 10, m, PlacementRule::quantile);
    for (std::size_t j = 0; j < ch.size(); ++j) CHECK(ch.M[j] == doctest::Approx(0.1).epsilon(1e-12));
    for (std::size_t j = 1; j < ch.size(); ++j) CHECK(ch.s[j] > ch.s[j - 1]);
}

TEST_CASE("discretize: degenerate cells") {
    MediumParams m;
    SUBCASE("stiffness without mass is rejected") {
        auto p = DensityProfile::table(1.0, {-0.5, 0.0, 0.5}, {0.0, 0.0, 1.0}, {1.0, 1.0, 1.0});
        CHECK_THROWS_AS(discretize_densities(p, 4, m), ConfigError);
    }
    SUBCASE("empty cells hold no wall") {
        auto p = DensityProfile::empty(1.0);
        CHECK(discretize_densities(p, 8, m).empty());
    }
}

TEST_CASE("verify assumptions") {
    MediumParams m;
    auto prof = DensityProfile::table(1.0, {-0.5, 0.0, 0.5}, {0.5, 1.5, 0.5}, {1.0, 2.0, 1.0});
    std::vector<OscillatorChain> chains;
    for (std::size_t n : {10, 20, 40, 80}) chains.push_back(discretize_densities(prof, n, m));
    SUBCASE("discretized chains pass, weak error is second order") {
        auto rep = verify_assumptions(chains, prof, m, 0.1, 10.0, 10.0);
        CHECK(rep.all_ok);
        CHECK(rep.weak_decreasing);
        // cos(pi u) against a smooth density: midpoint-rule error
        for (std::size_t i = 1; i < rep.chains.size(); ++i) {
            const double r = rep.chains[i - 1].weak_M[3] / rep.chains[i].weak_M[3];
            CHECK(r == doctest::Approx(4.0).epsilon(0.1));
        }
    }
    SUBCASE("first moment vanishes for a symmetric density") {
        auto sym = DensityProfile::constant(1.0, 1.0, 1.0);
        auto ch = discretize_densities(sym, 9, m);
        auto rep = verify_assumptions({ch}, sym, m, 0.1, 10.0, 10.0);
        double moment = 0.0;
        for (std::size_t j = 0; j < ch.size(); ++j) moment += ch.M[j] * ch.s[j];
        CHECK(std::abs(moment) <= 1e-16);
        CHECK(rep.chains[0].weak_M[1] <= 1e-15);
    }
    SUBCASE("a zero spring breaks the ratio bound") {
        auto bad = chains[0];
        bad.K[3] = 0.0;
        auto rep = verify_assumptions({bad}, prof, m, 0.1, 10.0, 10.0);
        CHECK_FALSE(rep.chains[0].ratio_ok);
        CHECK_FALSE(rep.all_ok);
    }
}

namespace {

ConvergenceReport small_study(const DensityProfile& prof, double shift, bool floor = false) {
    ChainSequencePlan plan;
    plan.profile = prof.shifted(shift);
    plan.n_values = {5, 10, 20};
    InitialData d;
    d.pulse.center = -1.55 + shift;
    d.pulse.width = 0.125;
    Rectangle r;
    r.t_max = 2.0;
    r.x_lo = -1.0 + shift;
    r.x_hi = 1.0 + shift;
    r.nt = 41;
    r.nx = 41;
    GridPolicy g;
    g.dx_finite = 1.0 / 400.0;
    g.reference_refinement = 2;
    g.measure_floor = floor;
    return convergence_study(plan, d, r, g, 2);
}

}  // namespace

TEST_CASE("convergence study: empty profile reduces to the free wave") {
    auto rep = small_study(DensityProfile::empty(1.0), 0.0, true);
    for (const auto& row : rep.rows) {
        CHECK(row.walls == 0);
        // Both sides are the free wave; what is left is leapfrog dispersion
        // of the reference, which is what the floor run measures.
        for (std::size_t f = 0; f < 3; ++f) CHECK(row.error[f] <= rep.reference_floor[f]);
    }
    CHECK(rep.rows[0].error.sup_v == rep.rows[2].error.sup_v);
}

TEST_CASE("convergence study: constant densities converge and are translation invariant") {
    auto prof = DensityProfile::constant(1.0, 1.0, 1.0);
    auto a = small_study(prof, 0.0);
    CHECK(a.strictly_decreasing[0]);
    CHECK(a.strictly_decreasing[1]);
    CHECK(a.strictly_decreasing[2]);
    CHECK(a.bounds_ok());
    for (const auto& row : a.rows) {
        CHECK(row.max_residual <= 1e-12);
        CHECK(row.static_overlap <= 1e-12);
        CHECK_FALSE(row.edge_reached);
    }
    auto b = small_study(prof, 0.25);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        for (std::size_t f = 0; f < 3; ++f) {
            CHECK(std::abs(a.rows[i].error[f] - b.rows[i].error[f]) <= 1e-12);
        }
    }
}

TEST_CASE("convergence study: initial time derivative agrees") {
    ChainSequencePlan plan;
    plan.profile = DensityProfile::constant(1.0, 1.0, 1.0);
    plan.n_values = {8};
    InitialData d;
    d.pulse.center = -1.55;
    d.pulse.width = 0.125;
    Rectangle r;
    r.t_max = 0.0025;  // a single lattice step
    r.nt = 2;
    GridPolicy g;
    g.dx_finite = 1.0 / 400.0;
    g.measure_floor = false;
    auto rep = convergence_study(plan, d, r, g);
    CHECK(rep.rows[0].error.sup_vt <= 5e-2);
}

TEST_CASE("convergence study rejects an unaligned lattice") {
    ChainSequencePlan plan;
    plan.profile = DensityProfile::constant(1.0, 1.0, 1.0);
    plan.n_values = {4};
    InitialData d;
    d.pulse.center = -1.55;
    d.pulse.width = 0.125;
    Rectangle r;
    r.t_max = 1.0;
    r.nt = 7;
    GridPolicy g;
    g.dx_finite = 1.0 / 100.0;
    CHECK_THROWS_AS(convergence_study(plan, d, r, g), ConfigError);
}

TEST_CASE("convergence study snaps off-grid walls") {
    ChainSequencePlan plan;
    plan.profile = DensityProfile::constant(1.0, 1.0, 1.0);
    plan.n_values = {3, 7};
    InitialData d;
    d.pulse.center = -1.55;
    d.pulse.width = 0.125;
    Rectangle r;
    r.t_max = 1.0;
    r.nt = 11;
    r.nx = 21;
    GridPolicy g;
    g.dx_finite = 1.0 / 100.0;
    g.reference_refinement = 2;
    g.measure_floor = false;
    const auto rep = convergence_study(plan, d, r, g);
    for (const auto& row : rep.rows) {
        CHECK(row.max_snap_offset > 0.0);
        CHECK(row.max_snap_offset <= 0.5 * g.dx_finite + 1e-15);
        CHECK(row.static_overlap <= 1e-12);
    }
}
