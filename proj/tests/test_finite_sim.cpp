#include <cmath>
#include <vector>

#include "doctest.h"
#include "wallchain/finite_sim.hpp"

using namespace wallchain;

namespace {

OscillatorChain uniform_chain(std::size_t n, double L, double M_total, double K_total) {
    OscillatorChain c;
    c.L = L;
    for (std::size_t j = 0; j < n; ++j) {
        c.s.push_back(-0.5 * L + (static_cast<double>(j) + 0.5) * L / static_cast<double>(n));
        c.M.push_back(M_total / static_cast<double>(n));
        c.K.push_back(K_total / static_cast<double>(n));
    }
    return c;
}

InitialData gaussian(double center, double width, Linkage link = Linkage::right_moving) {
    InitialData d;
    d.pulse.shape = PulseShape::gaussian;
    d.pulse.center = center;
    d.pulse.width = width;
    d.linkage = link;
    return d;
}

}  // namespace

TEST_CASE("wall update: critically damped free decay") {
    MediumParams m;  // a rho0 = 1, S = 1
    const auto ws = wall_update(0.0, 1.0, 0.0, 0.0, 1.0, 1.0, m, 0.01);
    const double exact = (1.0 - 0.01) * std::exp(-0.01);
    CHECK(ws.z == doctest::Approx(0.9801493).epsilon(1e-6));
    CHECK(std::abs(ws.z - exact) <= 1e-6);
}

TEST_CASE("wall update: zero stays zero") {
    MediumParams m;
    const auto ws = wall_update(0.0, 0.0, 0.0, 0.0, 2.0, 3.0, m, 0.1);
    CHECK(ws.y == 0.0);
    CHECK(ws.z == 0.0);
    CHECK(ws.wout_left == 0.0);
    CHECK(ws.wout_right == 0.0);
}

TEST_CASE("wall update: constant forcing reaches the static displacement") {
    MediumParams m{1.0, 1.0, 1.5};
    const double c = 1.0, K = 2.0;
    double y = 0.0, z = 0.0;
    for (int k = 0; k < 20000; ++k) {
        const auto ws = wall_update(y, z, c, 0.0, 1.0, K, m, 0.01);
        y = ws.y;
        z = ws.z;
    }
    CHECK(y == doctest::Approx(m.S * c / K).epsilon(1e-10));
    CHECK(std::abs(z) <= 1e-10);
}

TEST_CASE("wall update: time reversible") {
    MediumParams m{1.2, 0.8, 0.7};
    const auto fwd = wall_update(0.3, -0.4, 0.9, -0.2, 1.7, 2.3, m, 0.02);
    const auto back = wall_update(fwd.y, fwd.z, 0.9, -0.2, 1.7, 2.3, m, -0.02);
    CHECK(std::abs(back.y - 0.3) <= 1e-12);
    CHECK(std::abs(back.z + 0.4) <= 1e-12);
}

TEST_CASE("wall update emits the interface-consistent characteristics") {
    MediumParams m{1.2, 0.8, 0.7};
    const auto ws = wall_update(0.1, 0.2, 0.5, -0.3, 1.0, 1.0, m, 0.01);
    CHECK(ws.wout_left == doctest::Approx(0.5 - 2.0 * m.impedance() * ws.z));
    CHECK(ws.wout_right == doctest::Approx(-0.3 + 2.0 * m.impedance() * ws.z));
}

TEST_CASE("init_state") {
    MediumParams m{1.3, 2.0, 1.0};
    auto chain = uniform_chain(3, 1.0, 1.0, 1.0);
    auto [grid, snapped] = make_sim_grid(chain, m, 1e-2, 3.0);
    SUBCASE("zero data") {
        auto st = init_state([](double) { return 0.0; }, [](double) { return 0.0; },
                             snapped.chain, m, grid.mesh);
        for (std::size_t i = 0; i < st.wplus.size(); ++i) {
            CHECK(st.wplus[i] == 0.0);
            CHECK(st.wminus[i] == 0.0);
        }
    }
    SUBCASE("right-moving pulse is a pure w+") {
        auto data = gaussian(-1.5, 0.1);
        auto st = init_state(data, snapped.chain, m, grid.mesh);
        for (std::size_t i = 0; i < st.wplus.size(); ++i) {
            const double f = data.pulse.value(grid.mesh.grid.x(i));
            CHECK(st.wplus[i] == doctest::Approx(2.0 * f));
            CHECK(std::abs(st.wminus[i]) <= 1e-15);
        }
        CHECK(st.y == std::vector<double>(3, 0.0));
        CHECK(st.z == std::vector<double>(3, 0.0));
    }
    SUBCASE("support overlapping the chain is rejected") {
        auto data = gaussian(-0.5, 0.1);
        CHECK_THROWS_AS(init_state(data, snapped.chain, m, grid.mesh), ConfigError);
    }
}

TEST_CASE("free field: rigid translation over 2000 steps") {
    MediumParams m{1.0, 2.0, 1.0};
    FiniteRunConfig cfg;
    cfg.medium = m;
    cfg.chain.L = 1.0;
    cfg.initial = gaussian(-1.0, 0.1);
    cfg.dx = 1e-3;
    cfg.t_max = 2000 * cfg.dx / m.a;
    auto tr = simulate(cfg);
    REQUIRE(tr.steps == 2000);
    const auto& fin = tr.snapshots.back();
    const double t = 2000 * tr.grid.dt;
    double err = 0.0;
    for (std::size_t i = 0; i < fin.v.size(); ++i) {
        const double x = tr.grid.mesh.grid.x(i);
        err = std::max(err, std::abs(fin.p[i] - cfg.initial.p0(x - m.a * t, m)));
        err = std::max(err, std::abs(fin.v[i] - cfg.initial.v0(x - m.a * t, m)) * m.impedance());
    }
    CHECK(err <= 1e-13);
    CHECK_FALSE(tr.edge_reached);
}

TEST_CASE("free field: shift is bitwise reversible") {
    MediumParams m;
    OscillatorChain none;
    auto [grid, snapped] = make_sim_grid(none, m, 1e-2, 5.0);
    auto st = init_state(gaussian(0.0, 0.2, Linkage::pressure_only), snapped.chain, m, grid.mesh);
    const auto w0p = st.wplus, w0m = st.wminus;
    FiniteStepper stepper(snapped.chain, m, grid);
    for (int k = 0; k < 100; ++k) stepper.advance(st);
    for (std::size_t i = 0; i + 100 < w0p.size(); ++i) {
        CHECK(st.wplus[i + 100] == w0p[i]);
        CHECK(st.wminus[i] == w0m[i + 100]);
    }
}

TEST_CASE("zero data gives a zero trajectory") {
    FiniteRunConfig cfg;
    cfg.chain = uniform_chain(4, 1.0, 1.0, 1.0);
    cfg.initial.pulse.amplitude = 0.0;
    cfg.dx = 1e-2;
    cfg.t_max = 1.0;
    auto tr = simulate(cfg);
    for (const auto& e : tr.energy) CHECK(e.e_tot == 0.0);
    for (double z : tr.final_state.z) CHECK(z == 0.0);
}

TEST_CASE("rigid-wall surrogate reflects everything") {
    MediumParams m;
    FiniteRunConfig cfg;
    cfg.medium = m;
    cfg.chain.L = 1.0;
    cfg.chain.s = {0.0};
    cfg.chain.M = {1e12};
    cfg.chain.K = {1.0};
    cfg.initial = gaussian(-1.5, 0.1);
    cfg.dx = 1e-3;
    cfg.t_max = 3.0;
    auto tr = simulate(cfg);
    const auto& fin = tr.snapshots.back();
    const double e0 = tr.energy.front().e_tot;
    const double transmitted = field_energy_in(fin, m, 0.0, 1e9);
    const double reflected = field_energy_in(fin, m, -1e9, 0.0);
    CHECK(transmitted <= 1e-6 * e0);
    CHECK(reflected >= (1.0 - 1e-6) * e0);
    // Reflected pulse centred at -1.5: pressure keeps its sign, velocity flips.
    const auto& g = tr.grid.mesh.grid;
    const auto i = static_cast<std::size_t>(std::llround((-1.5 - g.x_min) / g.dx));
    CHECK(fin.p[i] > 0.9);
    CHECK(fin.v[i] < -0.9 / m.impedance());
}

TEST_CASE("causality ahead of the pulse") {
    MediumParams m;
    FiniteRunConfig cfg;
    cfg.medium = m;
    cfg.chain = uniform_chain(5, 1.0, 1.0, 1.0);
    cfg.initial.pulse.shape = PulseShape::bump;
    cfg.initial.pulse.center = -1.2;
    cfg.initial.pulse.width = 0.2;  // support ends at -1.0, d = 0.5
    cfg.dx = 1e-3;
    cfg.t_max = 0.45;
    cfg.snapshot_every = 50;
    auto tr = simulate(cfg);
    const auto& g = tr.grid.mesh.grid;
    for (const auto& snap : tr.snapshots) {
        for (std::size_t i = 0; i < g.nodes; ++i) {
            if (g.x(i) > -0.5 + 1e-9) {
                CHECK(std::abs(snap.p[i]) <= 1e-12);
                CHECK(std::abs(snap.v[i]) <= 1e-12);
            }
        }
        for (double z : snap.z) CHECK(std::abs(z) <= 1e-12);
    }
}

TEST_CASE("static state is invariant under evolution") {
    MediumParams m{1.0, 1.0, 0.8};
    auto chain = uniform_chain(5, 1.0, 1.0, 2.0);
    auto [grid, snapped] = make_sim_grid(chain, m, 1e-3, 1.5);
    std::vector<double> levels{1.0, -2.0, 0.5, 3.0};
    auto st = static_solution(snapped.chain, m, grid.mesh, levels);
    FiniteRunConfig cfg;
    cfg.medium = m;
    cfg.chain = snapped.chain;
    cfg.initial_state = st;
    cfg.dx = 1e-3;
    cfg.t_max = 1.0;
    cfg.snapshot_every = 100;
    auto tr = simulate(cfg);
    double dev = 0.0;
    for (const auto& snap : tr.snapshots) {
        for (std::size_t i = 0; i < st.p.size(); ++i) {
            dev = std::max({dev, std::abs(snap.p[i] - st.p[i]), std::abs(snap.v[i])});
        }
        for (std::size_t j = 0; j < st.y.size(); ++j) {
            dev = std::max({dev, std::abs(snap.y[j] - st.y[j]), std::abs(snap.z[j])});
        }
    }
    CHECK(dev <= 1e-12);
}

TEST_CASE("energy drift is second order and the interface identity holds") {
    MediumParams m;
    double prev = 0.0;
    for (double dx : {1.0 / 200.0, 1.0 / 400.0, 1.0 / 800.0}) {
        FiniteRunConfig cfg;
        cfg.medium = m;
        cfg.chain = uniform_chain(10, 1.0, 1.0, 1.0);
        cfg.initial = gaussian(-1.55, 0.125);
        cfg.dx = dx;
        cfg.t_max = 4.0;
        cfg.monitor_every = 0;
        auto tr = simulate(cfg);
        const double d = tr.max_relative_drift();
        CHECK(tr.max_residual() <= 1e-12);
        if (prev > 0.0) CHECK(d <= 0.3 * prev);
        prev = d;
    }
}

TEST_CASE("a-priori bounds hold along a run") {
    MediumParams m{1.0, 1.0, 1.0};
    FiniteRunConfig cfg;
    cfg.medium = m;
    cfg.chain = uniform_chain(20, 1.0, 1.0, 1.0);
    cfg.initial = gaussian(-1.55, 0.125);
    cfg.dx = 1.0 / 800.0;
    cfg.t_max = 3.0;
    cfg.monitor_every = 8;
    auto tr = simulate(cfg);
    CHECK(tr.bounds.samples > 0);
    CHECK(tr.bounds.within(1e-3));
    CHECK(tr.bounds.v_h1.max_value > 0.0);
}
