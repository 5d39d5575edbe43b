#include <cmath>

#include "doctest.h"
#include "wallchain/scattering_analysis.hpp"

using namespace wallchain;

namespace {

OscillatorChain four_walls() {
    OscillatorChain c;
    c.s = {-0.3, -0.1, 0.05, 0.35};
    c.M = {0.3, 0.5, 0.2, 0.4};
    c.K = {1.0, 2.0, 0.5, 3.0};
    return c;
}

OscillatorChain light_walls() {
    auto c = four_walls();
    for (auto& M : c.M) M *= 0.1;
    return c;
}

InitialData packet(double k0, double width, double center) {
    InitialData d;
    d.pulse.shape = PulseShape::wavepacket;
    d.pulse.wavenumber = k0;
    d.pulse.width = width;
    d.pulse.center = center;
    return d;
}

}  // namespace

TEST_CASE("one wall: closed form against the transfer matrix") {
    MediumParams m{1.3, 0.8, 0.6};
    OscillatorChain c;
    c.s = {0.1};
    c.M = {0.7};
    c.K = {3.0};
    for (double w : {0.3, 1.0, 2.5, 7.0}) {
        const auto t = single_wall_transmission(w, 0.7, 3.0, m);
        const auto r = chain_transfer(w, c, m);
        CHECK(std::abs(t - r.T) <= 1e-14);
        const double X = w * 0.7 - 3.0 / w, two_sz = 2.0 * m.S * m.impedance();
        CHECK(std::norm(t) == doctest::Approx(two_sz * two_sz / (two_sz * two_sz + X * X)).epsilon(1e-14));
    }
    // resonance at omega^2 = K/M is transparent
    CHECK(std::norm(single_wall_transmission(std::sqrt(3.0 / 0.7), 0.7, 3.0, m)) ==
          doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("chain transfer conserves flux and is blind to the empty chain") {
    MediumParams m;
    const auto c = four_walls();
    for (double w = 0.05; w < 30.0; w *= 1.37) {
        const auto r = chain_transfer(w, c, m);
        CHECK(std::norm(r.R) + std::norm(r.T) == doctest::Approx(1.0).epsilon(1e-12));
    }
    OscillatorChain none;
    CHECK(std::abs(chain_transfer(2.0, none, m).T - 1.0) == 0.0);
    CHECK_THROWS_AS(chain_transfer(0.0, c, m), ConfigError);
}

TEST_CASE("spectral average of a constant is that constant") {
    MediumParams m;
    Pulse p;
    p.width = 0.1;
    CHECK(spectral_transmission(p, m, [](double) { return 0.37; }) == doctest::Approx(0.37).epsilon(1e-14));
    // narrow band: the average sits on the carrier value
    const auto d = narrowband_packet(3.0, m, 0.0, 200.0);
    CHECK(d.pulse.support_hi() == doctest::Approx(0.0));
    const double avg = spectral_transmission(d.pulse, m, [](double w) { return w * w; });
    CHECK(avg == doctest::Approx(9.0).epsilon(1e-3));
}

TEST_CASE("finite chain: time domain against the frequency oracle") {
    MediumParams m;
    const auto c = light_walls();
    const auto d = packet(15.0, 0.3, -3.1);
    FiniteRunConfig cfg;
    cfg.chain = c;
    cfg.initial = d;
    cfg.dx = 1.0 / 1000.0;
    cfg.t_max = 8.0;
    cfg.monitor_every = 0;
    cfg.snapshot_every = 500;
    const auto tr = simulate(cfg);
    const auto r = reflect_transmit(tr, m, default_probes(1.0));
    const double T = spectral_transmission(d.pulse, m, [&](double w) { return std::norm(chain_transfer(w, c, m).T); });
    const double R = spectral_transmission(d.pulse, m, [&](double w) { return std::norm(chain_transfer(w, c, m).R); });
    CHECK(r.transmitted_fraction == doctest::Approx(T).epsilon(1e-3));
    CHECK(r.reflected_fraction == doctest::Approx(R).epsilon(1e-3));
    CHECK(r.closure <= 1e-6);
    CHECK(r.stored_fraction <= 1e-4);
}

TEST_CASE("effective slab: time domain against the frequency oracle") {
    MediumParams m;
    const auto prof = DensityProfile::constant(1.0, 1.0, 1.0);
    const Slab slab{2.0, 1.0, 1.0};
    const auto probes = default_probes(1.0);
    const auto d = narrowband_packet(1.5, m, probes.x_left, 5.0);
    EffectiveRunConfig cfg;
    cfg.profile = prof;
    cfg.initial = d;
    cfg.dx = 1.0 / 40.0;
    cfg.t_max = 16.0 * d.pulse.width + 10.0;
    cfg.snapshot_every = 100;
    cfg.energy_every = 0;
    const auto tr = simulate_effective(cfg);
    const auto r = reflect_transmit(tr, m, probes);
    const double T = spectral_transmission(d.pulse, m, [&](double w) { return std::norm(slab_transfer(w, slab, m).T); });
    CHECK(r.transmitted_fraction == doctest::Approx(T).epsilon(5e-3));
    CHECK(r.closure <= 1e-6);
    CHECK_FALSE(r.still_decaying);
}

TEST_CASE("stored energy decays with the horizon") {
    MediumParams m;
    const auto c = four_walls();
    InitialData d;
    d.pulse.center = -1.0;
    d.pulse.width = 0.05;
    double prev = 1.0;
    for (double t : {2.0, 4.0, 8.0}) {
        FiniteRunConfig cfg;
        cfg.chain = c;
        cfg.initial = d;
        cfg.dx = 1.0 / 400.0;
        cfg.t_max = t;
        cfg.monitor_every = 0;
        cfg.snapshot_every = 40;
        const auto r = reflect_transmit(simulate(cfg), m, default_probes(1.0));
        CHECK(r.stored_fraction < prev);
        CHECK(r.still_decaying);  // low frequencies ring in the cavities for a long time
        prev = r.stored_fraction;
    }
}

TEST_CASE("scatter input checks") {
    MediumParams m;
    InitialData d;
    d.pulse.center = -0.55;
    d.pulse.width = 0.005;
    FiniteRunConfig cfg;
    cfg.chain = four_walls();
    cfg.initial = d;
    cfg.dx = 1.0 / 400.0;
    cfg.t_max = 0.5;
    cfg.monitor_every = 0;
    const auto tr = simulate(cfg);
    CHECK_THROWS_AS(reflect_transmit(tr, m, default_probes(1.0)), ConfigError);
    CHECK_THROWS_AS(reflect_transmit(tr, m, ProbePlanes{-0.4, 0.6}), ConfigError);
    CHECK_THROWS_AS(reflect_transmit(tr, m, ProbePlanes{0.6, -0.6}), ConfigError);
}

TEST_CASE("reciprocity") {
    MediumParams m;
    InitialData d;
    d.pulse.center = -1.0;
    d.pulse.width = 0.05;
    SUBCASE("symmetric chain") {
        OscillatorChain c;
        c.s = {-0.25, 0.0, 0.25};
        c.M = {0.4, 0.2, 0.4};
        c.K = {2.0, 1.0, 2.0};
        const auto r = reciprocity(c, m, d, 1.0 / 800.0, 3.0);
        CHECK(r.difference() <= 1e-8);
    }
    SUBCASE("asymmetric chain") {
        const auto r = reciprocity(four_walls(), m, packet(15.0, 0.1, -1.5), 1.0 / 800.0, 4.0);
        CHECK(r.difference() <= 1e-6);
        CHECK(r.left_to_right > 0.01);
    }
}

TEST_CASE("band gap scan") {
    MediumParams m;
    const auto prof = DensityProfile::constant(1.0, 1.0, 1.0);
    std::vector<double> w;
    for (int i = 1; i <= 60; ++i) w.push_back(0.05 * i);
    const auto scan = bandgap_scan(prof, w, m);
    CHECK(scan.omega_c == doctest::Approx(std::sqrt(0.5)));
    CHECK(scan.monotone_below_cutoff);
    for (const auto& row : scan.rows) CHECK(row.T2 + row.R2 == doctest::Approx(1.0).epsilon(1e-12));
    // deep in the gap the decay exponent is proportional to the width
    const double r1 = gap_exponent_ratio(prof, 0.5 * scan.omega_c, m);
    const double r24 = gap_exponent_ratio(DensityProfile::constant(24.0, 1.0, 1.0), 0.5 * scan.omega_c, m);
    CHECK(r1 > 2.5);
    CHECK(std::abs(r24 - 2.0) < 0.02);
    CHECK_THROWS_AS(bandgap_scan(DensityProfile::table(1.0, {-0.5, 0.5}, {1.0, 2.0}, {1.0, 1.0}), w, m),
                    ConfigError);
}

TEST_CASE("static audit") {
    MediumParams m;
    const auto a = audit_static(four_walls(), m, 1.0 / 500.0);
    CHECK(a.basis_size == 3);
    CHECK(a.passed());
    OscillatorChain one;
    one.s = {0.0};
    one.M = {1.0};
    one.K = {1.0};
    const auto b = audit_static(one, m, 1.0 / 200.0);
    CHECK(b.basis_size == 0);
    CHECK(b.passed());
}
