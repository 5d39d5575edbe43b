#include "wallchain/batteries.hpp"

#include <algorithm>
#include <cmath>

namespace wallchain {

ChainSetup random_chain_setup(std::size_t n, double L, double dx, const MediumParams& medium,
                              std::mt19937_64& rng, bool fixed_positions) {
    std::uniform_real_distribution<double> mk(0.5, 2.0);
    std::uniform_real_distribution<double> pos(-0.5 * L, 0.5 * L);
    OscillatorChain chain;
    chain.L = L;
    if (fixed_positions) {
        for (std::size_t j = 0; j < n; ++j) {
            chain.s.push_back(-0.5 * L + L * static_cast<double>(j + 1) / static_cast<double>(n + 1));
        }
    } else {
        // Rejection sampling keeps walls at least 3 cells apart.
        while (chain.s.size() < n) {
            const double s = pos(rng);
            bool ok = true;
            for (double t : chain.s) ok = ok && std::abs(t - s) > 3.0 * dx;
            if (ok) chain.s.push_back(s);
        }
        std::sort(chain.s.begin(), chain.s.end());
    }
    for (std::size_t j = 0; j < n; ++j) {
        chain.M.push_back(mk(rng));
        chain.K.push_back(mk(rng));
    }
    medium.validate();
    auto snapped = snap_chain(chain, UniformGrid::centered(L, dx));
    return {snapped.chain, snapped.mesh};
}

namespace {

struct Smooth {
    double c[3], k[3], ph[3];

    static Smooth draw(std::mt19937_64& rng, double L) {
        std::uniform_real_distribution<double> amp(-1.0, 1.0);
        std::uniform_real_distribution<double> wave(0.5, 6.0);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
        Smooth s;
        for (int i = 0; i < 3; ++i) {
            s.c[i] = amp(rng);
            s.k[i] = wave(rng) / L;
            s.ph[i] = phase(rng);
        }
        return s;
    }
    double operator()(double x) const {
        double f = 0.0;
        for (int i = 0; i < 3; ++i) f += c[i] * std::sin(k[i] * x + ph[i]);
        return f;
    }
};

}  // namespace

PhysicalState random_compatible_state(const ChainSetup& setup, const MediumParams& medium,
                                      std::mt19937_64& rng) {
    const auto& g = setup.mesh.grid;
    const std::size_t n = setup.chain.size();
    const double X = -g.x_min;
    const double L = setup.chain.L;
    std::uniform_real_distribution<double> amp(-1.0, 1.0);

    const Smooth fp = Smooth::draw(rng, L);
    const Smooth fv = Smooth::draw(rng, L);
    std::vector<double> jump(n);
    for (auto& j : jump) j = amp(rng);
    std::vector<double> ys(n);
    for (auto& y : ys) y = amp(rng);

    auto window = [&](double x) {
        const double u = x / X;
        const double w = 1.0 - u * u;
        return w * w * w;
    };
    // Pressure with jumps jump_j * window(s_j) at wall j.
    auto pressure = [&](double x, int side_of_wall, std::size_t wall) {
        double steps = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double s = setup.chain.s[j];
            if (j == wall) {
                if (side_of_wall > 0) steps += jump[j];
            } else if (x > s) {
                steps += jump[j];
            }
        }
        return (fp(x) + steps) * window(x);
    };
    const double pv_scale = 1.0 / medium.impedance();

    PhysicalState st = PhysicalState::zeros(setup.mesh);
    const auto map = setup.mesh.wall_map();
    for (std::size_t i = 0; i < g.nodes; ++i) {
        const double x = g.x(i);
        st.v[i] = pv_scale * fv(x) * window(x);
        if (map[i] >= 0) {
            const auto j = static_cast<std::size_t>(map[i]);
            st.p_left[j] = pressure(x, -1, j);
            st.p_right[j] = pressure(x, +1, j);
            st.p[i] = 0.5 * (st.p_left[j] + st.p_right[j]);
            st.z[j] = st.v[i];
        } else {
            st.p[i] = pressure(x, 0, n);
        }
    }
    for (std::size_t j = 0; j < n; ++j) st.y[j] = ys[j];
    return st;
}

double skew_defect(const PhysicalState& psi1, const PhysicalState& psi2,
                   const MediumParams& medium, const OscillatorChain& chain) {
    const auto a1 = apply_generator(psi1, medium, chain).image;
    const auto a2 = apply_generator(psi2, medium, chain).image;
    const double s = inner_product(psi1, a2, medium, chain) + inner_product(a1, psi2, medium, chain);
    return std::abs(s) / (state_norm(psi1, medium, chain) * state_norm(psi2, medium, chain));
}

}  // namespace wallchain
