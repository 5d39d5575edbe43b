#include "wallchain/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wallchain {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

void MediumParams::validate() const {
    require(rho0 > 0.0 && std::isfinite(rho0), "medium: rho0 > 0 violated");
    require(a > 0.0 && std::isfinite(a), "medium: a > 0 violated");
    require(S > 0.0 && std::isfinite(S), "medium: S > 0 violated");
}

void OscillatorChain::validate() const {
    require(L > 0.0, "chain: L > 0 violated");
    require(M.size() == s.size() && K.size() == s.size(),
            "chain: s, M and K must have equal lengths");
    const double tol = 1e-12 * L;
    for (std::size_t j = 0; j < s.size(); ++j) {
        std::ostringstream where;
        where << "chain[" << j << "]: ";
        require(std::abs(s[j] - center) <= 0.5 * L + tol,
                where.str() + "s_j in [center - L/2, center + L/2] violated");
        require(M[j] > 0.0, where.str() + "M_j > 0 violated");
        require(K[j] > 0.0, where.str() + "K_j > 0 violated");
        if (j > 0) require(s[j] > s[j - 1], where.str() + "s strictly increasing violated");
    }
}

UniformGrid UniformGrid::centered(double half_extent, double dx) {
    require(dx > 0.0, "grid: dx > 0 violated");
    require(half_extent > 0.0, "grid: extent > 0 violated");
    const auto m = static_cast<std::size_t>(std::ceil(half_extent / dx - 1e-9));
    UniformGrid g;
    g.dx = dx;
    g.x_min = -static_cast<double>(m) * dx;
    g.nodes = 2 * m + 1;
    return g;
}

std::vector<int> WallGrid::wall_map() const {
    std::vector<int> map(grid.nodes, -1);
    for (std::size_t j = 0; j < wall_nodes.size(); ++j) map[wall_nodes[j]] = static_cast<int>(j);
    return map;
}

void WallGrid::validate() const {
    require(grid.nodes >= 3, "grid: at least 3 nodes required");
    for (std::size_t j = 0; j < wall_nodes.size(); ++j) {
        require(wall_nodes[j] >= 1 && wall_nodes[j] + 1 < grid.nodes,
                "grid: wall nodes must be strictly interior");
        if (j > 0) require(wall_nodes[j] > wall_nodes[j - 1], "grid: wall nodes must increase");
    }
}

SnappedChain snap_chain(const OscillatorChain& chain, const UniformGrid& grid) {
    chain.validate();
    SnappedChain out;
    out.chain = chain;
    out.mesh.grid = grid;
    for (std::size_t j = 0; j < chain.size(); ++j) {
        const double r = std::round((chain.s[j] - grid.x_min) / grid.dx);
        require(r >= 1.0 && r + 2.0 <= static_cast<double>(grid.nodes),
                "grid: wall " + std::to_string(j) + " does not fall strictly inside the grid");
        const auto node = static_cast<std::size_t>(r);
        if (!out.mesh.wall_nodes.empty() && node <= out.mesh.wall_nodes.back()) {
            throw ConfigError("grid: walls " + std::to_string(j - 1) + " and " +
                              std::to_string(j) +
                              " snap to the same node; refine dx below the minimum wall spacing");
        }
        out.mesh.wall_nodes.push_back(node);
        out.chain.s[j] = grid.x(node);
        out.offsets.push_back(out.chain.s[j] - chain.s[j]);
    }
    return out;
}

PhysicalState PhysicalState::zeros(const WallGrid& mesh) {
    PhysicalState s;
    s.mesh = mesh;
    const std::size_t n = mesh.wall_nodes.size();
    s.p.assign(mesh.grid.nodes, 0.0);
    s.v.assign(mesh.grid.nodes, 0.0);
    s.p_left.assign(n, 0.0);
    s.p_right.assign(n, 0.0);
    s.y.assign(n, 0.0);
    s.z.assign(n, 0.0);
    return s;
}

void PhysicalState::check_shape() const {
    const std::size_t n = mesh.wall_nodes.size();
    require(p.size() == mesh.grid.nodes && v.size() == mesh.grid.nodes,
            "state: field length differs from grid node count");
    require(p_left.size() == n && p_right.size() == n && y.size() == n && z.size() == n,
            "state: per-wall arrays differ from wall count");
}

FiniteState FiniteState::zeros(const WallGrid& mesh) {
    FiniteState s;
    s.mesh = mesh;
    s.wplus.assign(mesh.grid.nodes, 0.0);
    s.wminus.assign(mesh.grid.nodes, 0.0);
    s.y.assign(mesh.wall_nodes.size(), 0.0);
    s.z.assign(mesh.wall_nodes.size(), 0.0);
    return s;
}

void FiniteState::check_shape() const {
    require(wplus.size() == mesh.grid.nodes && wminus.size() == mesh.grid.nodes,
            "state: characteristic length differs from grid node count");
    require(y.size() == mesh.wall_nodes.size() && z.size() == mesh.wall_nodes.size(),
            "state: per-wall arrays differ from wall count");
}

PhysicalState to_physical(const FiniteState& state, const MediumParams& medium) {
    state.check_shape();
    const double Z = medium.impedance();
    PhysicalState out = PhysicalState::zeros(state.mesh);
    out.t = state.t;
    out.y = state.y;
    out.z = state.z;
    for (std::size_t i = 0; i < state.mesh.grid.nodes; ++i) {
        out.p[i] = 0.5 * (state.wplus[i] + state.wminus[i]);
        out.v[i] = 0.5 * (state.wplus[i] - state.wminus[i]) / Z;
    }
    for (std::size_t j = 0; j < state.mesh.wall_nodes.size(); ++j) {
        const std::size_t k = state.mesh.wall_nodes[j];
        out.p_left[j] = state.wplus[k] - Z * state.z[j];
        out.p_right[j] = state.wminus[k] + Z * state.z[j];
        out.p[k] = 0.5 * (out.p_left[j] + out.p_right[j]);
        out.v[k] = state.z[j];
    }
    return out;
}

FiniteState to_characteristic(const PhysicalState& state, const MediumParams& medium) {
    state.check_shape();
    const double Z = medium.impedance();
    FiniteState out = FiniteState::zeros(state.mesh);
    out.t = state.t;
    out.y = state.y;
    out.z = state.z;
    for (std::size_t i = 0; i < state.mesh.grid.nodes; ++i) {
        out.wplus[i] = state.p[i] + Z * state.v[i];
        out.wminus[i] = state.p[i] - Z * state.v[i];
    }
    for (std::size_t j = 0; j < state.mesh.wall_nodes.size(); ++j) {
        const std::size_t k = state.mesh.wall_nodes[j];
        out.wplus[k] = state.p_left[j] + Z * state.z[j];
        out.wminus[k] = state.p_right[j] - Z * state.z[j];
    }
    return out;
}

double trapezoid(const UniformGrid& grid, std::span<const double> f) {
    require(f.size() == grid.nodes, "quadrature: sample count differs from grid");
    if (f.size() < 2) return 0.0;
    double sum = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) sum += f[i];
    return sum * grid.dx;
}

namespace {

void check_chain_matches(const WallGrid& mesh, const OscillatorChain& chain) {
    require(chain.size() == mesh.wall_nodes.size(),
            "state: wall count differs from chain size");
    for (std::size_t j = 0; j < chain.size(); ++j) {
        const double x = mesh.grid.x(mesh.wall_nodes[j]);
        require(std::abs(x - chain.s[j]) <= 1e-9 * mesh.grid.dx,
                "state: wall " + std::to_string(j) + " is not on a grid node");
    }
}

// Per-node products f*g, with wall nodes averaging the one-sided p products.
std::vector<double> pressure_products(const PhysicalState& a, const PhysicalState& b) {
    std::vector<double> prod(a.p.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = a.p[i] * b.p[i];
    for (std::size_t j = 0; j < a.mesh.wall_nodes.size(); ++j) {
        prod[a.mesh.wall_nodes[j]] =
            0.5 * (a.p_left[j] * b.p_left[j] + a.p_right[j] * b.p_right[j]);
    }
    return prod;
}

std::vector<double> velocity_products(const PhysicalState& a, const PhysicalState& b) {
    std::vector<double> prod(a.v.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = a.v[i] * b.v[i];
    return prod;
}

}  // namespace

EnergyBreakdown energy(const PhysicalState& state, const MediumParams& medium,
                       const OscillatorChain& chain) {
    state.check_shape();
    check_chain_matches(state.mesh, chain);
    const double pp = trapezoid(state.mesh.grid, pressure_products(state, state));
    const double vv = trapezoid(state.mesh.grid, velocity_products(state, state));
    EnergyBreakdown e;
    e.e_ac = medium.S / (2.0 * medium.a * medium.a * medium.rho0) * pp +
             0.5 * medium.S * medium.rho0 * vv;
    for (std::size_t j = 0; j < chain.size(); ++j) {
        e.e_osc += 0.5 * chain.K[j] * state.y[j] * state.y[j] +
                   0.5 * chain.M[j] * state.z[j] * state.z[j];
    }
    e.e_tot = e.e_ac + e.e_osc;
    return e;
}

EnergyBreakdown energy(const FiniteState& state, const MediumParams& medium,
                       const OscillatorChain& chain) {
    return energy(to_physical(state, medium), medium, chain);
}

double field_energy_in(const PhysicalState& state, const MediumParams& medium, double x_lo,
                       double x_hi) {
    state.check_shape();
    const auto& g = state.mesh.grid;
    const double cp = medium.S / (2.0 * medium.a * medium.a * medium.rho0);
    const double cv = 0.5 * medium.S * medium.rho0;
    std::vector<double> right(g.nodes), left(g.nodes);  // density seen from each side
    for (std::size_t i = 0; i < g.nodes; ++i) {
        right[i] = left[i] = cp * state.p[i] * state.p[i] + cv * state.v[i] * state.v[i];
    }
    for (std::size_t j = 0; j < state.mesh.wall_nodes.size(); ++j) {
        const std::size_t k = state.mesh.wall_nodes[j];
        const double vv = cv * state.v[k] * state.v[k];
        left[k] = cp * state.p_left[j] * state.p_left[j] + vv;
        right[k] = cp * state.p_right[j] * state.p_right[j] + vv;
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < g.nodes; ++i) {
        const double xa = g.x(i), xb = g.x(i + 1);
        const double lo = std::max(xa, x_lo), hi = std::min(xb, x_hi);
        if (hi <= lo) continue;
        const double ea = right[i], eb = left[i + 1];
        const double fa = ea + (eb - ea) * (lo - xa) / g.dx;
        const double fb = ea + (eb - ea) * (hi - xa) / g.dx;
        total += 0.5 * (fa + fb) * (hi - lo);
    }
    return total;
}

double inner_product(const PhysicalState& psi1, const PhysicalState& psi2,
                     const MediumParams& medium, const OscillatorChain& chain) {
    psi1.check_shape();
    psi2.check_shape();
    require(psi1.mesh.grid.nodes == psi2.mesh.grid.nodes &&
                psi1.mesh.grid.dx == psi2.mesh.grid.dx &&
                psi1.mesh.grid.x_min == psi2.mesh.grid.x_min &&
                psi1.mesh.wall_nodes == psi2.mesh.wall_nodes,
            "inner product: states live on different grids");
    check_chain_matches(psi1.mesh, chain);
    const double pp = trapezoid(psi1.mesh.grid, pressure_products(psi1, psi2));
    const double vv = trapezoid(psi1.mesh.grid, velocity_products(psi1, psi2));
    double osc = 0.0;
    for (std::size_t j = 0; j < chain.size(); ++j) {
        osc += chain.K[j] * psi1.y[j] * psi2.y[j] + chain.M[j] * psi1.z[j] * psi2.z[j];
    }
    return pp / (medium.a * medium.a * medium.rho0) + medium.rho0 * vv + osc / medium.S;
}

double state_norm(const PhysicalState& psi, const MediumParams& medium,
                  const OscillatorChain& chain) {
    return std::sqrt(std::max(0.0, inner_product(psi, psi, medium, chain)));
}

std::vector<double> regular_part(const UniformGrid& grid, std::span<const double> p,
                                 const JumpRegistry& registry, const OscillatorChain& chain) {
    require(p.size() == grid.nodes, "regular part: sample count differs from grid");
    require(registry.sigma.size() == chain.size(), "regular part: one sigma per wall required");
    std::vector<double> out(p.begin(), p.end());
    for (std::size_t i = 0; i < grid.nodes; ++i) {
        const double x = grid.x(i);
        double jump = 0.0;
        for (std::size_t j = 0; j < chain.size(); ++j) {
            const double d = x - chain.s[j];
            // a wall within rounding of a node sits on it
            jump += registry.sigma[j] * (std::abs(d) <= 1e-9 * grid.dx ? 0.0 : sgn(d));
        }
        out[i] -= 0.5 * jump;
    }
    return out;
}

std::vector<double> regular_part(const PhysicalState& state, const JumpRegistry& registry,
                                 const OscillatorChain& chain) {
    state.check_shape();
    check_chain_matches(state.mesh, chain);
    return regular_part(state.mesh.grid, state.p, registry, chain);
}

namespace detail {

SegmentDerivative segment_derivative(const WallGrid& mesh, std::span<const double> f,
                                     std::span<const double> left,
                                     std::span<const double> right) {
    const std::size_t N = mesh.grid.nodes;
    const std::size_t n = mesh.wall_nodes.size();
    require(f.size() == N && left.size() == n && right.size() == n,
            "derivative: inconsistent sample lengths");
    SegmentDerivative out;
    out.d.assign(N, 0.0);
    out.d_left.assign(n, 0.0);
    out.d_right.assign(n, 0.0);
    const double h = mesh.grid.dx;

    // Segment boundaries: 0, wall nodes, N-1.
    std::vector<std::size_t> bounds{0};
    for (auto k : mesh.wall_nodes) bounds.push_back(k);
    bounds.push_back(N - 1);

    std::vector<double> seg;
    for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
        const std::size_t b0 = bounds[s], b1 = bounds[s + 1];
        const std::size_t m = b1 - b0 + 1;
        seg.assign(f.begin() + static_cast<std::ptrdiff_t>(b0),
                   f.begin() + static_cast<std::ptrdiff_t>(b1) + 1);
        const bool wall_lo = s > 0;
        const bool wall_hi = s + 2 < bounds.size();
        if (wall_lo) seg.front() = right[s - 1];
        if (wall_hi) seg.back() = left[s];

        std::vector<double> d(m, 0.0);
        if (m == 2) {
            d[0] = d[1] = (seg[1] - seg[0]) / h;
        } else if (m >= 3) {
            for (std::size_t i = 1; i + 1 < m; ++i) d[i] = (seg[i + 1] - seg[i - 1]) / (2.0 * h);
            d[0] = (-3.0 * seg[0] + 4.0 * seg[1] - seg[2]) / (2.0 * h);
            d[m - 1] = (3.0 * seg[m - 1] - 4.0 * seg[m - 2] + seg[m - 3]) / (2.0 * h);
        }
        for (std::size_t i = 0; i < m; ++i) {
            if ((i == 0 && wall_lo) || (i + 1 == m && wall_hi)) continue;
            out.d[b0 + i] = d[i];
        }
        if (wall_lo) out.d_right[s - 1] = d.front();
        if (wall_hi) out.d_left[s] = d.back();
    }
    for (std::size_t j = 0; j < n; ++j) {
        out.d[mesh.wall_nodes[j]] = 0.5 * (out.d_left[j] + out.d_right[j]);
    }
    return out;
}

}  // namespace detail

JumpRegistry extract_jumps(const PhysicalState& state, const OscillatorChain& chain) {
    state.check_shape();
    check_chain_matches(state.mesh, chain);
    const std::size_t n = chain.size();
    JumpRegistry reg;
    reg.sigma.resize(n);
    std::vector<double> vw(n);
    for (std::size_t j = 0; j < n; ++j) {
        reg.sigma[j] = state.p_right[j] - state.p_left[j];
        vw[j] = state.v[state.mesh.wall_nodes[j]];
    }
    const auto dv = detail::segment_derivative(state.mesh, state.v, vw, vw);
    reg.zeta.resize(n);
    for (std::size_t j = 0; j < n; ++j) reg.zeta[j] = dv.d_right[j] - dv.d_left[j];
    return reg;
}

GeneratorImage apply_generator(const PhysicalState& state, const MediumParams& medium,
                               const OscillatorChain& chain) {
    state.check_shape();
    check_chain_matches(state.mesh, chain);
    const std::size_t n = chain.size();
    const double a2rho = medium.a * medium.a * medium.rho0;

    GeneratorImage out;
    out.image = PhysicalState::zeros(state.mesh);
    out.image.t = state.t;
    auto& img = out.image;

    std::vector<double> vw(n);
    for (std::size_t j = 0; j < n; ++j) {
        vw[j] = state.v[state.mesh.wall_nodes[j]];
        out.domain_residual = std::max(out.domain_residual, std::abs(vw[j] - state.z[j]));
    }
    const auto dv = detail::segment_derivative(state.mesh, state.v, vw, vw);
    for (std::size_t i = 0; i < img.p.size(); ++i) img.p[i] = -a2rho * dv.d[i];
    for (std::size_t j = 0; j < n; ++j) {
        img.p_left[j] = -a2rho * dv.d_left[j];
        img.p_right[j] = -a2rho * dv.d_right[j];
        img.p[state.mesh.wall_nodes[j]] = 0.5 * (img.p_left[j] + img.p_right[j]);
    }

    // The sgn terms of p_reg are constant on every segment, so the one-sided
    // derivatives of p are those of p_reg.
    const auto dp = detail::segment_derivative(state.mesh, state.p, state.p_left, state.p_right);
    for (std::size_t i = 0; i < img.v.size(); ++i) img.v[i] = -dp.d[i] / medium.rho0;

    for (std::size_t j = 0; j < n; ++j) {
        const double sigma = state.p_right[j] - state.p_left[j];
        img.y[j] = state.z[j];
        img.z[j] = -(chain.K[j] / chain.M[j] * state.y[j] + medium.S / chain.M[j] * sigma);
    }
    return out;
}

PhysicalState static_solution(const OscillatorChain& chain, const MediumParams& medium,
                              const WallGrid& mesh, std::span<const double> levels) {
    check_chain_matches(mesh, chain);
    const std::size_t n = chain.size();
    const std::size_t expected = n == 0 ? 0 : n - 1;
    require(levels.size() == expected, "static solution: need exactly n-1 plateau levels");
    PhysicalState st = PhysicalState::zeros(mesh);
    auto level_between = [&](std::size_t seg) {  // seg 0: left of wall 0, seg n: right of last
        return (seg == 0 || seg == n) ? 0.0 : levels[seg - 1];
    };
    std::size_t seg = 0;
    for (std::size_t i = 0; i < mesh.grid.nodes; ++i) {
        if (seg < n && i == mesh.wall_nodes[seg]) {
            st.p_left[seg] = level_between(seg);
            st.p_right[seg] = level_between(seg + 1);
            st.p[i] = 0.5 * (st.p_left[seg] + st.p_right[seg]);
            ++seg;
            continue;
        }
        st.p[i] = level_between(seg);
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double sigma = st.p_right[j] - st.p_left[j];
        st.y[j] = -medium.S * sigma / chain.K[j];
    }
    return st;
}

std::vector<PhysicalState> static_basis(const OscillatorChain& chain, const MediumParams& medium,
                                        const WallGrid& mesh) {
    std::vector<PhysicalState> basis;
    if (chain.size() < 2) return basis;
    std::vector<double> levels(chain.size() - 1, 0.0);
    for (std::size_t k = 0; k < levels.size(); ++k) {
        std::fill(levels.begin(), levels.end(), 0.0);
        levels[k] = 1.0;
        basis.push_back(static_solution(chain, medium, mesh, levels));
    }
    return basis;
}

}  // namespace wallchain
