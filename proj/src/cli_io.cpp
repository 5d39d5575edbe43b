#include "wallchain/cli_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "json.hpp"
#include "wallchain/finite_sim.hpp"
#include "wallchain/scattering_analysis.hpp"
#include "wallchain/version.hpp"

namespace wallchain {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int schema_version = 1;

// ---------------------------------------------------------------- reading

struct ParseContext {
    bool permissive = false;
    std::vector<std::string>* warnings = nullptr;
};

class Section {
public:
    Section(const json& j, std::string path, ParseContext& ctx) : j_(j), path_(std::move(path)), ctx_(ctx) {
        if (!j_.is_object()) fail("", "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }


    double number(const std::string& key, double def) {
        used_.insert(key);
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_number()) fail(key, "expected a number");
        return v.get<double>();
    }

    std::size_t count(const std::string& key, std::size_t def) {
        used_.insert(key);
        if (!has(key)) return def;
        return as_count(j_.at(key), key);
    }

    std::string text(const std::string& key, const std::string& def) {
        used_.insert(key);
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_string()) fail(key, "expected a string");
        return v.get<std::string>();
    }

    bool flag(const std::string& key, bool def) {
        used_.insert(key);
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) fail(key, "expected true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(const std::string& key) {
        used_.insert(key);
        std::vector<double> out;
        if (!has(key)) return out;
        const auto& v = j_.at(key);
        if (!v.is_array()) fail(key, "expected an array of numbers");
        for (const auto& e : v) {
            if (!e.is_number()) fail(key, "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::size_t> counts(const std::string& key) {
        used_.insert(key);
        std::vector<std::size_t> out;
        if (!has(key)) return out;
        const auto& v = j_.at(key);
        if (!v.is_array()) fail(key, "expected an array of non-negative integers");
        for (const auto& e : v) out.push_back(as_count(e, key));
        return out;
    }

    Section sub(const std::string& key) {
        used_.insert(key);
        return Section(j_.at(key), name(key), ctx_);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (used_.count(it.key())) continue;
            const std::string msg = "config: unknown key '" + name(it.key()) + "'";
            if (!ctx_.permissive) throw ConfigError(msg);
            if (ctx_.warnings) ctx_.warnings->push_back(msg);
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError("config: key '" + name(key) + "': " + what);
    }

    std::string name(const std::string& key) const {
        if (path_.empty()) return key;
        return key.empty() ? path_ : path_ + "." + key;
    }

private:
    std::size_t as_count(const json& v, const std::string& key) const {
        if (v.is_number_unsigned()) return v.get<std::size_t>();
        if (v.is_number_integer()) {
            if (v.get<long long>() < 0) fail(key, "must be >= 0");
            return static_cast<std::size_t>(v.get<long long>());
        }
        fail(key, "expected a non-negative integer");
    }

    const json& j_;
    std::string path_;
    ParseContext& ctx_;
    std::set<std::string> used_;
};

// Runs a validator and tags its message with the config section.
template <class F>
void checked(const std::string& section, F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind("config:", 0) == 0) throw;
        const std::string own = section + ": ";
        const std::string rest = msg.rfind(own, 0) == 0 ? msg.substr(own.size()) : msg;
        throw ConfigError("config: key '" + section + "': " + rest);
    }
}

// ---------------------------------------------------------------- writing

void dump(const json& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string pad_in(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in + json(it.key()).dump() + ": ";
                dump(it.value(), out, indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                out += pad_in;
                dump(j[i], out, indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case json::value_t::number_float: {
            const double x = j.get<double>();
            out += std::isfinite(x) ? format_double(x) : "null";
            return;
        }
        default:
            out += j.dump();
    }
}

std::string dump(const json& j) {
    std::string out;
    dump(j, out, 0);
    out += "\n";
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SimulationError("output: cannot open " + path.string());
    f << text;
    if (!f) throw SimulationError("output: write failed for " + path.string());
}

class Csv {
public:
    Csv(const fs::path& path, const std::vector<std::string>& header) : f_(path, std::ios::binary) {
        if (!f_) throw SimulationError("output: cannot open " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) buf_ += ',';
            buf_ += header[i];
        }
        buf_ += '\n';
    }

    Csv& operator<<(double x) {
        sep();
        buf_ += format_double(x);
        return *this;
    }
    Csv& operator<<(std::size_t n) {
        sep();
        buf_ += std::to_string(n);
        return *this;
    }
    void end() {
        buf_ += '\n';
        fresh_ = true;
        if (buf_.size() > (1u << 20)) flush();
    }
    void close() {
        flush();
        f_.close();
        if (!f_) throw SimulationError("output: write failed");
    }

private:
    void sep() {
        if (!fresh_) buf_ += ',';
        fresh_ = false;
    }
    void flush() {
        f_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        buf_.clear();
    }

    std::ofstream f_;
    std::string buf_;
    bool fresh_ = true;
};

json to_json(const MediumParams& m) { return {{"rho0", m.rho0}, {"a", m.a}, {"S", m.S}}; }

json to_json(const OscillatorChain& c) {
    return {{"L", c.L}, {"center", c.center}, {"s", c.s}, {"M", c.M}, {"K", c.K}};
}

json to_json(const DensityProfile& p) {
    json j = {{"L", p.L()}, {"center", p.center()}};
    if (p.kind() == DensityProfile::Kind::constant) {
        j["kind"] = "constant";
        j["rho_M"] = p.rho_M_values().front();
        j["rho_K"] = p.rho_K_values().front();
    } else {
        j["kind"] = "table";
        j["x"] = p.breakpoints();
        j["rho_M"] = p.rho_M_values();
        j["rho_K"] = p.rho_K_values();
    }
    return j;
}

json to_json(const InitialData& d) {
    return {{"shape", to_string(d.pulse.shape)},   {"center", d.pulse.center},
            {"width", d.pulse.width},              {"amplitude", d.pulse.amplitude},
            {"wavenumber", d.pulse.wavenumber},    {"phase", d.pulse.phase},
            {"linkage", to_string(d.linkage)}};
}

json to_json(const BoundMonitor& b) {
    auto e = [](const BoundMonitor::Entry& x) { return json{{"bound", x.bound}, {"max", x.max_value}}; };
    return {{"v_h1", e(b.v_h1)},         {"vdot_h1", e(b.vdot_h1)}, {"kinetic", e(b.kinetic)},
            {"wall_accel", e(b.wall_accel)}, {"vx_reg_h1", e(b.vx_reg_h1)}, {"samples", b.samples}};
}

json to_json(const ErrorTriple& e) {
    return {{"sup_v", e.sup_v}, {"sup_vt", e.sup_vt}, {"l2_vx", e.l2_vx}};
}

json to_json(const ScatterResult& r) {
    return {{"incident", r.incident},
            {"reflected", r.reflected},
            {"transmitted", r.transmitted},
            {"stored", r.stored},
            {"reflected_fraction", r.reflected_fraction},
            {"transmitted_fraction", r.transmitted_fraction},
            {"stored_fraction", r.stored_fraction},
            {"closure", r.closure},
            {"still_decaying", r.still_decaying}};
}

json grid_json(const UniformGrid& g, double dt) {
    return {{"dx", g.dx}, {"dt", dt}, {"nodes", g.nodes}, {"x_min", g.x_min}, {"x_max", g.x_max()}};
}

json base_report(const RunConfig& c) {
    return {{"schema_version", schema_version}, {"experiment", to_string(c.experiment)}};
}

// ---------------------------------------------------------------- experiments

struct Outputs {
    fs::path dir;
    json report;
    json metadata_extra = json::object();
};

void finite_outputs(const RunConfig& c, Outputs& o) {
    const auto chain = c.resolved_chain();
    const double dx = c.grid.resolve_dx(c.length());
    FiniteRunConfig cfg;
    cfg.medium = c.medium;
    cfg.chain = chain;
    cfg.initial = c.initial;
    cfg.dx = dx;
    cfg.t_max = c.grid.t_max;
    cfg.half_extent = c.grid.half_extent;
    cfg.snapshot_every = c.grid.snapshot_every;

    Csv traj(o.dir / "trajectory.csv", {"t[s]", "x[m]", "v[m/s]", "p_minus[Pa]", "p_plus[Pa]"});
    Csv walls(o.dir / "walls.csv", {"t[s]", "j", "s_j[m]", "y[m]", "z[m/s]"});
    cfg.observer = [&](std::size_t, const PhysicalState& st, const std::vector<double>&) {
        const auto& g = st.mesh.grid;
        std::size_t next_wall = 0;
        for (std::size_t i = 0; i < g.nodes; ++i) {
            double pm = st.p[i], pp = st.p[i];
            if (next_wall < st.mesh.wall_nodes.size() && st.mesh.wall_nodes[next_wall] == i) {
                pm = st.p_left[next_wall];
                pp = st.p_right[next_wall];
                ++next_wall;
            }
            traj << st.t << g.x(i) << st.v[i] << pm << pp;
            traj.end();
        }
        for (std::size_t j = 0; j < st.y.size(); ++j) {
            walls << st.t << j << g.x(st.mesh.wall_nodes[j]) << st.y[j] << st.z[j];
            walls.end();
        }
    };
    const auto tr = simulate(cfg);
    traj.close();
    walls.close();

    Csv en(o.dir / "energy.csv", {"t[s]", "e_ac[J]", "e_osc[J]", "e_tot[J]"});
    for (std::size_t k = 0; k < tr.energy.size(); ++k) {
        en << tr.energy_times[k] << tr.energy[k].e_ac << tr.energy[k].e_osc << tr.energy[k].e_tot;
        en.end();
    }
    en.close();

    o.report["grid"] = grid_json(tr.grid.mesh.grid, tr.grid.dt);
    o.report["steps"] = tr.steps;
    o.report["walls"] = tr.chain.size();
    o.report["max_interface_residual"] = tr.max_residual();
    o.report["energy_drift"] = tr.max_relative_drift();
    o.report["edge_reached"] = tr.edge_reached;
    o.report["max_edge_outflow"] = tr.max_edge_outflow;
    o.report["bounds"] = to_json(tr.bounds);
    o.metadata_extra["grid"] = grid_json(tr.grid.mesh.grid, tr.grid.dt);
    o.metadata_extra["snap_offsets"] = tr.grid.snap_offsets;
    o.metadata_extra["snapped_chain"] = to_json(tr.chain);
}

std::optional<Slab> constant_slab(const DensityProfile& p, const MediumParams& m) {
    if (p.kind() != DensityProfile::Kind::constant) return std::nullopt;
    return Slab{1.0 + p.rho_M_values().front() / m.rho0, p.rho_K_values().front() / m.rho0, p.L()};
}

void effective_outputs(const RunConfig& c, Outputs& o) {
    const auto& prof = *c.profile;
    EffectiveRunConfig cfg;
    cfg.medium = c.medium;
    cfg.profile = prof;
    cfg.initial = c.initial;
    cfg.dx = c.grid.resolve_dx(c.length());
    cfg.dt = c.grid.dt;
    cfg.t_max = c.grid.t_max;
    cfg.half_extent = c.grid.half_extent;
    cfg.snapshot_every = c.grid.snapshot_every;

    Csv traj(o.dir / "trajectory.csv", {"t[s]", "x[m]", "v[m/s]", "v_t[m/s^2]"});
    cfg.observer = [&](std::size_t, const EffectiveState& st) {
        for (std::size_t i = 0; i < st.grid.nodes; ++i) {
            traj << st.t << st.grid.x(i) << st.v[i] << st.vdot[i];
            traj.end();
        }
    };
    const auto tr = simulate_effective(cfg);
    traj.close();

    Csv en(o.dir / "energy.csv", {"t[s]", "e_eff[m^3/s^4]"});
    for (std::size_t k = 0; k < tr.energy.size(); ++k) {
        en << tr.energy_times[k] << tr.energy[k];
        en.end();
    }
    en.close();

    o.report["grid"] = grid_json(tr.coeffs.grid, tr.dt);
    o.report["steps"] = tr.steps;
    o.report["energy_drift"] = tr.max_relative_drift();
    if (const auto slab = constant_slab(prof, c.medium)) {
        o.report["cutoff_frequency"] = cutoff_frequency(prof, c.medium);
        if (c.initial.pulse.shape == PulseShape::wavepacket) {
            const double w0 = c.medium.a * c.initial.pulse.wavenumber;
            const auto r = slab_transfer(w0, *slab, c.medium);
            o.report["slab"] = {{"omega", w0}, {"T2", std::norm(r.T)}, {"R2", std::norm(r.R)}};
        }
    }
    o.metadata_extra["grid"] = grid_json(tr.coeffs.grid, tr.dt);
}

void converge_outputs(const RunConfig& c, Outputs& o, unsigned jobs) {
    ChainSequencePlan plan;
    plan.profile = *c.profile;
    plan.n_values = c.converge.n_values;
    plan.rule = c.rule;
    plan.medium = c.medium;
    const auto rep = convergence_study(plan, c.initial, c.converge.rect, c.converge.policy, jobs);

    Csv csv(o.dir / "convergence.csv",
            {"n", "walls", "sup_v[m/s]", "sup_vt[m/s^2]", "l2_vx[m^0.5/s]", "max_residual[m/s]",
             "energy_drift[-]", "max_snap_offset[m]", "static_overlap[-]"});
    json rows = json::array();
    for (const auto& r : rep.rows) {
        csv << r.n << r.walls << r.error.sup_v << r.error.sup_vt << r.error.l2_vx << r.max_residual
            << r.energy_drift << r.max_snap_offset << r.static_overlap;
        csv.end();
        rows.push_back({{"n", r.n},
                        {"walls", r.walls},
                        {"error", to_json(r.error)},
                        {"max_residual", r.max_residual},
                        {"energy_drift", r.energy_drift},
                        {"max_snap_offset", r.max_snap_offset},
                        {"static_overlap", r.static_overlap},
                        {"bounds", to_json(r.bounds)},
                        {"edge_reached", r.edge_reached}});
    }
    csv.close();

    std::vector<OscillatorChain> chains;
    for (std::size_t n : plan.n_values) chains.push_back(discretize_densities(plan.profile, n, c.medium, c.rule));
    const auto [rmin, rmax] = plan.profile.ratio_range(c.medium.a);
    double total = 0.0;
    for (const auto& ch : chains) {
        double M = 0.0, K = 0.0;
        for (std::size_t j = 0; j < ch.size(); ++j) {
            M += ch.M[j];
            K += ch.K[j];
        }
        total = std::max({total, M, K});
    }
    // Constants with a factor-2 margin around what the profile itself gives.
    const auto ass = verify_assumptions(chains, plan.profile, c.medium, 0.5 * rmin, 2.0 * rmax, 2.0 * total);

    json ratios = json::array();
    for (const auto& r : rep.ratios) ratios.push_back(to_json(r));
    o.report["rows"] = rows;
    o.report["ratios"] = ratios;
    o.report["reference_floor"] = to_json(rep.reference_floor);
    o.report["strictly_decreasing"] = rep.strictly_decreasing;
    o.report["end_ratio"] = rep.end_ratio;
    o.report["bounds_ok"] = rep.bounds_ok();
    o.report["passed"] = rep.passed();
    o.report["dx_finite"] = rep.dx_finite;
    o.report["dx_reference"] = rep.dx_reference;
    o.report["dt_reference"] = rep.dt_reference;
    o.report["error_families"] = error_family_names;
    o.report["assumptions"] = {{"all_ok", ass.all_ok}, {"weak_decreasing", ass.weak_decreasing},
                               {"issues", ass.issues}};
}

void scatter_outputs(const RunConfig& c, Outputs& o) {
    ProbePlanes probes = default_probes(c.length(), c.center());
    if (c.scatter.x_left) probes.x_left = *c.scatter.x_left;
    if (c.scatter.x_right) probes.x_right = *c.scatter.x_right;
    const double dx = c.grid.resolve_dx(c.length());
    const std::size_t every = c.grid.snapshot_every;
    ScatterResult r;
    double oracle_T = 0.0, oracle_R = 0.0;
    bool have_oracle = false;
    if (c.scatter.effective) {
        EffectiveRunConfig cfg;
        cfg.medium = c.medium;
        cfg.profile = *c.profile;
        cfg.initial = c.initial;
        cfg.dx = dx;
        cfg.dt = c.grid.dt;
        cfg.t_max = c.grid.t_max;
        cfg.half_extent = c.grid.half_extent;
        cfg.snapshot_every = every;
        cfg.energy_every = 0;
        const auto tr = simulate_effective(cfg);
        r = reflect_transmit(tr, c.medium, probes);
        o.report["grid"] = grid_json(tr.coeffs.grid, tr.dt);
        if (const auto slab = constant_slab(*c.profile, c.medium);
            slab && c.initial.linkage == Linkage::right_moving) {
            oracle_T = spectral_transmission(c.initial.pulse, c.medium, [&](double w) {
                return std::norm(slab_transfer(w, *slab, c.medium).T);
            });
            oracle_R = 1.0 - oracle_T;
            have_oracle = true;
        }
    } else {
        const auto chain = c.resolved_chain();
        FiniteRunConfig cfg;
        cfg.medium = c.medium;
        cfg.chain = chain;
        cfg.initial = c.initial;
        cfg.dx = dx;
        cfg.t_max = c.grid.t_max;
        cfg.half_extent = c.grid.half_extent;
        cfg.snapshot_every = every;
        cfg.monitor_every = 0;
        const auto tr = simulate(cfg);
        r = reflect_transmit(tr, c.medium, probes);
        o.report["grid"] = grid_json(tr.grid.mesh.grid, tr.grid.dt);
        o.report["max_interface_residual"] = tr.max_residual();
        o.metadata_extra["snap_offsets"] = tr.grid.snap_offsets;
        if (c.initial.linkage == Linkage::right_moving) {
            oracle_T = spectral_transmission(c.initial.pulse, c.medium, [&](double w) {
                return std::norm(chain_transfer(w, tr.chain, c.medium).T);
            });
            oracle_R = 1.0 - oracle_T;
            have_oracle = true;
        }
    }
    Csv st(o.dir / "stored.csv", {"t[s]", "stored[J]"});
    for (std::size_t k = 0; k < r.stored_times.size(); ++k) {
        st << r.stored_times[k] << r.stored_history[k];
        st.end();
    }
    st.close();
    o.report["probes"] = {{"x_left", probes.x_left}, {"x_right", probes.x_right}};
    o.report["result"] = to_json(r);
    if (have_oracle) {
        o.report["oracle"] = {{"transmitted_fraction", oracle_T}, {"reflected_fraction", oracle_R}};
    }
}

void bandgap_outputs(const RunConfig& c, Outputs& o) {
    const auto scan = bandgap_scan(*c.profile, c.bandgap.resolve(), c.medium);
    Csv csv(o.dir / "bandgap.csv", {"omega[rad/s]", "T2[-]", "R2[-]"});
    for (const auto& row : scan.rows) {
        csv << row.omega << row.T2 << row.R2;
        csv.end();
    }
    csv.close();
    o.report["omega_c"] = scan.omega_c;
    o.report["monotone_below_cutoff"] = scan.monotone_below_cutoff;
    if (scan.omega_c > 0.0) {
        o.report["gap_exponent_ratio_half_cutoff"] = gap_exponent_ratio(*c.profile, 0.5 * scan.omega_c, c.medium);
    }
    json rows = json::array();
    for (const auto& row : scan.rows) rows.push_back({{"omega", row.omega}, {"T2", row.T2}, {"R2", row.R2}});
    o.report["rows"] = rows;
}

void static_outputs(const RunConfig& c, Outputs& o) {
    const auto chain = c.resolved_chain();
    const auto a = audit_static(chain, c.medium, c.grid.resolve_dx(c.length()), c.static_draws, c.seed);
    o.report["n"] = a.n;
    o.report["basis_size"] = a.basis_size;
    o.report["random_draws"] = a.random_draws;
    o.report["max_generator"] = a.max_generator;
    o.report["max_drift"] = a.max_drift;
    o.report["max_overlap"] = a.max_overlap;
    o.report["passed"] = a.passed();
}

bool needs_chain(const RunConfig& c) {
    return c.experiment == Experiment::simulate_finite || c.experiment == Experiment::static_check ||
           (c.experiment == Experiment::scatter && !c.scatter.effective);
}

}  // namespace

// ---------------------------------------------------------------- public

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::simulate_finite: return "simulate-finite";
        case Experiment::simulate_effective: return "simulate-effective";
        case Experiment::converge: return "converge";
        case Experiment::scatter: return "scatter";
        case Experiment::bandgap: return "bandgap";
        case Experiment::static_check: return "static-check";
    }
    return "";
}

Experiment parse_experiment(const std::string& s) {
    for (auto e : {Experiment::simulate_finite, Experiment::simulate_effective, Experiment::converge,
                   Experiment::scatter, Experiment::bandgap, Experiment::static_check}) {
        if (to_string(e) == s) return e;
    }
    throw ConfigError("config: key 'experiment': unknown experiment '" + s + "'");
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

double GridSettings::resolve_dx(double L) const {
    if ((dx > 0.0) == (nodes_per_L > 0.0)) {
        throw ConfigError("config: key 'grid': exactly one of dx > 0 and nodes_per_L > 0 required");
    }
    return dx > 0.0 ? dx : L / nodes_per_L;
}

std::vector<double> BandgapSettings::resolve() const {
    if (!omegas.empty()) return omegas;
    if (count < 2 || !(omega_max > omega_min) || !(omega_min > 0.0)) {
        throw ConfigError(
            "config: key 'bandgap': give omegas, or 0 < omega_min < omega_max with count >= 2");
    }
    std::vector<double> w(count);
    for (std::size_t i = 0; i < count; ++i) {
        w[i] = omega_min + (omega_max - omega_min) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return w;
}

double RunConfig::length() const {
    if (chain) return chain->L;
    if (profile) return profile->L();
    throw ConfigError("config: one of 'chain' and 'profile' is required");
}

double RunConfig::center() const {
    if (chain) return chain->center;
    if (profile) return profile->center();
    throw ConfigError("config: one of 'chain' and 'profile' is required");
}

OscillatorChain RunConfig::resolved_chain() const {
    if (chain) return *chain;
    if (profile && walls > 0) return discretize_densities(*profile, walls, medium, rule);
    throw ConfigError("config: key 'chain': a chain, or a profile with discretize.walls > 0, is required");
}

void RunConfig::validate() const {
    checked("medium", [&] { medium.validate(); });
    if (chain && profile) {
        throw ConfigError("config: keys 'chain' and 'profile' are both present (ambiguous)");
    }
    if (chain) checked("chain", [&] { chain->validate(); });
    if (profile) checked("profile", [&] { profile->validate(); });
    checked("initial", [&] { initial.pulse.validate(); });

    if (needs_chain(*this)) {
        if (!chain && !(profile && walls > 0)) {
            throw ConfigError("config: key 'chain': required (or 'profile' with discretize.walls > 0)");
        }
    } else if (experiment != Experiment::static_check) {
        if (!profile) throw ConfigError("config: key 'profile': required for " + to_string(experiment));
        if (chain) throw ConfigError("config: key 'chain': not used by " + to_string(experiment));
    }

    if (experiment == Experiment::bandgap) {
        if (profile->kind() != DensityProfile::Kind::constant) {
            throw ConfigError("config: key 'profile.kind': bandgap needs constant densities");
        }
        for (double w : bandgap.resolve()) {
            if (!(w > 0.0)) throw ConfigError("config: key 'bandgap.omegas': omega > 0 violated");
        }
        return;
    }
    if (experiment == Experiment::converge) {
        checked("converge", [&] {
            converge.rect.validate();
            ChainSequencePlan p;
            p.profile = *profile;
            p.n_values = converge.n_values;
            p.validate();
        });
        if (!(converge.policy.dx_finite > 0.0)) {
            throw ConfigError("config: key 'converge.dx_finite': dx_finite > 0 violated");
        }
        if (converge.policy.reference_refinement < 1) {
            throw ConfigError("config: key 'converge.reference_refinement': >= 1 violated");
        }
    } else {
        grid.resolve_dx(length());
        if (!(grid.t_max > 0.0)) throw ConfigError("config: key 'grid.t_max': t_max > 0 violated");
        if (grid.dt < 0.0) throw ConfigError("config: key 'grid.dt': dt >= 0 violated");
        if (grid.half_extent < 0.0) throw ConfigError("config: key 'grid.half_extent': >= 0 violated");
    }
    if (experiment != Experiment::static_check && !initial.is_zero()) {
        const double lo = center() - 0.5 * length(), hi = center() + 0.5 * length();
        if (initial.pulse.support_hi() > lo && initial.pulse.support_lo() < hi) {
            throw ConfigError(
                "config: key 'initial': support must not meet [center - L/2, center + L/2]");
        }
    }
}

RunConfig parse_config(const std::string& text, const ParseOptions& options,
                       std::vector<std::string>* warnings) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    ParseContext ctx{options.permissive, warnings};
    Section top(doc, "", ctx);
    RunConfig c;
    c.experiment = parse_experiment(top.text("experiment", "simulate-finite"));
    if (options.experiment) c.experiment = *options.experiment;
    c.seed = top.count("seed", 1);

    if (top.has("medium")) {
        auto s = top.sub("medium");
        c.medium.rho0 = s.number("rho0", 1.0);
        c.medium.a = s.number("a", 1.0);
        c.medium.S = s.number("S", 1.0);
        s.finish();
    }
    if (top.has("chain")) {
        auto s = top.sub("chain");
        OscillatorChain ch;
        ch.L = s.number("L", 1.0);
        ch.center = s.number("center", 0.0);
        ch.s = s.numbers("s");
        ch.M = s.numbers("M");
        ch.K = s.numbers("K");
        s.finish();
        c.chain = ch;
    }
    if (top.has("profile")) {
        auto s = top.sub("profile");
        const double L = s.number("L", 1.0), center = s.number("center", 0.0);
        const std::string kind = s.text("kind", "constant");
        if (kind == "constant") {
            c.profile = DensityProfile::constant(L, s.number("rho_M", 0.0), s.number("rho_K", 0.0), center);
        } else if (kind == "table") {
            const auto x = s.numbers("x");
            const auto m = s.numbers("rho_M");
            const auto k = s.numbers("rho_K");
            checked("profile", [&] { c.profile = DensityProfile::table(L, x, m, k, center); });
        } else {
            s.fail("kind", "expected constant or table, got '" + kind + "'");
        }
        s.finish();
    }
    if (top.has("discretize")) {
        auto s = top.sub("discretize");
        c.walls = s.count("walls", 0);
        checked("discretize.rule", [&] { c.rule = parse_placement_rule(s.text("rule", "midpoint")); });
        s.finish();
    }
    if (top.has("initial")) {
        auto s = top.sub("initial");
        auto& p = c.initial.pulse;
        checked("initial.shape", [&] { p.shape = parse_pulse_shape(s.text("shape", "gaussian")); });
        p.center = s.number("center", p.center);
        p.width = s.number("width", p.width);
        p.amplitude = s.number("amplitude", p.amplitude);
        p.wavenumber = s.number("wavenumber", p.wavenumber);
        p.phase = s.number("phase", p.phase);
        checked("initial.linkage", [&] { c.initial.linkage = parse_linkage(s.text("linkage", "right")); });
        s.finish();
    }
    if (top.has("grid")) {
        auto s = top.sub("grid");
        auto& g = c.grid;
        g.dx = s.number("dx", 0.0);
        g.nodes_per_L = s.number("nodes_per_L", 0.0);
        g.t_max = s.number("t_max", g.t_max);
        g.snapshot_every = s.count("snapshot_every", 0);
        g.half_extent = s.number("half_extent", 0.0);
        g.dt = s.number("dt", 0.0);
        s.finish();
    }
    if (top.has("converge")) {
        auto s = top.sub("converge");
        auto& v = c.converge;
        if (s.has("n_values")) v.n_values = s.counts("n_values");
        v.rect.t_max = s.number("t_max", v.rect.t_max);
        v.rect.x_lo = s.number("x_lo", v.rect.x_lo);
        v.rect.x_hi = s.number("x_hi", v.rect.x_hi);
        v.rect.nt = s.count("nt", v.rect.nt);
        v.rect.nx = s.count("nx", v.rect.nx);
        v.policy.dx_finite = s.number("dx_finite", v.policy.dx_finite);
        v.policy.reference_refinement = s.count("reference_refinement", v.policy.reference_refinement);
        v.policy.monitor_stride = s.count("monitor_stride", v.policy.monitor_stride);
        v.policy.measure_floor = s.flag("measure_floor", v.policy.measure_floor);
        s.finish();
    }
    if (top.has("scatter")) {
        auto s = top.sub("scatter");
        const std::string solver = s.text("solver", "finite");
        if (solver != "finite" && solver != "effective") {
            s.fail("solver", "expected finite or effective, got '" + solver + "'");
        }
        c.scatter.effective = solver == "effective";
        if (s.has("x_left")) c.scatter.x_left = s.number("x_left", 0.0);
        if (s.has("x_right")) c.scatter.x_right = s.number("x_right", 0.0);
        s.finish();
    }
    if (top.has("bandgap")) {
        auto s = top.sub("bandgap");
        c.bandgap.omegas = s.numbers("omegas");
        c.bandgap.omega_min = s.number("omega_min", 0.0);
        c.bandgap.omega_max = s.number("omega_max", 0.0);
        c.bandgap.count = s.count("count", 0);
        s.finish();
    }
    if (top.has("static")) {
        auto s = top.sub("static");
        c.static_draws = s.count("random_draws", c.static_draws);
        s.finish();
    }
    top.finish();
    c.validate();
    return c;
}

RunConfig load_config(const fs::path& path, const ParseOptions& options,
                      std::vector<std::string>* warnings) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("config: cannot read " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), options, warnings);
}

namespace {

json config_json(const RunConfig& c) {
    json j;
    j["experiment"] = to_string(c.experiment);
    j["seed"] = c.seed;
    j["medium"] = to_json(c.medium);
    if (c.chain) j["chain"] = to_json(*c.chain);
    if (c.profile) j["profile"] = to_json(*c.profile);
    j["discretize"] = {{"walls", c.walls}, {"rule", to_string(c.rule)}};
    j["initial"] = to_json(c.initial);
    j["grid"] = {{"dx", c.grid.dx},
                 {"nodes_per_L", c.grid.nodes_per_L},
                 {"t_max", c.grid.t_max},
                 {"snapshot_every", c.grid.snapshot_every},
                 {"half_extent", c.grid.half_extent},
                 {"dt", c.grid.dt}};
    const auto& v = c.converge;
    j["converge"] = {{"n_values", v.n_values},
                     {"t_max", v.rect.t_max},
                     {"x_lo", v.rect.x_lo},
                     {"x_hi", v.rect.x_hi},
                     {"nt", v.rect.nt},
                     {"nx", v.rect.nx},
                     {"dx_finite", v.policy.dx_finite},
                     {"reference_refinement", v.policy.reference_refinement},
                     {"monitor_stride", v.policy.monitor_stride},
                     {"measure_floor", v.policy.measure_floor}};
    json sc = {{"solver", c.scatter.effective ? "effective" : "finite"}};
    if (c.scatter.x_left) sc["x_left"] = *c.scatter.x_left;
    if (c.scatter.x_right) sc["x_right"] = *c.scatter.x_right;
    j["scatter"] = sc;
    j["bandgap"] = {{"omegas", c.bandgap.omegas},
                    {"omega_min", c.bandgap.omega_min},
                    {"omega_max", c.bandgap.omega_max},
                    {"count", c.bandgap.count}};
    j["static"] = {{"random_draws", c.static_draws}};
    return j;
}

}  // namespace

std::string serialize_config(const RunConfig& c) { return dump(config_json(c)); }

RunSummary run(const RunConfig& c, const fs::path& out, unsigned jobs, std::ostream& log) {
    c.validate();
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out);
    const fs::path stage = out / (".staging-" + std::to_string(::getpid()));
    fs::remove_all(stage);
    fs::create_directories(stage);

    RunSummary summary;
    try {
        Outputs o{stage, base_report(c)};
        log << "running " << to_string(c.experiment) << "\n";
        switch (c.experiment) {
            case Experiment::simulate_finite: finite_outputs(c, o); break;
            case Experiment::simulate_effective: effective_outputs(c, o); break;
            case Experiment::converge: converge_outputs(c, o, std::max(1u, jobs)); break;
            case Experiment::scatter: scatter_outputs(c, o); break;
            case Experiment::bandgap: bandgap_outputs(c, o); break;
            case Experiment::static_check: static_outputs(c, o); break;
        }
        write_text(stage / "report.json", dump(o.report));

        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json meta = o.metadata_extra;
        meta["schema_version"] = schema_version;
        meta["config"] = config_json(c);
        meta["versions"] = {{"wallchain", version_string}, {"compiler", __VERSION__},
                            {"cxx_standard", static_cast<long>(__cplusplus)}};
        meta["jobs"] = jobs;
        meta["wall_clock_seconds"] = seconds;
        write_text(stage / "metadata.json", dump(meta));

        std::vector<fs::path> staged;
        for (const auto& e : fs::directory_iterator(stage)) staged.push_back(e.path());
        std::sort(staged.begin(), staged.end());
        for (const auto& p : staged) {
            const fs::path dst = out / p.filename();
            fs::rename(p, dst);
            summary.files.push_back(dst);
        }
        fs::remove_all(stage);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(stage, ec);
        for (const auto& p : summary.files) fs::remove(p, ec);
        throw;
    }
    return summary;
}

}  // namespace wallchain
