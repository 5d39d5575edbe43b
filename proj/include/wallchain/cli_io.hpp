#pragma once

// Run configuration (JSON), experiment orchestration and deterministic
// CSV/JSON output.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wallchain/core_model.hpp"
#include "wallchain/effective_sim.hpp"
#include "wallchain/homogenize.hpp"
#include "wallchain/initial_data.hpp"

namespace wallchain {

enum class Experiment { simulate_finite, simulate_effective, converge, scatter, bandgap, static_check };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& s);

struct GridSettings {
    double dx = 0.0;           // exactly one of dx and nodes_per_L
    double nodes_per_L = 0.0;  // dx = L / nodes_per_L
    double t_max = 1.0;
    std::size_t snapshot_every = 0;  // steps; 0: first and last only
    double half_extent = 0.0;        // 0: automatic
    double dt = 0.0;                 // effective runs only; 0: largest stable step

    double resolve_dx(double L) const;
};

struct ConvergeSettings {
    std::vector<std::size_t> n_values{25, 50, 100, 200, 400};
    Rectangle rect;
    GridPolicy policy;
};

struct ScatterSettings {
    bool effective = false;  // solver: "finite" or "effective"
    std::optional<double> x_left;
    std::optional<double> x_right;
};

struct BandgapSettings {
    std::vector<double> omegas;  // explicit list, or
    double omega_min = 0.0;      // a uniform grid of `count` points
    double omega_max = 0.0;
    std::size_t count = 0;

    std::vector<double> resolve() const;
};

struct RunConfig {
    Experiment experiment = Experiment::simulate_finite;
    MediumParams medium;
    std::optional<OscillatorChain> chain;
    std::optional<DensityProfile> profile;
    std::size_t walls = 0;  // chain built from the profile when > 0
    PlacementRule rule = PlacementRule::midpoint;
    InitialData initial;
    GridSettings grid;
    ConvergeSettings converge;
    ScatterSettings scatter;
    BandgapSettings bandgap;
    std::size_t static_draws = 4;
    std::uint64_t seed = 1;

    /// Interval length of whichever of chain/profile is present.
    double length() const;
    double center() const;
    /// The explicit chain, or the profile discretized into `walls` cells.
    OscillatorChain resolved_chain() const;
    void validate() const;
};

struct ParseOptions {
    bool permissive = false;                // unknown keys become warnings
    std::optional<Experiment> experiment;  // replaces the document's "experiment"
};

/// Parses a JSON document. Every error message names the offending key.
RunConfig parse_config(const std::string& text, const ParseOptions& options = {},
                       std::vector<std::string>* warnings = nullptr);
RunConfig load_config(const std::filesystem::path& path, const ParseOptions& options = {},
                      std::vector<std::string>* warnings = nullptr);

/// Canonical JSON text; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const RunConfig& config);

/// 17 significant digits, scientific notation.
std::string format_double(double x);

struct RunSummary {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> warnings;
};

/// Runs the experiment and writes metadata.json, report.json and the CSV
/// files into `out`. Files are staged in a scratch directory and moved into
/// place only on success.
RunSummary run(const RunConfig& config, const std::filesystem::path& out, unsigned jobs,
               std::ostream& log);

}  // namespace wallchain
