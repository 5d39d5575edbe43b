#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "wallchain/cli_io.hpp"

using namespace wallchain;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream f(p);
    for (std::string l; std::getline(f, l);) out.push_back(l);
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("wallchain_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string message_of(const std::string& text, ParseOptions opt = {}) {
    try {
        parse_config(text, opt);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* finite_doc = R"({
  "experiment": "simulate-finite",
  "chain": {"s": [-0.2, 0.1], "M": [0.5, 0.5], "K": [1.0, 2.0]},
  "initial": {"center": -1.5, "width": 0.1},
  "grid": {"dx": 0.01, "t_max": 0.5, "snapshot_every": 10}
})";

}  // namespace

TEST_CASE("format_double keeps 17 significant digits") {
    CHECK(format_double(1.0) == "1.0000000000000000e+00");
    CHECK(format_double(-0.1) == "-1.0000000000000001e-01");
    CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("minimal document fills defaults") {
    const auto c = parse_config(finite_doc);
    CHECK(c.experiment == Experiment::simulate_finite);
    CHECK(c.medium.rho0 == 1.0);
    CHECK(c.medium.a == 1.0);
    CHECK(c.initial.pulse.shape == PulseShape::gaussian);
    CHECK(c.initial.linkage == Linkage::right_moving);
    CHECK(c.initial.pulse.amplitude == 1.0);
    CHECK(c.chain->L == 1.0);
    CHECK(c.seed == 1);
    CHECK(c.converge.n_values == std::vector<std::size_t>{25, 50, 100, 200, 400});
}

TEST_CASE("rejections name the key") {
    SUBCASE("negative density") {
        const auto m = message_of(R"({"medium": {"rho0": -1}, "chain": {"s": [0], "M": [1], "K": [1]},
                                      "grid": {"dx": 0.01}, "initial": {"center": -2, "width": 0.1}})");
        CHECK(m.find("rho0 > 0") != std::string::npos);
    }
    SUBCASE("chain and profile together are ambiguous") {
        const auto m = message_of(R"({"experiment": "converge", "chain": {"s": [0], "M": [1], "K": [1]},
                                      "profile": {"rho_M": 1, "rho_K": 1}, "initial": {"center": -2, "width": 0.1}})");
        CHECK(m.find("ambiguous") != std::string::npos);
    }
    SUBCASE("unknown key") {
        const auto m = message_of(R"({"chain": {"s": [0], "M": [1], "K": [1], "mass": 2},
                                      "grid": {"dx": 0.01}, "initial": {"center": -2, "width": 0.1}})");
        CHECK(m.find("chain.mass") != std::string::npos);
    }
    SUBCASE("wrong type") {
        const auto m = message_of(R"({"chain": {"s": [0], "M": [1], "K": [1]},
                                      "grid": {"dx": "small"}, "initial": {"center": -2, "width": 0.1}})");
        CHECK(m.find("grid.dx") != std::string::npos);
    }
    SUBCASE("pulse overlapping the interval") {
        const auto m = message_of(R"({"chain": {"s": [0], "M": [1], "K": [1]},
                                      "grid": {"dx": 0.01}, "initial": {"center": -0.6}})");
        CHECK(m.find("initial") != std::string::npos);
    }
    SUBCASE("dx and nodes_per_L together") {
        const auto m = message_of(R"({"chain": {"s": [0], "M": [1], "K": [1]},
                                      "grid": {"dx": 0.01, "nodes_per_L": 100}, "initial": {"center": -2, "width": 0.1}})");
        CHECK(m.find("grid") != std::string::npos);
    }
    SUBCASE("profile missing for bandgap") {
        const auto m = message_of(R"({"experiment": "bandgap", "bandgap": {"omegas": [1]}})");
        CHECK(m.find("profile") != std::string::npos);
    }
}

TEST_CASE("permissive mode downgrades unknown keys") {
    const std::string doc = R"({"chain": {"s": [0], "M": [1], "K": [1]}, "colour": "red",
                                "grid": {"dx": 0.01}, "initial": {"center": -2, "width": 0.1}})";
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
    std::vector<std::string> warnings;
    ParseOptions opt;
    opt.permissive = true;
    parse_config(doc, opt, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("colour") != std::string::npos);
}

TEST_CASE("experiment override") {
    ParseOptions opt;
    opt.experiment = Experiment::static_check;
    CHECK(parse_config(finite_doc, opt).experiment == Experiment::static_check);
}

TEST_CASE("serialize round trip") {
    auto c = parse_config(R"({
      "experiment": "scatter", "seed": 99,
      "medium": {"rho0": 1.2, "a": 340.0, "S": 0.01},
      "profile": {"kind": "table", "L": 2.0, "center": 0.3, "x": [-0.7, 0.1, 1.3],
                  "rho_M": [0.1, 0.7, 0.3], "rho_K": [1.0, 0.5, 2.0]},
      "discretize": {"walls": 12, "rule": "quantile"},
      "initial": {"shape": "wavepacket", "center": -3.0, "width": 0.2, "wavenumber": 7.5, "phase": 0.1,
                  "amplitude": 2.5, "linkage": "right"},
      "grid": {"nodes_per_L": 800, "t_max": 0.02, "snapshot_every": 3},
      "scatter": {"solver": "effective", "x_left": -1.0},
      "bandgap": {"omega_min": 0.1, "omega_max": 3.0, "count": 7}
    })");
    const auto text = serialize_config(c);
    const auto back = parse_config(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.experiment == Experiment::scatter);
    CHECK(back.seed == 99);
    CHECK(back.medium.a == 340.0);
    CHECK(back.profile->breakpoints() == c.profile->breakpoints());
    CHECK(back.profile->rho_M_values() == c.profile->rho_M_values());
    CHECK(back.profile->center() == 0.3);
    CHECK(back.walls == 12);
    CHECK(back.rule == PlacementRule::quantile);
    CHECK(back.initial.pulse.wavenumber == 7.5);
    CHECK(back.initial.pulse.phase == 0.1);
    CHECK(back.grid.nodes_per_L == 800.0);
    CHECK(back.scatter.effective);
    CHECK(*back.scatter.x_left == -1.0);
    CHECK_FALSE(back.scatter.x_right.has_value());
    CHECK(back.bandgap.resolve() == c.bandgap.resolve());
}

TEST_CASE("zero data run writes zero CSVs of the right shape") {
    auto c = parse_config(R"({
      "chain": {"s": [-0.2, 0.1], "M": [0.5, 0.5], "K": [1.0, 2.0]},
      "initial": {"amplitude": 0.0},
      "grid": {"dx": 0.05, "t_max": 0.2, "half_extent": 1.0}
    })");
    const auto dir = scratch("zero");
    std::ostringstream log;
    run(c, dir, 1, log);
    const auto traj = lines(dir / "trajectory.csv");
    // nodes on [-1, 1] at dx = 0.05, first and last snapshot
    REQUIRE(traj.size() == 1 + 2 * 41);
    CHECK(traj[0] == "t[s],x[m],v[m/s],p_minus[Pa],p_plus[Pa]");
    for (std::size_t i = 1; i < traj.size(); ++i) {
        std::stringstream row(traj[i]);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 5);
        for (int k = 2; k < 5; ++k) CHECK(std::stod(cells[static_cast<std::size_t>(k)]) == 0.0);
    }
    CHECK(lines(dir / "walls.csv").size() == 1 + 2 * 2);
    CHECK(lines(dir / "energy.csv").size() == 1 + 5);
    const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(rep["schema_version"] == 1);
    CHECK(rep["experiment"] == "simulate-finite");
    const auto meta = nlohmann::json::parse(slurp(dir / "metadata.json"));
    CHECK(meta["snap_offsets"].size() == 2);
    CHECK(meta["config"]["grid"]["dx"].get<double>() == 0.05);
    fs::remove_all(dir);
}

TEST_CASE("repeat runs are byte identical") {
    const auto c = parse_config(finite_doc);
    const auto a = scratch("rep_a"), b = scratch("rep_b");
    std::ostringstream log;
    run(c, a, 1, log);
    run(c, b, 1, log);
    for (const char* f : {"trajectory.csv", "walls.csv", "energy.csv", "report.json"}) {
        CHECK(slurp(a / f) == slurp(b / f));
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("converge report matches its CSV") {
    const auto c = parse_config(R"({
      "experiment": "converge",
      "profile": {"rho_M": 1, "rho_K": 1},
      "initial": {"center": -1.55, "width": 0.125},
      "converge": {"n_values": [4, 8], "t_max": 1.0, "nt": 11, "nx": 21,
                   "dx_finite": 0.01, "reference_refinement": 2, "measure_floor": false}
    })");
    const auto dir = scratch("conv");
    std::ostringstream log;
    run(c, dir, 2, log);
    const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
    const auto csv = lines(dir / "convergence.csv");
    REQUIRE(csv.size() == 3);
    REQUIRE(rep["rows"].size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        std::stringstream row(csv[i + 1]);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        const auto& r = rep["rows"][i];
        CHECK(std::stoul(cells[0]) == r["n"].get<std::size_t>());
        CHECK(std::stod(cells[2]) == r["error"]["sup_v"].get<double>());
        CHECK(std::stod(cells[3]) == r["error"]["sup_vt"].get<double>());
        CHECK(std::stod(cells[4]) == r["error"]["l2_vx"].get<double>());
    }
    fs::remove_all(dir);
}

TEST_CASE("other experiments produce reports") {
    std::ostringstream log;
    SUBCASE("bandgap") {
        const auto dir = scratch("gap");
        run(parse_config(R"({"experiment": "bandgap", "profile": {"rho_M": 1, "rho_K": 1},
                             "bandgap": {"omega_min": 0.1, "omega_max": 2.0, "count": 20}})"),
            dir, 1, log);
        const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
        CHECK(rep["omega_c"].get<double>() == doctest::Approx(std::sqrt(0.5)));
        CHECK(lines(dir / "bandgap.csv").size() == 21);
        fs::remove_all(dir);
    }
    SUBCASE("scatter with an effective slab") {
        const auto dir = scratch("scat");
        run(parse_config(R"({"experiment": "scatter", "profile": {"rho_M": 1, "rho_K": 1},
                             "initial": {"shape": "wavepacket", "wavenumber": 3.0, "width": 1.0, "center": -9.0},
                             "grid": {"dx": 0.025, "t_max": 20.0, "snapshot_every": 100},
                             "scatter": {"solver": "effective"}})"),
            dir, 1, log);
        const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
        CHECK(rep["result"]["closure"].get<double>() <= 1e-6);
        CHECK(rep["result"]["transmitted_fraction"].get<double>() ==
              doctest::Approx(rep["oracle"]["transmitted_fraction"].get<double>()).epsilon(1e-2));
        fs::remove_all(dir);
    }
    SUBCASE("static check") {
        const auto dir = scratch("stat");
        run(parse_config(R"({"experiment": "static-check", "chain": {"s": [-0.2, 0.0, 0.3], "M": [1, 1, 1], "K": [1, 2, 3]},
                             "grid": {"dx": 0.005}})"),
            dir, 1, log);
        const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
        CHECK(rep["basis_size"] == 2);
        CHECK(rep["passed"] == true);
        fs::remove_all(dir);
    }
    SUBCASE("effective simulation") {
        const auto dir = scratch("eff");
        run(parse_config(R"({"experiment": "simulate-effective", "profile": {"rho_M": 1, "rho_K": 1},
                             "initial": {"center": -1.55, "width": 0.125},
                             "grid": {"dx": 0.01, "t_max": 1.0, "snapshot_every": 50}})"),
            dir, 1, log);
        CHECK(lines(dir / "trajectory.csv")[0] == "t[s],x[m],v[m/s],v_t[m/s^2]");
        const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
        CHECK(rep["energy_drift"].get<double>() <= 1e-3);
        fs::remove_all(dir);
    }
}

TEST_CASE("a failing run leaves no partial output") {
    // dt above the stability limit is only detected once the run starts
    const auto c = parse_config(R"({"experiment": "simulate-effective", "profile": {"rho_M": 1, "rho_K": 1},
                                    "initial": {"center": -1.55, "width": 0.125},
                                    "grid": {"dx": 0.01, "dt": 0.5, "t_max": 1.0}})");
    const auto dir = scratch("fail");
    std::ostringstream log;
    CHECK_THROWS_AS(run(c, dir, 1, log), ConfigError);
    CHECK(fs::is_empty(dir));
    fs::remove_all(dir);
}
