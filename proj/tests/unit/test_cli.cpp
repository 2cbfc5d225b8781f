#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hhdeco/analysis.hpp"
#include "hhdeco/cli/commands.hpp"
#include "hhdeco/cli/config.hpp"
#include "hhdeco/cli/io.hpp"
#include "hhdeco/error.hpp"

using namespace hhdeco;
using namespace hhdeco::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("hhdeco_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

obs::ObservableSeries synthetic_series() {
    obs::ObservableSeries s;
    for (int k = 0; k <= 2000; ++k) {
        const double t = 0.05 * k;
        const double p = 0.3 + 0.6 * std::exp(-t / 2.0) - 0.2 * std::exp(-t / 15.0);
        CMatrix r = CMatrix::Zero(4, 4);
        r(0, 0) = 0.7;
        r(1, 1) = 0.3;
        r(0, 1) = std::polar(0.4 * std::exp(-t / 5.0), -0.3 * t);
        r(1, 0) = std::conj(r(0, 1));
        s.times.push_back(t);
        s.purity.push_back(p);
        s.energy.push_back(-1.0 + 0.1 * t);
        s.cumulant.push_back(-0.5);
        s.elements.push_back(r);
    }
    return s;
}

} // namespace

TEST_CASE("configuration defaults and overrides") {
    const auto cfg = parse_config("", {});
    CHECK(cfg.model.t0 == 1.0);
    CHECK(cfg.model.gamma == 0.3);
    CHECK(cfg.model.beta == 1.0);
    CHECK(cfg.heom.K == 1);
    CHECK(cfg.heom.L == 8);
    CHECK(cfg.resolved.at("model.U") == "0");

    const auto c2 = parse_config("[model]\nU = 6\neta = 2.0\nhamiltonian = hartree-fock\n[sweep]\nU = 0:6:0.5\n",
                                 {"heom.L=5", "fit.asymptote=free"});
    CHECK(c2.model.U == 6.0);
    CHECK(c2.model.eta == 2.0);
    CHECK(c2.hamiltonian == heom::HamiltonianKind::HartreeFock);
    CHECK(c2.heom.L == 5);
    CHECK(c2.fit.asymptote_mode == analysis::AsymptoteMode::Free);
    CHECK(c2.sweep.U.size() == 13);
    CHECK(c2.sweep.U.back() == doctest::Approx(6.0));
    CHECK(c2.resolved.at("heom.L") == "5");
}

TEST_CASE("configuration errors") {
    try {
        parse_config("[model]\nU = 1\nbogus = 3\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("<string>:3:") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[nosuch]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("", {"model.U"}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {"model.U=abc"}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {"model.beta=-1"}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {"heom.L=0"}), ConfigError);
    CHECK_THROWS_AS(load_config(std::string("/nonexistent/run.ini")), ConfigError);
}

TEST_CASE("real lists") {
    CHECK(parse_real_list("1, 2.5,3") == std::vector<double>{1.0, 2.5, 3.0});
    CHECK(parse_real_list("0:1:0.25").size() == 5);
    CHECK_THROWS(parse_real_list("0:1:0"));
}

TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 6.0, 123456.789})
        CHECK(std::stod(format_real(v)) == v);
    CHECK(format_real(0.1) == "0.1");
    CHECK(format_optional(std::nullopt).empty());
}

TEST_CASE("trajectory table round trip") {
    const auto dir = scratch("traj");
    const auto s = synthetic_series();
    trajectory_table(s).write(dir / "trajectory.csv", {{"model.U", "0"}, {"model.eta", "0.1"}});
    const auto csv = read_csv(dir / "trajectory.csv");
    CHECK(csv.provenance.at("model.eta") == "0.1");
    CHECK(csv.header == trajectory_header());
    CHECK(csv.header.size() == 4 + 4 + 2 * 6);
    const auto back = series_from_trajectory(csv);
    REQUIRE(back.times.size() == s.times.size());
    for (std::size_t k = 0; k < s.times.size(); k += 97) {
        CHECK(back.purity[k] == s.purity[k]);
        CHECK((back.elements[k] - s.elements[k]).norm() == 0.0);
    }

    analysis::FitConfig c;
    c.n_terms = 2;
    c.asymptote_mode = analysis::AsymptoteMode::Free;
    const auto fit = analysis::fit_exponentials(back.times, back.purity, c);
    REQUIRE(fit.terms.size() == 2);
    CHECK(fit.terms[0].amplitude == doctest::Approx(0.6).epsilon(0.01));
    CHECK(fit.terms[0].tau == doctest::Approx(2.0).epsilon(0.01));
    CHECK(fit.terms[1].amplitude == doctest::Approx(-0.2).epsilon(0.01));
    CHECK(fit.terms[1].tau == doctest::Approx(15.0).epsilon(0.01));
    fs::remove_all(dir);
}

TEST_CASE("fit command writes both tables") {
    const auto dir = scratch("fit");
    const auto s = synthetic_series();
    trajectory_table(s).write(dir / "b" / "trajectory.csv", {{"model.U", "6"}, {"model.eta", "0.1"}});
    trajectory_table(s).write(dir / "a" / "trajectory.csv", {{"model.U", "0"}, {"model.eta", "0.1"}});
    CommandOptions opts;
    opts.out_dir = dir.string();
    opts.overrides = {"fit.n_terms=2", "fit.asymptote=free"};
    CHECK(cmd_fit(opts) == 0);
    const auto purity = read_csv(dir / "purity_fits.csv");
    CHECK(purity.header == std::vector<std::string>{"U", "eta", "a1", "tau1", "a2", "tau2", "a3", "tau3", "asymptote",
                                                    "residual_rms", "converged"});
    REQUIRE(purity.rows.size() == 2);
    CHECK(purity.rows[0][0] == "0");
    CHECK(purity.rows[1][0] == "6");
    CHECK(purity.rows[0][6].empty());
    CHECK(purity.rows[0][7].empty());
    CHECK(std::stod(purity.rows[0][3]) == doctest::Approx(2.0).epsilon(0.01));
    const auto elements = read_csv(dir / "element_fits.csv");
    CHECK(elements.rows.size() == 20);
    for (const auto& r : elements.rows)
        if (r[2] == "r12") CHECK(std::stod(r[4]) == doctest::Approx(5.0).epsilon(1e-3));
    CHECK(fs::exists(dir / "meta.json"));
    fs::remove_all(dir);
}

TEST_CASE("output directory precedence") {
    CommandOptions opts;
    RunConfig cfg = parse_config("");
    ::unsetenv(kOutputRootEnv);
    CHECK(resolve_output(opts, cfg, "fit") == fs::path("hhdeco-out") / "fit");
    ::setenv(kOutputRootEnv, "/tmp/root", 1);
    CHECK(resolve_output(opts, cfg, "fit") == fs::path("/tmp/root") / "fit");
    cfg.output = "/tmp/from-config";
    CHECK(resolve_output(opts, cfg, "fit") == fs::path("/tmp/from-config"));
    opts.out_dir = "/tmp/from-flag";
    CHECK(resolve_output(opts, cfg, "fit") == fs::path("/tmp/from-flag"));
    ::unsetenv(kOutputRootEnv);
}

TEST_CASE("propagate and refmodel commands") {
    const auto dir = scratch("run");
    CommandOptions opts;
    opts.out_dir = (dir / "prop").string();
    opts.overrides = {"heom.L=2", "heom.t_max=2", "model.eta=2"};
    CHECK(cmd_propagate(opts) == 0);
    const auto traj = read_csv(dir / "prop" / "trajectory.csv");
    CHECK(traj.rows.size() == 21);
    CHECK(std::stod(traj.rows.front()[1]) == doctest::Approx(1.0));

    opts.out_dir = (dir / "ref").string();
    opts.overrides = {"refmodel.x_points=21", "refmodel.n_ph=10", "refmodel.U=0,6", "model.eta=2"};
    CHECK(cmd_refmodel(opts) == 0);
    for (int m = 1; m <= 4; ++m) {
        CHECK(fs::exists(dir / "ref" / ("pes_x" + std::to_string(m) + ".csv")));
        CHECK(fs::exists(dir / "ref" / ("nac_x" + std::to_string(m) + ".csv")));
    }
    const auto nac1 = read_csv(dir / "ref" / "nac_x1.csv");
    CHECK(nac1.rows.size() == 42);
    for (double v : nac1.numbers("d12")) CHECK(std::abs(v) < 1e-10);
    const auto ecor = read_csv(dir / "ref" / "ecor.csv");
    REQUIRE(ecor.rows.size() == 2);
    CHECK(std::stod(ecor.rows[0][1]) == 0.0);
    CHECK(read_csv(dir / "ref" / "deltaF.csv").rows.size() == 8);
    fs::remove_all(dir);
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(TruncationError("x")) == 3);
    CHECK(exit_code_for(InvariantError("x")) == 4);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
}
