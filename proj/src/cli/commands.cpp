#include "hhdeco/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <json.hpp>
#include <numbers>
#include <sstream>
#include <thread>

#include "hhdeco/analysis.hpp"
#include "hhdeco/cli/io.hpp"
#include "hhdeco/error.hpp"
#include "hhdeco/observables.hpp"
#include "hhdeco/refmodels.hpp"
#include "hhdeco/version.hpp"

namespace hhdeco::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::map<std::string, std::string> provenance(const RunConfig& cfg, const std::string& command,
                                              const std::map<std::string, std::string>& extra = {}) {
    std::map<std::string, std::string> p = cfg.resolved;
    p["hhdeco.version"] = kVersion;
    p["hhdeco.command"] = command;
    for (const auto& [k, v] : extra) p[k] = v;
    return p;
}

void write_manifest(const fs::path& dir, const std::map<std::string, std::string>& params, const json& body) {
    fs::create_directories(dir);
    json m = body;
    m["tool"] = "hhdeco";
    m["version"] = kVersion;
    m["parameters"] = params;
    std::ofstream out(dir / "meta.json", std::ios::binary);
    out << m.dump(2) << '\n';
}

json diagnostics_json(const heom::TrajectoryDiagnostics& d) {
    return {{"max_trace_defect", d.max_trace_defect},
            {"max_hermiticity_defect", d.max_hermiticity_defect},
            {"min_eigenvalue", d.min_eigenvalue},
            {"max_ado_norm", d.max_ado_norm},
            {"n_ados", d.n_ados},
            {"steps", d.steps},
            {"within_tolerance", d.within_tolerance()}};
}

std::string tag(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

RunConfig with_point(RunConfig cfg, double U, double eta) {
    cfg.model.U = U;
    cfg.model.eta = eta;
    cfg.resolved["model.U"] = format_real(U);
    cfg.resolved["model.eta"] = format_real(eta);
    return cfg;
}

struct CellOutcome {
    bool ok{false};
    std::string error;
    int exit_code{0};
    heom::TrajectoryDiagnostics diagnostics;
};

// Propagates one (U, eta) point and writes trajectory.csv + meta.json into dir.
CellOutcome propagate_cell(const RunConfig& cfg, const fs::path& dir) {
    const auto start = Clock::now();
    const auto params = provenance(cfg, "propagate");
    CellOutcome outcome;
    json manifest{{"command", "propagate"}, {"outputs", json::array()}};
    try {
        auto hcfg = cfg.heom;
        const auto model = heom::hubbard_holstein(cfg.model, hcfg.K, cfg.hamiltonian);
        const CMatrix rho0 = model::initial_state(model.hamiltonian);
        const auto traj = heom::propagate(model, rho0, hcfg);
        const auto series = obs::compute_series(traj, model.hamiltonian);
        trajectory_table(series).write(dir / "trajectory.csv", params);
        outcome.ok = true;
        outcome.diagnostics = traj.diagnostics;
        manifest["outputs"].push_back("trajectory.csv");
        manifest["diagnostics"] = diagnostics_json(traj.diagnostics);
        manifest["status"] = traj.diagnostics.within_tolerance() ? "ok" : "tolerance-exceeded";
    } catch (const std::exception& e) {
        outcome.error = e.what();
        outcome.exit_code = exit_code_for(e);
        manifest["status"] = "failed";
        manifest["error"] = e.what();
        manifest["partial"] = fs::exists(dir / "trajectory.csv");
    }
    manifest["wall_seconds"] = seconds_since(start);
    write_manifest(dir, params, manifest);
    return outcome;
}

std::vector<double> or_single(const std::vector<double>& list, double fallback) {
    return list.empty() ? std::vector<double>{fallback} : list;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
    const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
}

std::vector<fs::path> find_trajectories(const fs::path& root) {
    std::vector<fs::path> out;
    if (!fs::exists(root)) return out;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file() && entry.path().filename() == "trajectory.csv") out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

double provenance_real(const CsvFile& f, const std::string& key, const fs::path& path) {
    const auto it = f.provenance.find(key);
    if (it == f.provenance.end()) throw Error(path.string() + ": provenance lacks " + key);
    return std::stod(it->second);
}

} // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const std::invalid_argument*>(&e)) return 2;
    if (dynamic_cast<const NumericalError*>(&e)) return 3;
    if (dynamic_cast<const InvariantError*>(&e)) return 4;
    return 1;
}

fs::path resolve_output(const CommandOptions& opts, const RunConfig& cfg, const std::string& command) {
    if (opts.out_dir) return *opts.out_dir;
    if (!cfg.output.empty()) return cfg.output;
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / command;
    return fs::path("hhdeco-out") / command;
}

int cmd_propagate(const CommandOptions& opts) {
    const auto cfg = load_config(opts.config_path, opts.overrides);
    const auto dir = resolve_output(opts, cfg, "propagate");
    const auto outcome = propagate_cell(cfg, dir);
    if (!outcome.ok) {
        std::cerr << "propagate failed: " << outcome.error << '\n';
        return outcome.exit_code;
    }
    std::cout << "wrote " << (dir / "trajectory.csv").string() << '\n';
    return 0;
}

int cmd_sweep(const CommandOptions& opts) {
    const auto cfg = load_config(opts.config_path, opts.overrides);
    const auto dir = resolve_output(opts, cfg, "sweep");
    const auto start = Clock::now();

    if (cfg.sweep.kind == SweepKind::Convergence) {
        const auto params = provenance(cfg, "sweep");
        const auto build = [&](int K) { return heom::hubbard_holstein(cfg.model, K, cfg.hamiltonian); };
        const CMatrix rho0 = model::initial_state(build(0).hamiltonian);
        const auto report = heom::convergence_sweep(build, rho0, cfg.heom, cfg.sweep.K, cfg.sweep.L, cfg.sweep.tolerance);
        CsvTable table({"K", "L", "ok", "deviation_previous_L", "deviation_previous_K", "converged"});
        json cells = json::array();
        for (const auto& c : report.cells) {
            auto dev = [](double d) { return d < 0.0 ? std::string() : format_real(d); };
            table.add_row({std::to_string(c.K), std::to_string(c.L), c.ok ? "1" : "0", dev(c.deviation_from_previous_L),
                           dev(c.deviation_from_previous_K), c.converged ? "1" : "0"});
            cells.push_back({{"K", c.K}, {"L", c.L}, {"error", c.error}, {"wall_seconds", c.wall_seconds}});
        }
        table.write(dir / "convergence.csv", params);
        write_manifest(dir, params,
                       {{"command", "sweep"}, {"kind", "convergence"}, {"outputs", {"convergence.csv"}}, {"cells", cells},
                        {"status", "ok"}, {"wall_seconds", seconds_since(start)}});
        std::cout << "wrote " << (dir / "convergence.csv").string() << '\n';
        return 0;
    }

    struct Cell {
        double U;
        double eta;
        fs::path dir;
    };
    std::vector<Cell> cells;
    for (double eta : or_single(cfg.sweep.eta, cfg.model.eta))
        for (double U : or_single(cfg.sweep.U, cfg.model.U))
            cells.push_back({U, eta, dir / ("eta" + tag(eta) + "_U" + tag(U))});

    std::vector<CellOutcome> outcomes(cells.size());
    std::mutex index_lock;
    json index = json::array();
    parallel_for(cells.size(), opts.jobs, [&](std::size_t i) {
        const auto cell_cfg = with_point(cfg, cells[i].U, cells[i].eta);
        outcomes[i] = propagate_cell(cell_cfg, cells[i].dir);
        const std::lock_guard<std::mutex> guard(index_lock);
        std::cerr << "cell eta=" << cells[i].eta << " U=" << cells[i].U << (outcomes[i].ok ? " done" : " FAILED: " + outcomes[i].error)
                  << '\n';
    });
    int code = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        index.push_back({{"U", cells[i].U},
                         {"eta", cells[i].eta},
                         {"path", fs::relative(cells[i].dir / "trajectory.csv", dir).generic_string()},
                         {"status", outcomes[i].ok ? "ok" : "failed"},
                         {"error", outcomes[i].error}});
        if (!outcomes[i].ok && code == 0) code = outcomes[i].exit_code;
    }
    write_manifest(dir, provenance(cfg, "sweep"),
                   {{"command", "sweep"}, {"kind", "grid"}, {"cells", index}, {"status", code == 0 ? "ok" : "failed"},
                    {"wall_seconds", seconds_since(start)}});
    std::cout << "swept " << cells.size() << " cells into " << dir.string() << '\n';
    return code;
}

int cmd_fit(const CommandOptions& opts) {
    const auto cfg = load_config(opts.config_path, opts.overrides);
    const auto dir = resolve_output(opts, cfg, "fit");
    const auto start = Clock::now();

    std::vector<fs::path> inputs;
    for (const auto& s : opts.inputs) inputs.emplace_back(s);
    if (inputs.empty())
        for (const auto& s : cfg.fit_inputs) inputs.emplace_back(s);
    if (inputs.empty()) inputs = find_trajectories(dir);
    if (inputs.empty()) throw ConfigError("fit: no trajectory files given or found under " + dir.string());

    struct Loaded {
        double U, eta;
        fs::path path;
        obs::ObservableSeries series;
    };
    std::vector<Loaded> loaded;
    for (const auto& p : inputs) {
        const auto csv = read_csv(p);
        loaded.push_back({provenance_real(csv, "model.U", p), provenance_real(csv, "model.eta", p), p,
                          series_from_trajectory(csv)});
    }
    std::stable_sort(loaded.begin(), loaded.end(), [](const Loaded& a, const Loaded& b) {
        return std::tie(a.eta, a.U) < std::tie(b.eta, b.U);
    });

    std::vector<analysis::ExpFitResult> purity_fits(loaded.size());
    std::vector<std::vector<analysis::ElementFit>> element_fits(loaded.size());
    std::vector<std::string> failures(loaded.size());
    parallel_for(loaded.size(), opts.jobs, [&](std::size_t i) {
        try {
            auto fc = cfg.fit;
            purity_fits[i] = analysis::fit_exponentials(loaded[i].series.times, loaded[i].series.purity, fc);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
        element_fits[i] = analysis::fit_density_matrix_elements(loaded[i].series, cfg.elements);
    });

    CsvTable purity({"U", "eta", "a1", "tau1", "a2", "tau2", "a3", "tau3", "asymptote", "residual_rms", "converged"});
    CsvTable elements({"U", "eta", "element", "p", "tau"});
    json warnings = json::array();
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        const auto& L = loaded[i];
        std::vector<std::string> row{format_real(L.U), format_real(L.eta)};
        const auto& f = purity_fits[i];
        if (!failures[i].empty()) {
            for (int k = 0; k < 9; ++k) row.emplace_back();
            warnings.push_back({{"path", L.path.string()}, {"series", "purity"}, {"error", failures[i]}});
            std::cerr << "warning: purity fit failed for " << L.path.string() << ": " << failures[i] << '\n';
        } else {
            for (std::size_t k = 0; k < 3; ++k) {
                if (k < f.terms.size()) {
                    row.push_back(format_real(f.terms[k].amplitude));
                    row.push_back(format_real(f.terms[k].tau));
                } else {
                    row.emplace_back();
                    row.emplace_back();
                }
            }
            row.push_back(format_real(f.asymptote));
            row.push_back(format_real(f.residual_rms));
            row.push_back(f.converged ? "1" : "0");
            for (const auto& w : f.warnings) warnings.push_back({{"path", L.path.string()}, {"series", "purity"}, {"warning", w}});
        }
        purity.add_row(std::move(row));

        for (const auto& ef : element_fits[i]) {
            const std::string name = "r" + std::to_string(ef.i + 1) + std::to_string(ef.j + 1);
            if (!ef.error.empty()) {
                elements.add_row({format_real(L.U), format_real(L.eta), name, "", ""});
                warnings.push_back({{"path", L.path.string()}, {"series", name}, {"error", ef.error}});
                std::cerr << "warning: " << name << " fit failed for " << L.path.string() << ": " << ef.error << '\n';
                continue;
            }
            elements.add_row({format_real(L.U), format_real(L.eta), name, format_real(ef.amplitude()),
                              ef.decays ? format_real(ef.tau()) : std::string()});
        }
    }
    const auto params = provenance(cfg, "fit");
    purity.write(dir / "purity_fits.csv", params);
    elements.write(dir / "element_fits.csv", params);
    json in = json::array();
    for (const auto& L : loaded) in.push_back(L.path.string());
    write_manifest(dir, params,
                   {{"command", "fit"}, {"inputs", in}, {"outputs", {"purity_fits.csv", "element_fits.csv"}},
                    {"warnings", warnings}, {"status", "ok"}, {"wall_seconds", seconds_since(start)}});
    std::cout << "fitted " << loaded.size() << " trajectories into " << dir.string() << '\n';
    return 0;
}

int cmd_refmodel(const CommandOptions& opts) {
    const auto cfg = load_config(opts.config_path, opts.overrides);
    const auto dir = resolve_output(opts, cfg, "refmodel");
    const auto start = Clock::now();
    const auto Us = or_single(cfg.ref.U, cfg.model.U);

    std::vector<double> grid(static_cast<std::size_t>(cfg.ref.x_points));
    for (int k = 0; k < cfg.ref.x_points; ++k)
        grid[static_cast<std::size_t>(k)] = cfg.ref.x_min + (cfg.ref.x_max - cfg.ref.x_min) * k / (cfg.ref.x_points - 1);

    const auto params = provenance(cfg, "refmodel");
    json warnings = json::array();
    json outputs = json::array();
    CsvTable delta({"U", "eta", "mode", "value"});
    CsvTable ecor({"U", "E_cor", "min_overlap"});
    for (int mode : cfg.ref.modes) {
        CsvTable pes({"U", "eta", "x", "E1", "E2", "E3", "E4"});
        CsvTable nac({"U", "eta", "x", "d12", "hellmann_feynman", "flagged"});
        for (double U : Us) {
            ref::SingleModeModel m;
            m.base = cfg.model;
            m.base.U = U;
            m.omega = cfg.ref.omega;
            m.active_modes = {mode};
            m.n_ph = cfg.ref.n_ph;
            const auto curve = ref::bo_pes(m, mode, grid);
            for (std::size_t k = 0; k < grid.size(); ++k) {
                std::vector<std::string> row{format_real(U), format_real(m.base.eta), format_real(grid[k])};
                for (int n = 0; n < 4; ++n) row.push_back(format_real(curve.energies(static_cast<Eigen::Index>(k), n)));
                pes.add_row(std::move(row));
            }
            const auto d = ref::nac(m, mode, grid, cfg.ref.nac_step);
            for (std::size_t k = 0; k < grid.size(); ++k)
                nac.add_row({format_real(U), format_real(m.base.eta), format_real(grid[k]), format_real(d.d12[k]),
                             d.flagged[k] ? std::string() : format_real(d.hellmann_feynman[k]), d.flagged[k] ? "1" : "0"});
            try {
                delta.add_row({format_real(U), format_real(m.base.eta), std::to_string(mode),
                               format_real(ref::delta_f_average(m, mode, cfg.ref.gh_order))});
            } catch (const NumericalError& e) {
                delta.add_row({format_real(U), format_real(m.base.eta), std::to_string(mode), ""});
                warnings.push_back({{"output", "deltaF.csv"}, {"U", U}, {"mode", mode}, {"error", e.what()}});
                std::cerr << "warning: deltaF U=" << U << " mode " << mode << ": " << e.what() << '\n';
            }
        }
        const std::string suffix = "_x" + std::to_string(mode) + ".csv";
        pes.write(dir / ("pes" + suffix), params);
        nac.write(dir / ("nac" + suffix), params);
        outputs.push_back("pes" + suffix);
        outputs.push_back("nac" + suffix);
    }
    for (double U : Us) {
        auto p = cfg.model;
        p.U = U;
        try {
            const auto r = ref::correlation_energy(cfg.ref.ecor_weights, model::build_hs(p), model::build_hs0(p),
                                                   cfg.ref.ecor_steps, cfg.ref.ecor_max_doublings, model::doublon_operator());
            ecor.add_row({format_real(U), format_real(r.e_cor), format_real(r.min_overlap)});
        } catch (const NumericalError& e) {
            ecor.add_row({format_real(U), "", ""});
            warnings.push_back({{"output", "ecor.csv"}, {"U", U}, {"error", e.what()}});
            std::cerr << "warning: E_cor U=" << U << ": " << e.what() << '\n';
        }
    }
    delta.write(dir / "deltaF.csv", params);
    ecor.write(dir / "ecor.csv", params);
    outputs.push_back("deltaF.csv");
    outputs.push_back("ecor.csv");
    write_manifest(dir, params,
                   {{"command", "refmodel"}, {"outputs", outputs}, {"warnings", warnings},
                    {"status", warnings.empty() ? "ok" : "flagged"}, {"wall_seconds", seconds_since(start)}});
    std::cout << "wrote reference-model tables into " << dir.string() << '\n';
    return 0;
}

int cmd_check(const CommandOptions& opts) {
    const auto cfg = load_config(opts.config_path, opts.overrides);
    const auto dir = resolve_output(opts, cfg, "check");
    const auto start = Clock::now();

    struct Check {
        std::string name;
        double value;
        double threshold;
        bool pass;
    };
    std::vector<Check> checks;
    const auto qs = model::build_coupling_ops();
    const CMatrix hs = model::build_hs(cfg.model);
    const CMatrix vs = model::build_vs(cfg.model);

    CMatrix sum = CMatrix::Zero(4, 4);
    for (const auto& q : qs) sum += q;
    const double partition = (sum - CMatrix::Identity(4, 4)).norm();
    checks.push_back({"coupling_partition_of_unity", partition, 1e-14, partition <= 1e-14});

    double v_comm = 0.0;
    double h_comm = std::numeric_limits<double>::infinity();
    for (const auto& q : qs) {
        v_comm = std::max(v_comm, model::commutator_norm(vs, q));
        h_comm = std::min(h_comm, model::commutator_norm(hs, q));
    }
    checks.push_back({"residual_commutes_with_couplings", v_comm, 1e-14, v_comm <= 1e-14});
    checks.push_back({"hamiltonian_noncommuting_with_couplings", h_comm, 1e-8, h_comm > 1e-8});

    const double U = cfg.model.U;
    const double t0 = cfg.model.t0;
    const double root = std::sqrt(U * U + 16.0 * t0 * t0);
    RVector closed(4);
    closed << 0.5 * (U - root), 0.0, U, 0.5 * (U + root);
    std::sort(closed.data(), closed.data() + 4);
    const double eig_defect = (model::sector_eigensystem(hs).values - closed).cwiseAbs().maxCoeff();
    checks.push_back({"hubbard_closed_form_eigenvalues", eig_defect, 1e-10, eig_defect <= 1e-10});

    {
        std::vector<std::vector<double>> purities;
        for (double u : {0.0, 6.0}) {
            auto p = cfg.model;
            p.U = u;
            const auto model = heom::hubbard_holstein(p, cfg.heom.K, heom::HamiltonianKind::HartreeFock);
            const auto traj = heom::propagate(model, model::initial_state(model.hamiltonian), cfg.heom);
            std::vector<double> series;
            for (const auto& rho : traj.states) series.push_back(obs::purity(rho));
            purities.push_back(std::move(series));
        }
        double dev = 0.0;
        for (std::size_t k = 0; k < purities[0].size(); ++k) dev = std::max(dev, std::abs(purities[0][k] - purities[1][k]));
        checks.push_back({"hartree_fock_purity_U_independent", dev, 1e-8, dev <= 1e-8});
    }
    {
        model::ModelParams p = cfg.model;
        p.eta = 0.02;
        heom::HeomConfig hc;
        hc.K = 2;
        hc.L = 8;
        hc.dt = 0.02;
        hc.t_max = 10.0 / p.gamma;
        hc.record_stride = 10;
        const auto model = ref::dephasing_model(p, hc.K);
        const CMatrix rho0 = CMatrix::Constant(2, 2, 0.5);
        const auto traj = heom::propagate(model, rho0, hc);
        const auto exact = ref::analytic_dephasing(p, traj.times);
        double worst = 0.0;
        for (std::size_t k = 0; k < exact.size(); ++k)
            worst = std::max(worst, std::abs(std::abs(traj.states[k](0, 1)) / 0.5 - exact[k]) / exact[k]);
        checks.push_back({"dephasing_oracle_relative_error", worst, 1e-3, worst < 1e-3});
    }

    CsvTable table({"check", "value", "threshold", "pass"});
    bool all = true;
    for (const auto& c : checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << format_real(c.value)
                  << " threshold=" << format_real(c.threshold) << '\n';
        table.add_row({c.name, format_real(c.value), format_real(c.threshold), c.pass ? "1" : "0"});
        all = all && c.pass;
    }
    const auto params = provenance(cfg, "check");
    table.write(dir / "check.csv", params);
    write_manifest(dir, params,
                   {{"command", "check"}, {"outputs", {"check.csv"}}, {"status", all ? "ok" : "failed"},
                    {"wall_seconds", seconds_since(start)}});
    return all ? 0 : 4;
}

} // namespace hhdeco::cli
