// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hhdeco/analysis.hpp"
#include "hhdeco/error.hpp"
#include "hhdeco/heom/heom.hpp"
#include "hhdeco/model.hpp"
#include "hhdeco/observables.hpp"
#include "hhdeco/refmodels.hpp"
#include "oracles/quadrature.hpp"

using namespace hhdeco;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass{true};
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [failed]");
    }
};

std::string num(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

int failures = 0;

void run(int id, const std::string& title, double budget_s, const std::function<void(Verdict&)>& body) {
    const auto start = Clock::now();
    Verdict v;
    try {
        body(v);
    } catch (const std::exception& e) {
        v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (budget_s > 0.0) v.require(secs < budget_s, "runtime " + num(secs, 3) + " s < " + num(budget_s, 4) + " s");
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << title << "): " << v.detail.str() << std::endl;
}

model::ModelParams params(double U, double eta) {
    model::ModelParams p;
    p.U = U;
    p.eta = eta;
    return p;
}

// Production truncation per coupling strength.
heom::HeomConfig production(double eta) {
    heom::HeomConfig c;
    c.dt = 0.02;
    c.record_stride = 5;
    if (eta < 1.0) {
        c.K = 2;
        c.L = 4;
        c.t_max = 500.0;
    } else {
        c.K = 1;
        c.L = 8;
        c.t_max = 40.0;
    }
    return c;
}

struct Cell {
    double U, eta;
    heom::HeomConfig config;
    heom::Trajectory traj;
    obs::ObservableSeries series;
};

Cell run_cell(double U, double eta) {
    Cell cell{U, eta, production(eta), {}, {}};
    const auto model = heom::hubbard_holstein(params(U, eta), cell.config.K);
    cell.traj = heom::propagate(model, model::initial_state(model.hamiltonian), cell.config);
    cell.series = obs::compute_series(cell.traj, model.hamiltonian);
    return cell;
}

double tail_mean(const std::vector<double>& y, double fraction = 0.2) {
    const auto n = y.size();
    const auto begin = n - std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(n)));
    double s = 0.0;
    for (auto k = begin; k < n; ++k) s += y[k];
    return s / static_cast<double>(n - begin);
}

double rho12_tau(const Cell& c) {
    for (const auto& f : analysis::fit_density_matrix_elements(c.series))
        if (f.i == 0 && f.j == 1) {
            if (!f.error.empty()) throw NumericalError("rho12 fit failed: " + f.error);
            return f.tau();
        }
    throw NumericalError("rho12 fit missing");
}

analysis::ExpFitResult purity_fit(const Cell& c) {
    analysis::FitConfig fc;
    fc.n_terms = 3;
    fc.select_terms = true;
    return analysis::fit_exponentials(c.series.times, c.series.purity, fc);
}

std::string describe(const analysis::ExpFitResult& r) {
    std::string s = "[";
    for (std::size_t i = 0; i < r.terms.size(); ++i)
        s += (i ? ", " : "") + std::string("a") + std::to_string(i + 1) + "=" + num(r.terms[i].amplitude) + " tau" +
             std::to_string(i + 1) + "=" + num(r.terms[i].tau);
    return s + ", P_inf=" + num(r.asymptote) + "]";
}

bool within_rel(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

} // namespace

int main() {
    std::map<std::pair<double, double>, Cell> cells;

    run(1, "dephasing oracle", 120.0, [](Verdict& v) {
        auto p = params(0.0, 0.02);
        heom::HeomConfig c;
        c.K = 2;
        c.L = 8;
        c.dt = 0.02;
        c.t_max = 10.0 / p.gamma;
        c.record_stride = 5;
        const auto model = ref::dephasing_model(p, c.K);
        const auto traj = heom::propagate(model, CMatrix::Constant(2, 2, 0.5), c);
        const auto exact = ref::analytic_dephasing(p, traj.times);
        double worst = 0.0;
        for (std::size_t k = 0; k < exact.size(); ++k)
            worst = std::max(worst, std::abs(2.0 * std::abs(traj.states[k](0, 1)) - exact[k]) / exact[k]);
        v.require(worst < 1e-3, "max relative error " + num(worst, 3) + " < 1e-3 over t in [0, 10/gamma] at K=2 L=8");
    });

    run(2, "mean-field purity independent of U", 300.0, [](Verdict& v) {
        heom::HeomConfig c;
        c.K = 1;
        c.L = 6;
        c.dt = 0.02;
        c.t_max = 40.0;
        c.record_stride = 5;
        std::vector<std::vector<double>> purity;
        for (double U : {0.0, 6.0}) {
            const auto model = heom::hubbard_holstein(params(U, 2.0), c.K, heom::HamiltonianKind::HartreeFock);
            const auto traj = heom::propagate(model, model::initial_state(model.hamiltonian), c);
            std::vector<double> p;
            for (const auto& rho : traj.states) p.push_back(obs::purity(rho));
            purity.push_back(std::move(p));
        }
        double dev = 0.0;
        for (std::size_t k = 0; k < purity[0].size(); ++k) dev = std::max(dev, std::abs(purity[0][k] - purity[1][k]));
        v.require(dev < 1e-8, "max |P(U=0) - P(U=6)| = " + num(dev, 3) + " < 1e-8 (eta=2, t<=40)");
    });

    run(3, "rho12 decoherence times", 1800.0, [&](Verdict& v) {
        const std::map<std::pair<double, double>, double> target{
            {{0.1, 0.0}, 12.82}, {{0.1, 6.0}, 10.91}, {{2.0, 0.0}, 1.244}, {{2.0, 6.0}, 7.679}};
        std::map<std::pair<double, double>, double> tau;
        for (const auto& [key, ref_tau] : target) {
            auto cell = run_cell(key.second, key.first);
            tau[key] = rho12_tau(cell);
            v.require(within_rel(tau[key], ref_tau, 0.25), "eta=" + num(key.first) + " U=" + num(key.second) + " tau=" +
                                                                 num(tau[key]) + " vs " + num(ref_tau) + " (K=" +
                                                                 std::to_string(cell.config.K) + " L=" +
                                                                 std::to_string(cell.config.L) + ")");
            cells.emplace(key, std::move(cell));
        }
        v.require(tau[{0.1, 6.0}] < tau[{0.1, 0.0}], "tau falls with U at eta=0.1");
        v.require(tau[{2.0, 6.0}] > tau[{2.0, 0.0}], "tau grows with U at eta=2");
    });

    run(4, "purity fit timescales", 0.0, [&](Verdict& v) {
        const auto& strong = cells.at({2.0, 0.0});
        const auto& weak = cells.at({0.1, 0.0});
        const auto fs = purity_fit(strong);
        const auto fw = purity_fit(weak);
        v.require(!fs.terms.empty() && std::abs(fs.terms[0].amplitude - 0.846) <= 0.1 && within_rel(fs.terms[0].tau, 0.63, 0.3),
                  "eta=2 U=0 " + describe(fs) + " vs a1=0.846 tau1=0.63");
        v.require(!fw.terms.empty() && within_rel(fw.terms[0].tau, 9.30, 0.3) && fw.terms.size() >= 2 &&
                      fw.terms[1].amplitude < 0.0,
                  "eta=0.1 U=0 " + describe(fw) + " vs tau1=9.30 with a2<0");
    });

    run(5, "structural invariants", 60.0, [](Verdict& v) {
        const auto qs = model::build_coupling_ops();
        CMatrix sum = CMatrix::Zero(4, 4);
        for (const auto& q : qs) sum += q;
        v.require((sum - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0, "sum of couplings is the identity");
        double vq = 0.0, hq = 1e300, eig = 0.0;
        for (double U : {0.0, 1.0, 2.5, 6.0}) {
            const auto p = params(U, 0.0);
            for (const auto& q : qs) {
                vq = std::max(vq, model::commutator_norm(model::build_vs(p), q));
                hq = std::min(hq, model::commutator_norm(model::build_hs(p), q));
            }
            const double r = std::sqrt(U * U + 16.0);
            std::vector<double> closed{0.5 * (U - r), 0.0, U, 0.5 * (U + r)};
            std::sort(closed.begin(), closed.end());
            const auto es = model::sector_eigensystem(model::build_hs(p));
            for (int i = 0; i < 4; ++i) eig = std::max(eig, std::abs(es.values(i) - closed[static_cast<std::size_t>(i)]));
        }
        v.require(vq == 0.0, "[V, Q_m] = 0");
        v.require(hq > 0.0, "min ||[H, Q_m]|| = " + num(hq) + " > 0");
        v.require(eig < 1e-10, "closed-form eigenvalue error " + num(eig, 3));

        const auto p0 = params(0.0, 0.0);
        const std::vector<double> w{0.5, 0.5, 0.0, 0.0};
        const double ecor = ref::correlation_energy(w, model::build_hs(p0), model::build_hs0(p0), 200, 6,
                                                    model::doublon_operator()).e_cor;
        v.require(std::abs(ecor) == 0.0, "E_cor(U=0) = " + num(ecor));

        std::vector<double> grid;
        for (int k = 0; k <= 240; ++k) grid.push_back(-6.0 + 0.05 * k);
        double nac_max = 0.0, pes_gap = 0.0;
        for (double U : {0.0, 6.0}) {
            ref::SingleModeModel m;
            m.base = params(U, 2.0);
            for (int mode : {1, 2}) {
                m.active_modes = {mode};
                for (double d : ref::nac(m, mode, grid).d12) nac_max = std::max(nac_max, std::abs(d));
            }
            m.active_modes = {3};
            const auto a = ref::bo_pes(m, 3, grid).energies;
            m.active_modes = {4};
            const auto b = ref::bo_pes(m, 4, grid).energies;
            pes_gap = std::max(pes_gap, (a - b).cwiseAbs().maxCoeff());
        }
        v.require(nac_max < 1e-10, "max NAC along x1, x2 = " + num(nac_max, 3));
        v.require(pes_gap < 1e-12, "max |E(x3) - E(x4)| = " + num(pes_gap, 3));
    });

    run(6, "property suites", 0.0, [&](Verdict& v) {
        bool diag_ok = true;
        double p_min = 1.0, p_max = 0.0, cum_max = -1e300;
        for (const auto& [key, cell] : cells) {
            diag_ok = diag_ok && cell.traj.diagnostics.within_tolerance();
            for (double p : cell.series.purity) {
                p_min = std::min(p_min, p);
                p_max = std::max(p_max, p);
            }
            for (double c : cell.series.cumulant) cum_max = std::max(cum_max, c);
        }
        v.require(!cells.empty() && diag_ok, "trace/Hermiticity/positivity on every recorded step");
        v.require(p_min >= 0.25 - 1e-6 && p_max <= 1.0 + 1e-8, "purity in [" + num(p_min) + ", " + num(p_max, 12) + "]");

        double det = 0.0;
        for (int i = 0; i < 4; ++i) {
            const CVector e = CVector::Unit(4, i);
            det = std::max(det, std::abs(obs::cumulant_trace(obs::one_body_rdm(e * e.adjoint()))));
        }
        const CVector ground = model::sector_eigensystem(model::build_hs(params(0.0, 0.0))).vectors.col(0);
        det = std::max(det, std::abs(obs::cumulant_trace(obs::one_body_rdm(ground * ground.adjoint()))));
        std::mt19937_64 rng(20240611);
        std::normal_distribution<double> g;
        for (int k = 0; k < 200; ++k) {
            CMatrix a(4, 4);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) a(i, j) = {g(rng), g(rng)};
            CMatrix rho = a * a.adjoint();
            rho /= rho.trace().real();
            cum_max = std::max(cum_max, obs::cumulant_trace(obs::one_body_rdm(rho)));
        }
        v.require(det < 1e-12, "cumulant on determinants " + num(det, 3));
        v.require(cum_max <= 1e-12, "max cumulant " + num(cum_max, 3) + " <= 0");

        double fit_err = 0.0;
        const std::vector<std::vector<analysis::ExpTerm>> truths{{{0.5, 0.8}, {-0.3, 6.0}, {0.15, 40.0}},
                                                                 {{0.846, 0.63}, {-0.225, 6.54}, {0.02, 30.0}}};
        for (const auto& truth : truths) {
            std::vector<double> t, y;
            for (int k = 0; k < 3000; ++k) {
                t.push_back(0.1 * k);
                double val = 0.45;
                for (const auto& e : truth) val += e.amplitude * std::exp(-t.back() / e.tau);
                y.push_back(val);
            }
            analysis::FitConfig fc;
            fc.n_terms = 3;
            fc.asymptote_mode = analysis::AsymptoteMode::Free;
            const auto r = analysis::fit_exponentials(t, y, fc);
            for (std::size_t i = 0; i < truth.size(); ++i) {
                fit_err = std::max(fit_err, std::abs(r.terms.at(i).amplitude / truth[i].amplitude - 1.0));
                fit_err = std::max(fit_err, std::abs(r.terms.at(i).tau / truth[i].tau - 1.0));
            }
        }
        v.require(fit_err < 0.01, "synthetic triexponential worst relative error " + num(fit_err, 3));

        double schmidt = 0.0;
        for (int k = 0; k < 100; ++k) {
            CVector psi(4 * 31);
            for (auto& z : psi) z = {g(rng), g(rng)};
            psi.normalize();
            schmidt = std::max(schmidt, std::abs(ref::schmidt_purity(psi) - oracle::partial_trace_purity(psi, 4)));
        }
        v.require(schmidt < 1e-12, "Schmidt vs partial trace " + num(schmidt, 3));

        auto cfg = production(2.0);
        cfg.t_max = 10.0;
        const auto model = heom::hubbard_holstein(params(0.0, 2.0), cfg.K);
        const CMatrix rho0 = model::initial_state(model.hamiltonian);
        const auto coarse = heom::propagate(model, rho0, cfg);
        cfg.dt /= 2.0;
        cfg.record_stride *= 2;
        const auto fine = heom::propagate(model, rho0, cfg);
        double drift = 0.0;
        for (std::size_t k = 0; k < coarse.states.size(); ++k)
            drift = std::max(drift, std::abs(obs::purity(coarse.states[k]) - obs::purity(fine.states.at(k))));
        v.require(drift < 1e-6, "dt-halving purity drift " + num(drift, 3) + " (eta=2, K=1, L=8, t<=10)");
    });

    run(7, "cumulant deepens with coupling", 0.0, [&](Verdict& v) {
        const double strong = tail_mean(cells.at({2.0, 6.0}).series.cumulant);
        const double weak = tail_mean(cells.at({0.1, 6.0}).series.cumulant);
        v.require(strong < weak, "U=6 tail averages: eta=2 " + num(strong) + " < eta=0.1 " + num(weak));
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
