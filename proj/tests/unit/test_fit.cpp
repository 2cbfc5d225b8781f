#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hhdeco/analysis.hpp"
#include "hhdeco/model.hpp"

using namespace hhdeco;
using namespace hhdeco::analysis;

namespace {

struct Synthetic {
    std::vector<double> t, y;
};

Synthetic sample(double asym, std::vector<ExpTerm> terms, double t_end, int n) {
    Synthetic s;
    for (int k = 0; k < n; ++k) {
        const double t = t_end * k / (n - 1);
        double y = asym;
        for (const auto& e : terms) y += e.amplitude * std::exp(-t / e.tau);
        s.t.push_back(t);
        s.y.push_back(y);
    }
    return s;
}

void check_terms(const ExpFitResult& r, const std::vector<ExpTerm>& expect, double rel) {
    REQUIRE(r.terms.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(r.terms[i].amplitude == doctest::Approx(expect[i].amplitude).epsilon(rel));
        CHECK(r.terms[i].tau == doctest::Approx(expect[i].tau).epsilon(rel));
    }
}

} // namespace

TEST_CASE("biexponential recovery with a free asymptote") {
    const std::vector<ExpTerm> truth{{0.6, 2.0}, {-0.2, 15.0}};
    const auto s = sample(0.3, truth, 100.0, 2000);
    FitConfig c;
    c.n_terms = 2;
    c.asymptote_mode = AsymptoteMode::Free;
    const auto r = fit_exponentials(s.t, s.y, c);
    CHECK(r.converged);
    CHECK(r.asymptote == doctest::Approx(0.3).epsilon(0.01));
    check_terms(r, truth, 0.01);
}

TEST_CASE("triexponential recovery") {
    const std::vector<ExpTerm> truth{{0.5, 0.8}, {-0.3, 6.0}, {0.15, 40.0}};
    const auto s = sample(0.45, truth, 300.0, 3000);
    for (auto mode : {AsymptoteMode::Fixed, AsymptoteMode::Free}) {
        FitConfig c;
        c.n_terms = 3;
        c.asymptote_mode = mode;
        c.fixed_asymptote = 0.45;
        const auto r = fit_exponentials(s.t, s.y, c);
        CHECK(r.converged);
        CHECK(r.asymptote == doctest::Approx(0.45).epsilon(0.01));
        check_terms(r, truth, 0.01);
        CHECK(r.residual_rms < 1e-6);
    }
}

TEST_CASE("tail average of a decayed series") {
    const auto s = sample(0.3, {{0.6, 2.0}, {-0.2, 15.0}, {0.1, 5.0}}, 400.0, 4000);
    FitConfig c;
    const auto est = thermal_asymptote(s.y, c);
    CHECK(est.value == doctest::Approx(0.3).epsilon(1e-3));
    CHECK_FALSE(est.warning);
    const auto young = sample(0.0, {{0.6, 10.0}}, 10.0, 200);
    CHECK(thermal_asymptote(young.y, c).warning);
}

TEST_CASE("fixed asymptote from the Gibbs state") {
    const CMatrix hs = model::build_hs(model::ModelParams{});
    const double gibbs = obs::purity(obs::gibbs_state(hs, 1.0));
    FitConfig c;
    c.asymptote_mode = AsymptoteMode::Fixed;
    c.fixed_asymptote = gibbs;
    const auto s = sample(gibbs, {{0.4, 3.0}}, 50.0, 500);
    const auto r = fit_exponentials(s.t, s.y, c);
    CHECK(r.asymptote == gibbs);
    check_terms(r, {{0.4, 3.0}}, 1e-6);
}

TEST_CASE("deterministic for a fixed seed") {
    const auto s = sample(0.2, {{0.7, 1.0}, {0.1, 9.0}}, 60.0, 600);
    FitConfig c;
    c.n_terms = 2;
    const auto a = fit_exponentials(s.t, s.y, c);
    const auto b = fit_exponentials(s.t, s.y, c);
    REQUIRE(a.terms.size() == b.terms.size());
    for (std::size_t i = 0; i < a.terms.size(); ++i) {
        CHECK(a.terms[i].tau == b.terms[i].tau);
        CHECK(a.terms[i].amplitude == b.terms[i].amplitude);
    }
}

TEST_CASE("rejects bad input") {
    FitConfig c;
    c.n_terms = 3;
    const auto s = sample(0.0, {{1.0, 1.0}}, 10.0, 20);
    CHECK_THROWS_AS(fit_exponentials(s.t, s.y, c), std::invalid_argument);
    c.n_terms = 4;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    std::vector<double> t{0.0, 1.0}, y{1.0};
    CHECK_THROWS_AS(fit_exponentials(t, y, FitConfig{}), std::invalid_argument);
}

TEST_CASE("density-matrix element fits") {
    obs::ObservableSeries s;
    for (int k = 0; k <= 400; ++k) {
        const double t = 0.25 * k;
        CMatrix r = CMatrix::Zero(4, 4);
        r(0, 0) = 0.6 - 0.1 * std::exp(-t / 20.0);
        r(1, 1) = 0.4 + 0.1 * std::exp(-t / 20.0);
        r(0, 1) = std::polar(0.5 * std::exp(-t / 12.0), 0.7 * t);
        r(1, 0) = std::conj(r(0, 1));
        s.times.push_back(t);
        s.purity.push_back(obs::purity(r));
        s.energy.push_back(0.0);
        s.cumulant.push_back(0.0);
        s.elements.push_back(r);
    }
    ElementFitConfig c;
    c.fit.asymptote_mode = AsymptoteMode::Free;
    const auto fits = fit_density_matrix_elements(s, c);
    CHECK(fits.size() == 10);
    for (const auto& f : fits) {
        CHECK(f.error.empty());
        if (f.i == 0 && f.j == 1) {
            CHECK(f.decays);
            CHECK(f.amplitude() == doctest::Approx(0.5).epsilon(1e-4));
            CHECK(f.tau() == doctest::Approx(12.0).epsilon(1e-4));
        } else if (f.i == 0 && f.j == 0) {
            CHECK(f.amplitude() == doctest::Approx(-0.1).epsilon(1e-3));
            CHECK(f.tau() == doctest::Approx(20.0).epsilon(1e-3));
        } else if (f.i == 0 && f.j == 2) {
            CHECK_FALSE(f.decays);
            CHECK(f.amplitude() == 0.0);
            CHECK(std::isnan(f.tau()));
        }
    }
    const auto re = element_series(s, 0, 1, ElementScalar::Real);
    CHECK(re[1] == doctest::Approx(s.elements[1](0, 1).real()));
}

TEST_CASE("term selection keeps only resolvable, useful terms") {
    FitConfig c;
    c.n_terms = 3;
    c.select_terms = true;
    c.asymptote_mode = AsymptoteMode::Fixed;
    c.fixed_asymptote = 0.3;
    const auto two = sample(0.3, {{0.6, 2.0}, {-0.2, 15.0}}, 100.0, 2000);
    const auto r2 = fit_exponentials(two.t, two.y, c);
    check_terms(r2, {{0.6, 2.0}, {-0.2, 15.0}}, 0.01);
    CHECK(std::any_of(r2.warnings.begin(), r2.warnings.end(),
                      [](const std::string& w) { return w.find("3-term fit rejected") != std::string::npos; }));

    const std::vector<ExpTerm> truth{{0.5, 0.8}, {-0.3, 6.0}, {0.15, 40.0}};
    const auto three = sample(0.3, truth, 300.0, 3000);
    check_terms(fit_exponentials(three.t, three.y, c), truth, 0.01);

    c.min_rms_gain = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
