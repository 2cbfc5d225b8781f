#include <doctest.h>

#include <cmath>
#include <random>

#include "hhdeco/error.hpp"
#include "hhdeco/model.hpp"
#include "hhdeco/observables.hpp"
#include "oracles/fermions.hpp"

using namespace hhdeco;
using namespace hhdeco::obs;

namespace {

model::ModelParams params(double U) {
    model::ModelParams p;
    p.U = U;
    return p;
}

CMatrix random_density(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CMatrix a(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) a(i, j) = {g(rng), g(rng)};
    CMatrix rho = a * a.adjoint();
    return rho / rho.trace().real();
}

CMatrix projector(const CVector& v) { return v * v.adjoint(); }

} // namespace

TEST_CASE("purity bounds and extremes") {
    CHECK(purity(CMatrix::Identity(4, 4) / 4.0) == doctest::Approx(0.25));
    const CMatrix hs = model::build_hs(params(0.0));
    CHECK(purity(model::initial_state(hs)) == doctest::Approx(1.0));
    std::mt19937_64 rng(3);
    for (int k = 0; k < 50; ++k) {
        const double p = purity(random_density(rng));
        CHECK(p >= 0.25 - 1e-12);
        CHECK(p <= 1.0 + 1e-12);
    }
}

TEST_CASE("electronic energy") {
    const CMatrix hs = model::build_hs(params(0.0));
    CHECK(electronic_energy(model::initial_state(hs), hs) == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(std::abs(electronic_energy(CMatrix::Identity(4, 4) / 4.0, hs)) < 1e-15);
    const double beta = 1.0;
    const CMatrix g = gibbs_state(hs, beta);
    const double e[] = {-2.0, 0.0, 0.0, 2.0};
    double z = 0.0, num = 0.0;
    for (double x : e) {
        z += std::exp(-beta * x);
        num += x * std::exp(-beta * x);
    }
    CHECK(electronic_energy(g, hs) == doctest::Approx(num / z).epsilon(1e-13));
}

TEST_CASE("Gibbs purity by spectral sum") {
    const CMatrix g = gibbs_state(model::build_hs(params(0.0)), 1.0);
    const double w[] = {std::exp(2.0), 1.0, 1.0, std::exp(-2.0)};
    double z = 0.0, sq = 0.0;
    for (double x : w) z += x;
    for (double x : w) sq += (x / z) * (x / z);
    CHECK(purity(g) == doctest::Approx(sq).epsilon(1e-13));
    CHECK(purity(gibbs_state(model::build_hs(params(0.0)), 200.0)) == doctest::Approx(1.0));
}

TEST_CASE("one-body density matrix") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k) {
        const CMatrix rho = random_density(rng);
        const oracle::Mat4 ref = oracle::one_body_rdm(rho);
        CHECK((one_body_rdm(rho) - CMatrix(ref)).norm() < 1e-13);
        CHECK(std::abs(one_body_rdm(rho).trace() - 2.0) < 1e-13);
    }

    const auto es = model::sector_eigensystem(model::build_hs(params(0.0)));
    const CMatrix ground = projector(es.vectors.col(0));
    Eigen::SelfAdjointEigenSolver<CMatrix> occ(one_body_rdm(ground));
    CHECK(occ.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(occ.eigenvalues()(1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(occ.eigenvalues()(2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(occ.eigenvalues()(3) == doctest::Approx(1.0).epsilon(1e-12));

    CMatrix ionic = CMatrix::Zero(4, 4);
    ionic(0, 0) = ionic(1, 1) = 0.5;
    CHECK((one_body_rdm(ionic) - 0.5 * CMatrix::Identity(4, 4)).norm() < 1e-14);

    const CMatrix triplet = projector(es.vectors.col(1));
    const CMatrix gt = one_body_rdm(triplet);
    CHECK((gt - CMatrix(oracle::one_body_rdm(triplet))).norm() < 1e-13);
    CHECK((gt.diagonal() - 0.5 * CVector::Ones(4)).norm() < 1e-13);
}

TEST_CASE("cumulant trace") {
    const auto es = model::sector_eigensystem(model::build_hs(params(0.0)));
    CHECK(std::abs(cumulant_trace(one_body_rdm(projector(es.vectors.col(0))))) < 1e-13);
    // every single Fock determinant is uncorrelated
    for (int i = 0; i < 4; ++i) CHECK(std::abs(cumulant_trace(one_body_rdm(projector(CVector::Unit(4, i))))) < 1e-15);
    CHECK(cumulant_trace(0.5 * CMatrix::Identity(4, 4)) == doctest::Approx(-1.0));
    CMatrix g = CMatrix::Zero(4, 4);
    g.diagonal() << 1.0, 0.5, 0.5, 0.0;
    CHECK(cumulant_trace(g) == doctest::Approx(-0.5));
    std::mt19937_64 rng(9);
    for (int k = 0; k < 50; ++k) CHECK(cumulant_trace(one_body_rdm(random_density(rng))) <= 1e-12);
}

TEST_CASE("eigenbasis elements") {
    const CMatrix hs = model::build_hs(params(6.0));
    const CMatrix r = eigenbasis_elements(model::initial_state(hs), hs);
    CHECK(r(0, 0).real() == doctest::Approx(0.5));
    CHECK(r(1, 1).real() == doctest::Approx(0.5));
    CHECK(std::abs(r(0, 1)) == doctest::Approx(0.5));
    CHECK(std::abs(r(2, 2)) < 1e-14);
}

TEST_CASE("series validation") {
    ObservableSeries s;
    s.times = {0.0, 1.0};
    s.purity = {1.0};
    CHECK_THROWS(s.validate());
}
