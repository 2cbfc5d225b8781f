#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "hhdeco/error.hpp"
#include "hhdeco/refmodels.hpp"

namespace hhdeco::ref {

TrackedBasis track_eigenbasis(const CMatrix& prev, const CMatrix& h, double degeneracy_tol) {
    const auto n = h.rows();
    if (h.cols() != n || prev.rows() != n || prev.cols() != n)
        throw std::invalid_argument("track_eigenbasis: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()));
    const RVector& e = es.eigenvalues();
    const CMatrix& v = es.eigenvectors();

    std::vector<Eigen::Index> start{0};
    for (Eigen::Index k = 1; k < n; ++k)
        if (e(k) - e(k - 1) >= degeneracy_tol) start.push_back(k);
    start.push_back(n);
    const auto n_clusters = start.size() - 1;

    const CMatrix overlap = prev.adjoint() * v;  // <prev_i|v_k>
    RMatrix weight = RMatrix::Zero(n, static_cast<Eigen::Index>(n_clusters));
    for (std::size_t c = 0; c < n_clusters; ++c)
        for (Eigen::Index k = start[c]; k < start[c + 1]; ++k)
            weight.col(static_cast<Eigen::Index>(c)) += overlap.col(k).cwiseAbs2();

    // greedy assignment of previous vectors to clusters by projected weight
    std::vector<std::tuple<double, Eigen::Index, std::size_t>> pairs;
    for (Eigen::Index i = 0; i < n; ++i)
        for (std::size_t c = 0; c < n_clusters; ++c) pairs.emplace_back(weight(i, static_cast<Eigen::Index>(c)), i, c);
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    std::vector<std::ptrdiff_t> cluster_of(static_cast<std::size_t>(n), -1);
    std::vector<Eigen::Index> capacity(n_clusters);
    for (std::size_t c = 0; c < n_clusters; ++c) capacity[c] = start[c + 1] - start[c];
    for (const auto& [w, i, c] : pairs) {
        if (cluster_of[static_cast<std::size_t>(i)] >= 0 || capacity[c] == 0) continue;
        cluster_of[static_cast<std::size_t>(i)] = static_cast<std::ptrdiff_t>(c);
        --capacity[c];
    }

    TrackedBasis out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        const Eigen::Index size = start[c + 1] - start[c];
        const auto block = v.middleCols(start[c], size);
        std::vector<Eigen::Index> members;
        for (Eigen::Index i = 0; i < n; ++i)
            if (cluster_of[static_cast<std::size_t>(i)] == static_cast<std::ptrdiff_t>(c)) members.push_back(i);
        std::stable_sort(members.begin(), members.end(), [&](Eigen::Index a, Eigen::Index b) {
            return weight(a, static_cast<Eigen::Index>(c)) > weight(b, static_cast<Eigen::Index>(c));
        });
        std::vector<CVector> chosen;
        for (Eigen::Index i : members) {
            CVector u = block * (block.adjoint() * prev.col(i));
            for (const auto& w : chosen) u -= w * w.dot(u);
            if (u.norm() < 1e-8) {
                for (Eigen::Index k = 0; k < size; ++k) {
                    u = block.col(k);
                    for (const auto& w : chosen) u -= w * w.dot(u);
                    if (u.norm() > 0.5) break;
                }
            }
            u.normalize();
            const cplx ov = prev.col(i).dot(u);
            if (std::abs(ov) > 0.0) u *= std::conj(ov) / std::abs(ov);
            chosen.push_back(u);
            out.vectors.col(i) = u;
            out.values(i) = size == 1 ? e(start[c]) : u.dot(h * u).real();
        }
    }
    for (Eigen::Index i = 0; i < n; ++i)
        out.min_overlap = std::min(out.min_overlap, std::abs(prev.col(i).dot(out.vectors.col(i))));
    return out;
}

namespace {

constexpr double kMaxTrackStep = 0.02;

// Tracked bases at every grid point, followed outward from x = 0.
std::vector<TrackedBasis> track_along(const SingleModeModel& m, int mode, std::span<const double> xs) {
    const auto origin = model::sector_eigensystem(clamped_hamiltonian(m, mode, 0.0));
    std::vector<TrackedBasis> out(xs.size());
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(xs[a]) < std::abs(xs[b]); });
    for (int side : {1, -1}) {
        TrackedBasis cur{origin.values, origin.vectors, 1.0};
        double x = 0.0;
        for (std::size_t idx : order) {
            const double target = xs[idx];
            if (!std::isfinite(target)) throw std::invalid_argument("track_along: non-finite coordinate");
            if ((side > 0 && target < 0.0) || (side < 0 && target >= 0.0)) continue;
            const int sub = std::max(1, static_cast<int>(std::ceil(std::abs(target - x) / kMaxTrackStep)));
            for (int s = 1; s <= sub; ++s) {
                const double xs_ = x + (target - x) * s / sub;
                TrackedBasis next = track_eigenbasis(cur.vectors, clamped_hamiltonian(m, mode, xs_));
                next.min_overlap = std::min(next.min_overlap, cur.min_overlap);
                cur = std::move(next);
            }
            x = target;
            out[idx] = cur;
        }
    }
    return out;
}

} // namespace

PesCurve bo_pes(const SingleModeModel& m, int mode, std::span<const double> x_grid) {
    m.validate();
    PesCurve out;
    out.x.assign(x_grid.begin(), x_grid.end());
    out.energies.resize(static_cast<Eigen::Index>(x_grid.size()), model::kSectorDim);
    for (std::size_t k = 0; k < x_grid.size(); ++k) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(clamped_hamiltonian(m, mode, x_grid[k]), Eigen::EigenvaluesOnly);
        out.energies.row(static_cast<Eigen::Index>(k)) = es.eigenvalues().transpose();
    }
    return out;
}

PesCurve tracked_pes(const SingleModeModel& m, int mode, std::span<const double> x_grid) {
    m.validate();
    const auto tracked = track_along(m, mode, x_grid);
    PesCurve out;
    out.x.assign(x_grid.begin(), x_grid.end());
    out.energies.resize(static_cast<Eigen::Index>(x_grid.size()), model::kSectorDim);
    for (std::size_t k = 0; k < x_grid.size(); ++k) out.energies.row(static_cast<Eigen::Index>(k)) = tracked[k].values.transpose();
    return out;
}

NacCurve nac(const SingleModeModel& m, int mode, std::span<const double> x_grid, double h) {
    m.validate();
    if (!(h > 0.0)) throw std::invalid_argument("nac: step must be > 0");
    const auto tracked = track_along(m, mode, x_grid);
    const CMatrix dh = m.coupling() * model::build_coupling_ops()[static_cast<std::size_t>(mode - 1)];
    NacCurve out;
    out.x.assign(x_grid.begin(), x_grid.end());
    for (std::size_t k = 0; k < x_grid.size(); ++k) {
        const auto& t = tracked[k];
        const double x = x_grid[k];
        const CVector phi1 = t.vectors.col(0);
        const CVector plus = track_eigenbasis(t.vectors, clamped_hamiltonian(m, mode, x + h)).vectors.col(1);
        const CVector minus = track_eigenbasis(t.vectors, clamped_hamiltonian(m, mode, x - h)).vectors.col(1);
        out.d12.push_back(std::abs(phi1.dot((plus - minus) / (2.0 * h))));
        const double gap = t.values(1) - t.values(0);
        const bool flag = std::abs(gap) < 1e-8;
        out.flagged.push_back(flag);
        out.hellmann_feynman.push_back(flag ? std::numeric_limits<double>::quiet_NaN()
                                            : std::abs(phi1.dot(dh * t.vectors.col(1))) / std::abs(gap));
    }
    return out;
}

std::pair<RVector, RVector> gauss_hermite(int order) {
    if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    RMatrix jacobi = RMatrix::Zero(order, order);
    for (int k = 1; k < order; ++k) jacobi(k - 1, k) = jacobi(k, k - 1) = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<RMatrix> es(jacobi);
    RVector weights = std::sqrt(std::numbers::pi) * es.eigenvectors().row(0).transpose().array().square();
    return {es.eigenvalues(), weights};
}

namespace {
constexpr int kMaxOrderFactor = 8;
} // namespace

double delta_f_average(const SingleModeModel& m, int mode, int order, double h) {
    m.validate();
    if (order < 40) throw std::invalid_argument("delta_f_average: order must be >= 40");
    if (m.coupling() == 0.0) return 0.0;
    const double beta = m.base.beta;
    const double sigma = std::sqrt(1.0 / std::tanh(0.5 * beta * m.omega) / (2.0 * m.omega));

    auto average = [&](int n) {
        const auto [nodes, weights] = gauss_hermite(n);
        std::vector<double> xs(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) xs[static_cast<std::size_t>(k)] = std::sqrt(2.0) * sigma * nodes(k);
        const auto tracked = track_along(m, mode, xs);
        double sum = 0.0;
        for (int k = 0; k < n; ++k) {
            const auto& t = tracked[static_cast<std::size_t>(k)];
            const double x = xs[static_cast<std::size_t>(k)];
            const RVector up = track_eigenbasis(t.vectors, clamped_hamiltonian(m, mode, x + h)).values;
            const RVector dn = track_eigenbasis(t.vectors, clamped_hamiltonian(m, mode, x - h)).values;
            const double slope1 = (up(0) - dn(0)) / (2.0 * h);
            const double slope2 = (up(1) - dn(1)) / (2.0 * h);
            sum += weights(k) * (slope1 - slope2);
        }
        return sum / std::sqrt(std::numbers::pi);
    };
    double coarse = average(order);
    for (int n = 2 * order; n <= kMaxOrderFactor * order; n *= 2) {
        const double fine = average(n);
        if (std::abs(coarse - fine) <= 1e-6) return fine;
        coarse = fine;
    }
    std::ostringstream msg;
    msg.precision(10);
    msg << "delta_f_average: Gauss-Hermite rule did not settle to 1e-6 by order " << kMaxOrderFactor * order
        << " (last value " << coarse << ")";
    throw QuadratureError(msg.str());
}

} // namespace hhdeco::ref
