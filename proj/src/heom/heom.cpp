#include "hhdeco/heom/heom.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "hhdeco/error.hpp"

namespace hhdeco::heom {

void ElectronicModel::validate() const {
    const auto d = hamiltonian.rows();
    if (d == 0 || hamiltonian.cols() != d) throw std::invalid_argument("ElectronicModel: Hamiltonian must be square");
    if (couplings.size() != baths.size())
        throw std::invalid_argument("ElectronicModel: one bath expansion per coupling operator");
    if (hermiticity_defect(hamiltonian) > 1e-12) throw std::invalid_argument("ElectronicModel: Hamiltonian not Hermitian");
    for (const auto& q : couplings) {
        if (q.rows() != d || q.cols() != d) throw std::invalid_argument("ElectronicModel: coupling dimension mismatch");
        if (hermiticity_defect(q) > 1e-12) throw std::invalid_argument("ElectronicModel: coupling not Hermitian");
    }
    for (const auto& bath : baths)
        for (const auto& term : bath.terms)
            if (!(term.rate > 0.0)) throw std::invalid_argument("ElectronicModel: bath rates must be positive");
}

ElectronicModel hubbard_holstein(const model::ModelParams& params, int K, HamiltonianKind kind) {
    ElectronicModel m;
    m.hamiltonian = kind == HamiltonianKind::Full ? model::build_hs(params) : model::build_hs0(params);
    const auto qs = model::build_coupling_ops();
    const BathExpansion bath = expand_bath(params, K);
    for (const auto& q : qs) {
        m.couplings.push_back(q);
        m.baths.push_back(bath);
    }
    return m;
}

void HeomConfig::validate() const {
    if (K < 0) throw std::invalid_argument("HeomConfig: K must be >= 0");
    if (L < 1) throw std::invalid_argument("HeomConfig: L must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("HeomConfig: dt must be > 0");
    if (!(t_max >= dt)) throw std::invalid_argument("HeomConfig: t_max must be >= dt");
    if (record_stride < 1) throw std::invalid_argument("HeomConfig: record_stride must be >= 1");
    if (threads < 1) throw std::invalid_argument("HeomConfig: threads must be >= 1");
}

namespace {

bool is_diagonal(const CMatrix& q) {
    for (Eigen::Index c = 0; c < q.cols(); ++c)
        for (Eigen::Index r = 0; r < q.rows(); ++r)
            if (r != c && q(r, c) != cplx{0.0, 0.0}) return false;
    return true;
}

} // namespace

HeomGenerator::HeomGenerator(const ElectronicModel& model, std::shared_ptr<const Hierarchy> hierarchy,
                             bool use_scaling, bool use_terminator)
    : hierarchy_(std::move(hierarchy)), dim_(model.dim()), scaling_(use_scaling) {
    model.validate();
    if (!hierarchy_) throw std::invalid_argument("HeomGenerator: null hierarchy");

    for (std::size_t m = 0; m < model.baths.size(); ++m)
        for (const auto& term : model.baths[m].terms) {
            mode_bath_.push_back(static_cast<int>(m));
            amp_.push_back(term.amplitude);
            rate_.push_back(term.rate);
            active_.push_back(std::abs(term.amplitude) > 0.0);
        }
    n_modes_ = static_cast<int>(mode_bath_.size());
    if (n_modes_ != hierarchy_->n_modes())
        throw std::invalid_argument("HeomGenerator: hierarchy mode count does not match the bath expansions");

    diagonal_ = std::all_of(model.couplings.begin(), model.couplings.end(), is_diagonal);
    couplings_ = model.couplings;
    minus_i_h_ = -kI * model.hamiltonian;
    for (const auto& bath : model.baths) residual_.push_back(use_terminator ? bath.residual : 0.0);

    const int L = hierarchy_->depth();
    const auto stride = static_cast<std::size_t>(L) + 1;
    up_scale_.assign(static_cast<std::size_t>(n_modes_) * stride, 0.0);
    down_scale_.assign(static_cast<std::size_t>(n_modes_) * stride, 0.0);
    for (int j = 0; j < n_modes_; ++j) {
        if (!active_[static_cast<std::size_t>(j)]) continue;
        const double mag = std::abs(amp_[static_cast<std::size_t>(j)]);
        for (int n = 0; n <= L; ++n) {
            const auto at = static_cast<std::size_t>(j) * stride + static_cast<std::size_t>(n);
            up_scale_[at] = scaling_ ? std::sqrt((n + 1) * mag) : 1.0;
            down_scale_[at] = scaling_ ? std::sqrt(n / mag) : static_cast<double>(n);
        }
    }

    damping_.resize(hierarchy_->size());
    for (std::size_t a = 0; a < hierarchy_->size(); ++a) {
        const auto idx = hierarchy_->index(a);
        double g = 0.0;
        for (int j = 0; j < n_modes_; ++j) g += idx[static_cast<std::size_t>(j)] * rate_[static_cast<std::size_t>(j)];
        damping_[a] = g;
    }

    if (diagonal_) {
        self_ = CMatrix::Zero(dim_, dim_);
        for (std::size_t m = 0; m < couplings_.size(); ++m) {
            const CVector q = couplings_[m].diagonal();
            for (int b = 0; b < dim_; ++b)
                for (int a = 0; a < dim_; ++a) {
                    const cplx diff = q(a) - q(b);
                    self_(a, b) -= residual_[m] * diff * diff;
                }
        }
        for (int j = 0; j < n_modes_; ++j) {
            const CVector q = couplings_[static_cast<std::size_t>(mode_bath_[static_cast<std::size_t>(j)])].diagonal();
            const cplx c = amp_[static_cast<std::size_t>(j)];
            CMatrix up(dim_, dim_), down(dim_, dim_);
            for (int b = 0; b < dim_; ++b)
                for (int a = 0; a < dim_; ++a) {
                    up(a, b) = -kI * (q(a) - q(b));
                    down(a, b) = -kI * (c * q(a) - std::conj(c) * q(b));
                }
            up_coef_.push_back(std::move(up));
            down_coef_.push_back(std::move(down));
        }
    }
}

template <int D>
void HeomGenerator::apply_range_diagonal(const AdoStore& in, AdoStore& out, std::size_t begin,
                                         std::size_t end) const {
    using Mat = Eigen::Matrix<cplx, D, D>;
    using CMap = Eigen::Map<const Mat>;
    using Map = Eigen::Map<Mat>;
    const int d = dim_;
    const auto block = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
    const auto stride = static_cast<std::size_t>(hierarchy_->depth()) + 1;

    const Mat A = minus_i_h_;
    const Mat self = self_;
    std::vector<Mat> up(up_coef_.begin(), up_coef_.end());
    std::vector<Mat> down(down_coef_.begin(), down_coef_.end());

    const cplx* src = in.data().data();
    cplx* dst = out.data().data();
    for (std::size_t a = begin; a < end; ++a) {
        CMap rho(src + a * block, d, d);
        Map o(dst + a * block, d, d);
        o.noalias() = A * rho;
        o.noalias() -= rho * A;
        o.array() += (self.array() - damping_[a]) * rho.array();

        const auto idx = hierarchy_->index(a);
        for (int j = 0; j < n_modes_; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            if (!active_[ju]) continue;
            const std::size_t n = idx[ju];
            if (const auto lo = hierarchy_->lower(a, j); lo != Hierarchy::kNone) {
                CMap r(src + static_cast<std::size_t>(lo) * block, d, d);
                o.array() += down_scale_[ju * stride + n] * down[ju].array() * r.array();
            }
            if (const auto hi = hierarchy_->raise(a, j); hi != Hierarchy::kNone) {
                CMap r(src + static_cast<std::size_t>(hi) * block, d, d);
                o.array() += up_scale_[ju * stride + n] * up[ju].array() * r.array();
            }
        }
    }
}

void HeomGenerator::apply_range_dense(const AdoStore& in, AdoStore& out, std::size_t begin,
                                      std::size_t end) const {
    const auto stride = static_cast<std::size_t>(hierarchy_->depth()) + 1;
    CMatrix comm(dim_, dim_);
    for (std::size_t a = begin; a < end; ++a) {
        const auto rho = in.ado(a);
        auto o = out.ado(a);
        o.noalias() = minus_i_h_ * rho;
        o.noalias() -= rho * minus_i_h_;
        o -= damping_[a] * rho;
        for (std::size_t m = 0; m < couplings_.size(); ++m) {
            if (residual_[m] == 0.0) continue;
            const CMatrix& q = couplings_[m];
            comm.noalias() = q * rho;
            comm.noalias() -= rho * q;
            o.noalias() -= residual_[m] * (q * comm);
            o.noalias() += residual_[m] * (comm * q);
        }
        const auto idx = hierarchy_->index(a);
        for (int j = 0; j < n_modes_; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            if (!active_[ju]) continue;
            const CMatrix& q = couplings_[static_cast<std::size_t>(mode_bath_[ju])];
            const std::size_t n = idx[ju];
            if (const auto lo = hierarchy_->lower(a, j); lo != Hierarchy::kNone) {
                const auto r = in.ado(static_cast<std::size_t>(lo));
                const cplx c = amp_[ju];
                const cplx s = -kI * down_scale_[ju * stride + n];
                o.noalias() += (s * c) * (q * r);
                o.noalias() -= (s * std::conj(c)) * (r * q);
            }
            if (const auto hi = hierarchy_->raise(a, j); hi != Hierarchy::kNone) {
                const auto r = in.ado(static_cast<std::size_t>(hi));
                const cplx s = -kI * up_scale_[ju * stride + n];
                o.noalias() += s * (q * r);
                o.noalias() -= s * (r * q);
            }
        }
    }
}

void HeomGenerator::apply_range(const AdoStore& in, AdoStore& out, std::size_t begin, std::size_t end) const {
    if (!diagonal_) return apply_range_dense(in, out, begin, end);
    switch (dim_) {
        case 2: return apply_range_diagonal<2>(in, out, begin, end);
        case 4: return apply_range_diagonal<4>(in, out, begin, end);
        default: return apply_range_diagonal<Eigen::Dynamic>(in, out, begin, end);
    }
}

void HeomGenerator::apply(const AdoStore& in, AdoStore& out, int threads) const {
    if (&in.hierarchy() != hierarchy_.get() || &out.hierarchy() != hierarchy_.get())
        throw std::invalid_argument("HeomGenerator::apply: store built on a different hierarchy");
    if (in.dim() != dim_ || out.dim() != dim_) throw std::invalid_argument("HeomGenerator::apply: dimension mismatch");
    const std::size_t n = hierarchy_->size();
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || n < 4 * workers) {
        apply_range(in, out, 0, n);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([this, &in, &out, b, e] { apply_range(in, out, b, e); });
    }
}

AdoStore heom_rhs(const AdoStore& store, const CMatrix& hs, std::span<const CMatrix> couplings,
                  std::span<const BathExpansion> expansion, bool use_scaling, bool use_terminator) {
    ElectronicModel m{hs, {couplings.begin(), couplings.end()}, {expansion.begin(), expansion.end()}};
    if (m.dim() != store.dim()) throw std::invalid_argument("heom_rhs: dimension mismatch");
    HeomGenerator gen(m, store.shared_hierarchy(), use_scaling, use_terminator);
    AdoStore out(store.shared_hierarchy(), store.dim());
    gen.apply(store, out);
    return out;
}

bool TrajectoryDiagnostics::within_tolerance() const {
    return max_trace_defect < 1e-8 && max_hermiticity_defect < 1e-8 && min_eigenvalue > -1e-6;
}

namespace {

void axpy(std::span<cplx> y, double a, std::span<const cplx> x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void assign_axpy(std::span<cplx> out, std::span<const cplx> y, double a, std::span<const cplx> x) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[i] + a * x[i];
}

} // namespace

Trajectory propagate(const ElectronicModel& model, const CMatrix& rho0, const HeomConfig& config) {
    config.validate();
    model.validate();
    const int d = model.dim();
    if (rho0.rows() != d || rho0.cols() != d) throw std::invalid_argument("propagate: rho0 dimension mismatch");
    if (hermiticity_defect(rho0) > 1e-10) throw std::invalid_argument("propagate: rho0 not Hermitian");
    if (std::abs(rho0.trace() - 1.0) > 1e-10) throw std::invalid_argument("propagate: rho0 must have unit trace");
    {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(rho0, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10) throw std::invalid_argument("propagate: rho0 not positive semidefinite");
    }

    int n_modes = 0;
    for (const auto& bath : model.baths) n_modes += static_cast<int>(bath.terms.size());
    const std::size_t n_ado = Hierarchy::count(n_modes, config.L);
    const long double bytes = static_cast<long double>(n_ado) * d * d * sizeof(cplx) * 4.0L;
    if (bytes > static_cast<long double>(config.memory_cap))
        throw NumericalError("propagate: " + std::to_string(n_ado) + " ADOs exceed the memory cap");

    auto hierarchy = std::make_shared<const Hierarchy>(n_modes, config.L);
    const HeomGenerator gen(model, hierarchy, config.use_scaling, config.use_terminator);

    AdoStore y(hierarchy, d), acc(hierarchy, d), tmp(hierarchy, d), k(hierarchy, d);
    y.ado(0) = rho0;

    Trajectory traj;
    traj.diagnostics.n_ados = hierarchy->size();
    const auto n_steps = static_cast<std::size_t>(std::llround(config.t_max / config.dt));
    traj.diagnostics.steps = n_steps;
    const double dt = config.dt;

    auto record = [&](std::size_t step) {
        const CMatrix rho = y.ado(0);
        auto& diag = traj.diagnostics;
        const double norm = y.max_abs();
        diag.max_ado_norm = std::max(diag.max_ado_norm, norm);
        if (!std::isfinite(norm) || norm > config.divergence_threshold) {
            std::ostringstream msg;
            msg << "HEOM diverged at t = " << step * dt << " (max ADO norm " << norm
                << "); increase the hierarchy depth L or decrease dt";
            throw TruncationError(msg.str());
        }
        diag.max_trace_defect = std::max(diag.max_trace_defect, std::abs(rho.trace() - 1.0));
        diag.max_hermiticity_defect = std::max(diag.max_hermiticity_defect, hermiticity_defect(rho));
        Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
        diag.min_eigenvalue = std::min(diag.min_eigenvalue, es.eigenvalues().minCoeff());
        traj.times.push_back(static_cast<double>(step) * dt);
        traj.states.push_back(rho);
    };

    record(0);
    for (std::size_t step = 1; step <= n_steps; ++step) {
        gen.apply(y, k, config.threads);
        assign_axpy(acc.data(), y.data(), dt / 6.0, k.data());
        assign_axpy(tmp.data(), y.data(), dt / 2.0, k.data());
        gen.apply(tmp, k, config.threads);
        axpy(acc.data(), dt / 3.0, k.data());
        assign_axpy(tmp.data(), y.data(), dt / 2.0, k.data());
        gen.apply(tmp, k, config.threads);
        axpy(acc.data(), dt / 3.0, k.data());
        assign_axpy(tmp.data(), y.data(), dt, k.data());
        gen.apply(tmp, k, config.threads);
        axpy(acc.data(), dt / 6.0, k.data());
        std::swap(y, acc);
        if (step % static_cast<std::size_t>(config.record_stride) == 0 || step == n_steps) record(step);
    }
    return traj;
}

namespace {

std::vector<double> purity_series(const Trajectory& traj) {
    std::vector<double> p;
    p.reserve(traj.states.size());
    for (const auto& rho : traj.states) p.push_back((rho * rho).trace().real());
    return p;
}

double max_deviation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

SweepReport convergence_sweep(const std::function<ElectronicModel(int)>& build, const CMatrix& rho0,
                              const HeomConfig& base, const std::vector<int>& K_list,
                              const std::vector<int>& L_list, double tolerance) {
    if (K_list.empty() || L_list.empty()) throw std::invalid_argument("convergence_sweep: empty K or L list");
    SweepReport report;
    report.tolerance = tolerance;
    std::vector<std::vector<std::vector<double>>> series(K_list.size(), std::vector<std::vector<double>>(L_list.size()));
    for (std::size_t ik = 0; ik < K_list.size(); ++ik) {
        for (std::size_t il = 0; il < L_list.size(); ++il) {
            SweepCell cell;
            cell.K = K_list[ik];
            cell.L = L_list[il];
            HeomConfig cfg = base;
            cfg.K = cell.K;
            cfg.L = cell.L;
            const auto start = std::chrono::steady_clock::now();
            try {
                const Trajectory traj = propagate(build(cell.K), rho0, cfg);
                series[ik][il] = purity_series(traj);
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            cell.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (cell.ok && il > 0 && !series[ik][il - 1].empty())
                cell.deviation_from_previous_L = max_deviation(series[ik][il], series[ik][il - 1]);
            if (cell.ok && ik > 0 && !series[ik - 1][il].empty())
                cell.deviation_from_previous_K = max_deviation(series[ik][il], series[ik - 1][il]);
            cell.converged = cell.ok && cell.deviation_from_previous_L >= 0.0 &&
                             cell.deviation_from_previous_L < tolerance &&
                             (cell.deviation_from_previous_K < 0.0 || cell.deviation_from_previous_K < tolerance);
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

} // namespace hhdeco::heom
