#include "hhdeco/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hhdeco/linalg.hpp"

namespace hhdeco::analysis {

void FitConfig::validate() const {
    if (n_terms < 1 || n_terms > 3) throw std::invalid_argument("FitConfig: n_terms must be in 1..3");
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw std::invalid_argument("FitConfig: tail_fraction must be in (0, 1)");
    if (!(tail_drift_bound > 0.0)) throw std::invalid_argument("FitConfig: tail_drift_bound must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("FitConfig: max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw std::invalid_argument("FitConfig: tolerance must be > 0");
    if (random_starts < 0) throw std::invalid_argument("FitConfig: random_starts must be >= 0");
    if (!(min_rms_gain >= 0.0 && min_rms_gain < 1.0)) throw std::invalid_argument("FitConfig: min_rms_gain must be in [0, 1)");
}

double ExpFitResult::evaluate(double t) const {
    double y = asymptote;
    for (const auto& term : terms) y += term.amplitude * std::exp(-t / term.tau);
    return y;
}

AsymptoteEstimate thermal_asymptote(std::span<const double> y, const FitConfig& config) {
    config.validate();
    AsymptoteEstimate out;
    if (config.asymptote_mode == AsymptoteMode::Fixed) {
        out.value = config.fixed_asymptote;
        return out;
    }
    if (y.empty()) throw std::invalid_argument("thermal_asymptote: empty series");
    const auto n = y.size();
    const auto tail = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(config.tail_fraction * static_cast<double>(n))));
    const auto begin = n - std::min(n, tail);
    const auto mid = begin + (n - begin) / 2;
    auto mean = [&](std::size_t a, std::size_t b) {
        return std::accumulate(y.begin() + static_cast<std::ptrdiff_t>(a), y.begin() + static_cast<std::ptrdiff_t>(b), 0.0) /
               static_cast<double>(b - a);
    };
    out.value = mean(begin, n);
    if (mid > begin && mid < n) {
        const double drift = std::abs(mean(begin, mid) - mean(mid, n));
        const double scale = std::max(std::abs(out.value), 1e-12);
        if (drift > config.tail_drift_bound * scale) {
            std::ostringstream msg;
            msg << "tail not stationary: relative drift " << drift / scale;
            out.warning = msg.str();
        }
    }
    return out;
}

namespace {

// Variable-projection problem in log-timescales.
class Projection {
public:
    Projection(std::span<const double> t, const RVector& z, int n_terms, bool free_constant)
        : t_(t.begin(), t.end()), z_(z), n_(n_terms), constant_(free_constant) {}

    struct Eval {
        RVector coef;      // amplitudes then (optionally) the constant
        RVector residual;  // z - basis * coef
        RMatrix jacobian;  // d residual / d log tau
        double cost{0.0};
        bool full_rank{true};
    };

    Eval evaluate(const RVector& theta, bool with_jacobian) const {
        const auto N = static_cast<Eigen::Index>(t_.size());
        const int cols = n_ + (constant_ ? 1 : 0);
        RMatrix basis(N, cols);
        for (int i = 0; i < n_; ++i) {
            const double tau = std::exp(theta(i));
            for (Eigen::Index k = 0; k < N; ++k) basis(k, i) = std::exp(-t_[static_cast<std::size_t>(k)] / tau);
        }
        if (constant_) basis.col(n_).setOnes();

        Eval e;
        Eigen::ColPivHouseholderQR<RMatrix> qr(basis);
        qr.setThreshold(1e-13);
        e.full_rank = qr.rank() == cols;
        e.coef = qr.solve(z_);
        e.residual = z_ - basis * e.coef;
        e.cost = 0.5 * e.residual.squaredNorm();
        if (!with_jacobian) return e;

        e.jacobian.resize(N, n_);
        for (int i = 0; i < n_; ++i) {
            const double tau = std::exp(theta(i));
            RVector d(N);
            for (Eigen::Index k = 0; k < N; ++k) {
                const double s = t_[static_cast<std::size_t>(k)] / tau;
                d(k) = e.coef(i) * s * std::exp(-s);
            }
            // -(I - P) dPhi/dtheta_i c_i
            const RVector proj = basis * qr.solve(d);
            e.jacobian.col(i) = -(d - proj);
        }
        return e;
    }

private:
    std::vector<double> t_;
    RVector z_;
    int n_;
    bool constant_;
};

struct Candidate {
    RVector theta;
    Projection::Eval eval;
    bool converged{false};
    bool well_posed{true};  // full rank and no cancelling amplitude pairs
};

// Amplitudes much larger than the data signal two exponentials cancelling each other.
constexpr double kCancellationFactor = 10.0;

double gradient_cosine(const Projection::Eval& e) {
    const double rn = e.residual.norm();
    if (rn == 0.0) return 0.0;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < e.jacobian.cols(); ++i) {
        const double cn = e.jacobian.col(i).norm();
        if (cn == 0.0) continue;
        worst = std::max(worst, std::abs(e.jacobian.col(i).dot(e.residual)) / (cn * rn));
    }
    return worst;
}

Candidate levenberg_marquardt(const Projection& problem, RVector theta, double lo, double hi,
                              const FitConfig& config, double z_norm) {
    auto clamp = [&](RVector& th) {
        for (Eigen::Index i = 0; i < th.size(); ++i) th(i) = std::clamp(th(i), lo, hi);
    };
    clamp(theta);
    Projection::Eval cur = problem.evaluate(theta, true);
    double lambda = 1e-3;
    bool converged = false;
    const double tiny = 1e-14 * std::max(z_norm, 1e-300);
    for (int it = 0; it < config.max_iterations; ++it) {
        if (cur.residual.norm() <= tiny || gradient_cosine(cur) < config.tolerance) {
            converged = true;
            break;
        }
        const RMatrix jtj = cur.jacobian.transpose() * cur.jacobian;
        const RVector g = cur.jacobian.transpose() * cur.residual;
        bool improved = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            RMatrix a = jtj;
            for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-12);
            const RVector step = a.ldlt().solve(-g);
            RVector trial = theta + step;
            clamp(trial);
            const Projection::Eval next = problem.evaluate(trial, true);
            if (std::isfinite(next.cost) && next.cost < cur.cost) {
                theta = trial;
                cur = next;
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
                break;
            }
            lambda *= 4.0;
            if (lambda > 1e16) break;
        }
        if (!improved) {
            converged = cur.residual.norm() <= tiny || gradient_cosine(cur) < config.tolerance;
            break;
        }
    }
    if (!converged) converged = cur.residual.norm() <= tiny || gradient_cosine(cur) < config.tolerance;
    return {theta, cur, converged};
}

void combinations(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == k) {
        out.push_back(cur);
        return;
    }
    for (int i = start; i < n; ++i) {
        cur.push_back(i);
        combinations(n, k, i + 1, cur, out);
        cur.pop_back();
    }
}

bool better(const Candidate& a, const Candidate& b) {
    if (a.well_posed != b.well_posed) return a.well_posed;
    if (a.eval.cost < b.eval.cost * (1.0 - 1e-12)) return true;
    if (b.eval.cost < a.eval.cost * (1.0 - 1e-12)) return false;
    return a.converged && !b.converged;
}

} // namespace

namespace {

struct CountFit {
    ExpFitResult result;
    bool well_posed{false};
};

CountFit fit_term_count(std::span<const double> t, std::span<const double> y, const FitConfig& config) {
    if (t.size() != y.size()) throw std::invalid_argument("fit_exponentials: t and y differ in length");
    const auto N = t.size();
    if (N < static_cast<std::size_t>(10 * config.n_terms))
        throw std::invalid_argument("fit_exponentials: need at least 10 samples per exponential term");
    for (std::size_t k = 0; k < N; ++k) {
        if (!std::isfinite(t[k]) || !std::isfinite(y[k])) throw std::invalid_argument("fit_exponentials: non-finite sample");
        if (k > 0 && !(t[k] > t[k - 1])) throw std::invalid_argument("fit_exponentials: times must increase strictly");
    }

    ExpFitResult result;
    const bool free_constant = config.asymptote_mode == AsymptoteMode::Free;
    double asymptote = 0.0;
    if (!free_constant) {
        const auto est = thermal_asymptote(y, config);
        asymptote = est.value;
        if (est.warning) result.warnings.push_back(*est.warning);
    }
    RVector z(static_cast<Eigen::Index>(N));
    for (std::size_t k = 0; k < N; ++k) z(static_cast<Eigen::Index>(k)) = y[k] - asymptote;

    const Projection problem(t, z, config.n_terms, free_constant);
    const double span = t[N - 1] - t[0];
    double min_dt = span;
    for (std::size_t k = 1; k < N; ++k) min_dt = std::min(min_dt, t[k] - t[k - 1]);
    if (!(span > 0.0)) throw std::invalid_argument("fit_exponentials: zero time span");
    const double lo = std::log(1e-2 * min_dt);
    const double hi = std::log(1e3 * std::max(span, std::abs(t[N - 1])));

    // log-spaced starting grid between a few samples and the full window
    const int grid = 8;
    std::vector<double> seeds;
    const double g_lo = std::log(2.0 * min_dt);
    const double g_hi = std::log(span);
    for (int i = 0; i < grid; ++i) seeds.push_back(g_lo + (g_hi - g_lo) * (i + 0.5) / grid);
    std::vector<std::vector<int>> combos;
    std::vector<int> scratch;
    combinations(grid, config.n_terms, 0, scratch, combos);

    const double z_norm = z.norm();
    const double z_max = z.cwiseAbs().maxCoeff();
    std::optional<Candidate> best;
    auto consider = [&](const RVector& theta0) {
        Candidate c = levenberg_marquardt(problem, theta0, lo, hi, config, z_norm);
        c.well_posed = c.eval.full_rank && c.eval.coef.head(config.n_terms).cwiseAbs().sum() <= kCancellationFactor * z_max;
        if (!best || better(c, *best)) best = std::move(c);
    };
    for (const auto& combo : combos) {
        RVector theta(config.n_terms);
        for (int i = 0; i < config.n_terms; ++i) theta(i) = seeds[static_cast<std::size_t>(combo[static_cast<std::size_t>(i)])];
        consider(theta);
    }
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> jitter(0.0, 0.7);
    for (int s = 0; s < config.random_starts; ++s) {
        RVector theta = best->theta;
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) += jitter(rng);
        consider(theta);
    }

    const Candidate& c = *best;
    result.asymptote = free_constant ? c.eval.coef(config.n_terms) : asymptote;
    for (int i = 0; i < config.n_terms; ++i) result.terms.push_back({c.eval.coef(i), std::exp(c.theta(i))});
    std::sort(result.terms.begin(), result.terms.end(), [](const ExpTerm& a, const ExpTerm& b) { return a.tau < b.tau; });
    result.residual_rms = std::sqrt(c.eval.residual.squaredNorm() / static_cast<double>(N));
    result.converged = c.converged;
    if (!c.well_posed) result.warnings.emplace_back("best fit is ill-posed (rank deficient or cancelling terms)");
    if (!c.converged) result.warnings.emplace_back("no start reached the gradient tolerance");
    return {std::move(result), c.well_posed};
}

// Reason a k-term fit should not replace the (k-1)-term one, or empty.
std::string rejection(const CountFit& fit, const ExpFitResult* previous, std::span<const double> t,
                      std::span<const double> y, double min_gain) {
    if (!fit.well_posed) return "ill-posed";
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    if (previous && previous->residual_rms <= 1e-9 * (*hi - *lo)) return "fewer terms already fit exactly";
    double min_dt = t.back() - t.front();
    for (std::size_t k = 1; k < t.size(); ++k) min_dt = std::min(min_dt, t[k] - t[k - 1]);
    for (const auto& term : fit.result.terms) {
        if (term.tau < min_dt) return "timescale below the sampling interval";
        if (term.tau > t.back() - t.front()) return "timescale beyond the fit window";
    }
    if (previous && fit.result.residual_rms > (1.0 - min_gain) * previous->residual_rms)
        return "residual gain below the threshold";
    return {};
}

} // namespace

ExpFitResult fit_exponentials(std::span<const double> t, std::span<const double> y, const FitConfig& config) {
    config.validate();
    if (!config.select_terms) return fit_term_count(t, y, config).result;
    std::optional<ExpFitResult> chosen;
    std::vector<std::string> notes;
    for (int k = 1; k <= config.n_terms; ++k) {
        FitConfig c = config;
        c.n_terms = k;
        auto fit = fit_term_count(t, y, c);
        const auto why = rejection(fit, chosen ? &*chosen : nullptr, t, y, config.min_rms_gain);
        if (why.empty() || (!chosen && k == config.n_terms)) {
            chosen = std::move(fit.result);
        } else {
            notes.push_back(std::to_string(k) + "-term fit rejected: " + why);
        }
    }
    chosen->warnings.insert(chosen->warnings.end(), notes.begin(), notes.end());
    return *chosen;
}

double ElementFit::tau() const {
    return decays && !fit.terms.empty() ? fit.terms.front().tau : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> element_series(const obs::ObservableSeries& series, int i, int j, ElementScalar scalar) {
    std::vector<double> out;
    out.reserve(series.elements.size());
    for (const auto& m : series.elements) {
        if (i < 0 || j < 0 || i >= m.rows() || j >= m.cols()) throw std::invalid_argument("element_series: index out of range");
        const cplx v = m(i, j);
        if (i == j) {
            out.push_back(v.real());
            continue;
        }
        switch (scalar) {
            case ElementScalar::Modulus: out.push_back(std::abs(v)); break;
            case ElementScalar::Real: out.push_back(v.real()); break;
            case ElementScalar::Imag: out.push_back(v.imag()); break;
        }
    }
    return out;
}

std::vector<ElementFit> fit_density_matrix_elements(const obs::ObservableSeries& series, const ElementFitConfig& config) {
    series.validate();
    if (series.elements.empty()) throw std::invalid_argument("fit_density_matrix_elements: empty series");
    FitConfig fc = config.fit;
    fc.n_terms = 1;
    fc.validate();
    const auto d = static_cast<int>(series.elements.front().rows());
    std::vector<ElementFit> out;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            ElementFit ef;
            ef.i = i;
            ef.j = j;
            const auto y = element_series(series, i, j, config.off_diagonal);
            const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
            if (*mx - *mn < config.noise_floor) {
                out.push_back(std::move(ef));
                continue;
            }
            try {
                ef.fit = fit_exponentials(series.times, y, fc);
                ef.decays = true;
            } catch (const std::exception& e) {
                ef.error = e.what();
            }
            out.push_back(std::move(ef));
        }
    return out;
}

} // namespace hhdeco::analysis
