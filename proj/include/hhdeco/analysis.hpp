// analysis.hpp: Multi-exponential fits of observable series,
//   y(t) ~ asymptote + sum_i a_i exp(-t / tau_i).

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hhdeco/observables.hpp"

namespace hhdeco::analysis {

enum class AsymptoteMode { Fixed, TailAverage, Free };

/// Which real scalar of an off-diagonal element is fitted.
enum class ElementScalar { Modulus, Real, Imag };

struct FitConfig {
    int n_terms{1};                          // 1..3
    AsymptoteMode asymptote_mode{AsymptoteMode::TailAverage};
    double fixed_asymptote{0.0};             // used by AsymptoteMode::Fixed
    double tail_fraction{0.2};
    double tail_drift_bound{0.05};           // relative drift that flags a non-stationary tail
    int max_iterations{500};                 // Levenberg-Marquardt iterations per start
    double tolerance{1e-6};                  // gradient cosine for convergence
    std::uint64_t seed{20240611};
    int random_starts{16};
    bool select_terms{false};                // n_terms is then the maximum
    double min_rms_gain{0.1};                // relative residual drop required per added term

    void validate() const;
};

struct ExpTerm {
    double amplitude;
    double tau;
};

struct ExpFitResult {
    double asymptote{0.0};
    std::vector<ExpTerm> terms;  // ascending tau
    double residual_rms{0.0};
    bool converged{false};
    std::vector<std::string> warnings;

    [[nodiscard]] double evaluate(double t) const;
};

struct AsymptoteEstimate {
    double value{0.0};
    std::optional<std::string> warning;
};

/// Fixed value, mean over the final tail_fraction, or (Free) the tail mean as a
/// starting guess. Flags a tail whose two halves differ by more than the drift bound.
AsymptoteEstimate thermal_asymptote(std::span<const double> y, const FitConfig& config);

/// Separable least squares: amplitudes (and a free asymptote) by linear least
/// squares, log-timescales by Levenberg-Marquardt from a multi-start grid.
/// Throws std::invalid_argument with fewer than 10 * n_terms samples.
///
/// With select_terms, fits of 1..n_terms terms are tried in turn and a larger
/// fit is kept only if it is well posed, every timescale lies between the
/// sampling interval and the window length, and it lowers the residual by at
/// least min_rms_gain. Rejections are reported as warnings.
ExpFitResult fit_exponentials(std::span<const double> t, std::span<const double> y, const FitConfig& config);

struct ElementFit {
    int i{0};
    int j{0};
    bool decays{false};  // false: total variation under the noise floor, reported as p = 0
    ExpFitResult fit;
    std::string error;   // non-empty when the fit itself failed

    [[nodiscard]] double amplitude() const { return decays && !fit.terms.empty() ? fit.terms.front().amplitude : 0.0; }
    [[nodiscard]] double tau() const;
};

struct ElementFitConfig {
    ElementScalar off_diagonal{ElementScalar::Modulus};
    double noise_floor{1e-4};
    FitConfig fit{};  // n_terms forced to 1
};

/// Scalar series of rho^{ij}: the real diagonal value, or the configured scalar off the diagonal.
std::vector<double> element_series(const obs::ObservableSeries& series, int i, int j, ElementScalar scalar);

/// Single-exponential fits of every independent eigenbasis element (i <= j).
std::vector<ElementFit> fit_density_matrix_elements(const obs::ObservableSeries& series,
                                                    const ElementFitConfig& config = {});

} // namespace hhdeco::analysis
