// config.hpp: INI run configuration with a fixed schema.
//
//   [model] [heom] [fit] [sweep] [refmodel] [run]
//
// Every key has a default; unknown sections or keys are rejected with their
// line number. Overrides use section.key=value.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hhdeco/analysis.hpp"
#include "hhdeco/heom/heom.hpp"
#include "hhdeco/model.hpp"

namespace hhdeco::cli {

enum class SweepKind { Grid, Convergence };

struct SweepSettings {
    SweepKind kind{SweepKind::Grid};
    std::vector<double> U;    // empty: model.U only
    std::vector<double> eta;  // empty: model.eta only
    std::vector<int> K;       // convergence sweep lists
    std::vector<int> L;
    double tolerance{1e-3};
};

struct RefSettings {
    double omega{0.3};
    int n_ph{30};
    std::vector<int> modes{1, 2, 3, 4};
    double x_min{-6.0};
    double x_max{6.0};
    int x_points{241};
    double nac_step{1e-4};
    int gh_order{40};
    int ecor_steps{200};
    int ecor_max_doublings{6};
    std::vector<double> ecor_weights{0.5, 0.5, 0.0, 0.0};
    std::vector<double> U;  // empty: model.U only
};

struct RunConfig {
    model::ModelParams model{};
    heom::HamiltonianKind hamiltonian{heom::HamiltonianKind::Full};
    heom::HeomConfig heom{};
    analysis::FitConfig fit{};
    analysis::ElementFitConfig elements{};
    std::vector<std::string> fit_inputs;
    SweepSettings sweep{};
    RefSettings ref{};
    std::uint64_t seed{20240611};
    std::string experiment;
    std::string output;

    /// Resolved "section.key" -> value for every schema key, defaults included.
    std::map<std::string, std::string> resolved;
};

/// Defaults, then the file (if any), then overrides. Throws ConfigError.
RunConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides = {});

/// Same as load_config but from INI text (used by tests and bindings).
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                       const std::string& origin = "<string>");

/// Parses "a,b,c" or "start:stop:step" (inclusive).
std::vector<double> parse_real_list(const std::string& text);

} // namespace hhdeco::cli
