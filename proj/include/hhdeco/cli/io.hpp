// io.hpp: CSV tables with a '#' provenance block, and JSON run manifests.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hhdeco/observables.hpp"

namespace hhdeco::cli {

/// A cell is a number (shortest round-trip form), a string, or empty.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
    [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    /// Comment lines "# key = value" followed by the header and rows, '\n' endings.
    void write(const std::filesystem::path& path, const std::map<std::string, std::string>& provenance) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::string format_real(double v);
std::string format_optional(const std::optional<double>& v);

struct CsvFile {
    std::map<std::string, std::string> provenance;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const;
    [[nodiscard]] std::vector<double> numbers(const std::string& name) const;
};

CsvFile read_csv(const std::filesystem::path& path);

/// Header of trajectory.csv.
const std::vector<std::string>& trajectory_header();

/// Rows of trajectory.csv from an observable series.
CsvTable trajectory_table(const obs::ObservableSeries& series);

/// Rebuilds the observable series stored in a trajectory.csv.
obs::ObservableSeries series_from_trajectory(const CsvFile& csv);

} // namespace hhdeco::cli
