#include "hhdeco/cli/io.hpp"

#include <boost/algorithm/string.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hhdeco/error.hpp"

namespace hhdeco::cli {

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::string format_optional(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw std::logic_error("CsvTable: row width does not match the header");
    rows_.push_back(std::move(cells));
}

void CsvTable::write(const std::filesystem::path& path, const std::map<std::string, std::string>& provenance) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& [k, v] : provenance) out << "# " << k << " = " << v << '\n';
    out << boost::algorithm::join(header_, ",") << '\n';
    for (const auto& row : rows_) out << boost::algorithm::join(row, ",") << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

std::size_t CsvFile::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw Error("CSV has no column '" + name + "'");
}

std::vector<double> CsvFile::numbers(const std::string& name) const {
    const auto c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(std::stod(r.at(c)));
    return out;
}

CsvFile read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    CsvFile f;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find(" = ");
            if (eq != std::string::npos) f.provenance[line.substr(2, eq - 2)] = line.substr(eq + 3);
            continue;
        }
        std::vector<std::string> cells;
        boost::algorithm::split(cells, line, boost::algorithm::is_any_of(","));
        if (f.header.empty()) {
            f.header = std::move(cells);
        } else {
            if (cells.size() != f.header.size()) throw Error(path.string() + ": ragged row");
            f.rows.push_back(std::move(cells));
        }
    }
    if (f.header.empty()) throw Error(path.string() + ": missing header");
    return f;
}

const std::vector<std::string>& trajectory_header() {
    static const std::vector<std::string> header = [] {
        std::vector<std::string> h{"t", "purity", "energy", "cumulant"};
        for (int i = 1; i <= 4; ++i)
            for (int j = i; j <= 4; ++j) {
                const auto tag = std::to_string(i) + std::to_string(j);
                h.push_back("re_r" + tag);
                if (i != j) h.push_back("im_r" + tag);
            }
        return h;
    }();
    return header;
}

CsvTable trajectory_table(const obs::ObservableSeries& series) {
    series.validate();
    CsvTable table(trajectory_header());
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        std::vector<std::string> row{format_real(series.times[k]), format_real(series.purity[k]),
                                     format_real(series.energy[k]), format_real(series.cumulant[k])};
        const auto& m = series.elements[k];
        if (m.rows() != 4) throw std::invalid_argument("trajectory_table: expects 4x4 density matrices");
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) {
                row.push_back(format_real(m(i, j).real()));
                if (i != j) row.push_back(format_real(m(i, j).imag()));
            }
        table.add_row(std::move(row));
    }
    return table;
}

obs::ObservableSeries series_from_trajectory(const CsvFile& csv) {
    if (csv.header != trajectory_header()) throw Error("not a trajectory table (header mismatch)");
    obs::ObservableSeries s;
    for (const auto& r : csv.rows) {
        std::size_t c = 0;
        s.times.push_back(std::stod(r[c++]));
        s.purity.push_back(std::stod(r[c++]));
        s.energy.push_back(std::stod(r[c++]));
        s.cumulant.push_back(std::stod(r[c++]));
        CMatrix m(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) {
                const double re = std::stod(r[c++]);
                const double im = i != j ? std::stod(r[c++]) : 0.0;
                m(i, j) = {re, im};
                m(j, i) = {re, -im};
            }
        s.elements.push_back(m);
    }
    return s;
}

} // namespace hhdeco::cli
