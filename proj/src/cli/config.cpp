#include "hhdeco/cli/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "hhdeco/error.hpp"

namespace hhdeco::cli {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

struct Field {
    std::string key;  // section.key
    std::string fallback;
    Setter apply;
};

double to_real(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument("not a finite number");
    return v;
}

long long to_integer(const std::string& s) {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument("not an integer");
    return v;
}

int to_int(const std::string& s) {
    const long long v = to_integer(s);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) throw std::out_of_range("integer out of range");
    return static_cast<int>(v);
}

bool to_bool(const std::string& s) {
    const auto v = boost::algorithm::to_lower_copy(s);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("expected a boolean");
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> parts;
    if (boost::algorithm::trim_copy(s).empty()) return parts;
    boost::algorithm::split(parts, s, boost::algorithm::is_any_of(","));
    for (auto& p : parts) boost::algorithm::trim(p);
    return parts;
}

std::vector<int> to_int_list(const std::string& s) {
    std::vector<int> out;
    for (double v : parse_real_list(s)) {
        if (v != std::round(v)) throw std::invalid_argument("expected integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

const std::vector<Field>& schema() {
    static const std::vector<Field> fields = {
        {"model.t0", "1", [](RunConfig& c, const std::string& v) { c.model.t0 = to_real(v); }},
        {"model.U", "0", [](RunConfig& c, const std::string& v) { c.model.U = to_real(v); }},
        {"model.eta", "0.1", [](RunConfig& c, const std::string& v) { c.model.eta = to_real(v); }},
        {"model.gamma", "0.3", [](RunConfig& c, const std::string& v) { c.model.gamma = to_real(v); }},
        {"model.beta", "1", [](RunConfig& c, const std::string& v) { c.model.beta = to_real(v); }},
        {"model.hamiltonian", "full",
         [](RunConfig& c, const std::string& v) {
             if (v == "full") c.hamiltonian = heom::HamiltonianKind::Full;
             else if (v == "hartree-fock") c.hamiltonian = heom::HamiltonianKind::HartreeFock;
             else throw std::invalid_argument("expected full or hartree-fock");
         }},
        {"heom.K", "1", [](RunConfig& c, const std::string& v) { c.heom.K = to_int(v); }},
        {"heom.L", "8", [](RunConfig& c, const std::string& v) { c.heom.L = to_int(v); }},
        {"heom.dt", "0.02", [](RunConfig& c, const std::string& v) { c.heom.dt = to_real(v); }},
        {"heom.t_max", "40", [](RunConfig& c, const std::string& v) { c.heom.t_max = to_real(v); }},
        {"heom.record_stride", "5", [](RunConfig& c, const std::string& v) { c.heom.record_stride = to_int(v); }},
        {"heom.use_scaling", "true", [](RunConfig& c, const std::string& v) { c.heom.use_scaling = to_bool(v); }},
        {"heom.use_terminator", "true", [](RunConfig& c, const std::string& v) { c.heom.use_terminator = to_bool(v); }},
        {"heom.divergence_threshold", "1e6",
         [](RunConfig& c, const std::string& v) { c.heom.divergence_threshold = to_real(v); }},
        {"heom.memory_cap_mb", "4096",
         [](RunConfig& c, const std::string& v) {
             const long long mb = to_integer(v);
             if (mb <= 0) throw std::invalid_argument("must be positive");
             c.heom.memory_cap = static_cast<std::size_t>(mb) << 20;
         }},
        {"heom.threads", "1", [](RunConfig& c, const std::string& v) { c.heom.threads = to_int(v); }},
        {"fit.n_terms", "3", [](RunConfig& c, const std::string& v) { c.fit.n_terms = to_int(v); }},
        {"fit.asymptote", "tail-average",
         [](RunConfig& c, const std::string& v) {
             if (v == "tail-average") c.fit.asymptote_mode = analysis::AsymptoteMode::TailAverage;
             else if (v == "fixed") c.fit.asymptote_mode = analysis::AsymptoteMode::Fixed;
             else if (v == "free") c.fit.asymptote_mode = analysis::AsymptoteMode::Free;
             else throw std::invalid_argument("expected tail-average, fixed or free");
         }},
        {"fit.fixed_asymptote", "0", [](RunConfig& c, const std::string& v) { c.fit.fixed_asymptote = to_real(v); }},
        {"fit.tail_fraction", "0.2", [](RunConfig& c, const std::string& v) { c.fit.tail_fraction = to_real(v); }},
        {"fit.tail_drift_bound", "0.05", [](RunConfig& c, const std::string& v) { c.fit.tail_drift_bound = to_real(v); }},
        {"fit.max_iterations", "500", [](RunConfig& c, const std::string& v) { c.fit.max_iterations = to_int(v); }},
        {"fit.tolerance", "1e-6", [](RunConfig& c, const std::string& v) { c.fit.tolerance = to_real(v); }},
        {"fit.random_starts", "16", [](RunConfig& c, const std::string& v) { c.fit.random_starts = to_int(v); }},
        {"fit.select_terms", "true", [](RunConfig& c, const std::string& v) { c.fit.select_terms = to_bool(v); }},
        {"fit.min_rms_gain", "0.1", [](RunConfig& c, const std::string& v) { c.fit.min_rms_gain = to_real(v); }},
        {"fit.element_scalar", "modulus",
         [](RunConfig& c, const std::string& v) {
             if (v == "modulus") c.elements.off_diagonal = analysis::ElementScalar::Modulus;
             else if (v == "real") c.elements.off_diagonal = analysis::ElementScalar::Real;
             else if (v == "imag") c.elements.off_diagonal = analysis::ElementScalar::Imag;
             else throw std::invalid_argument("expected modulus, real or imag");
         }},
        {"fit.noise_floor", "1e-4", [](RunConfig& c, const std::string& v) { c.elements.noise_floor = to_real(v); }},
        {"fit.inputs", "", [](RunConfig& c, const std::string& v) { c.fit_inputs = split(v); }},
        {"sweep.kind", "grid",
         [](RunConfig& c, const std::string& v) {
             if (v == "grid") c.sweep.kind = SweepKind::Grid;
             else if (v == "convergence") c.sweep.kind = SweepKind::Convergence;
             else throw std::invalid_argument("expected grid or convergence");
         }},
        {"sweep.U", "", [](RunConfig& c, const std::string& v) { c.sweep.U = parse_real_list(v); }},
        {"sweep.eta", "", [](RunConfig& c, const std::string& v) { c.sweep.eta = parse_real_list(v); }},
        {"sweep.K", "", [](RunConfig& c, const std::string& v) { c.sweep.K = to_int_list(v); }},
        {"sweep.L", "", [](RunConfig& c, const std::string& v) { c.sweep.L = to_int_list(v); }},
        {"sweep.tolerance", "1e-3", [](RunConfig& c, const std::string& v) { c.sweep.tolerance = to_real(v); }},
        {"refmodel.omega", "0.3", [](RunConfig& c, const std::string& v) { c.ref.omega = to_real(v); }},
        {"refmodel.n_ph", "30", [](RunConfig& c, const std::string& v) { c.ref.n_ph = to_int(v); }},
        {"refmodel.modes", "1,2,3,4", [](RunConfig& c, const std::string& v) { c.ref.modes = to_int_list(v); }},
        {"refmodel.x_min", "-6", [](RunConfig& c, const std::string& v) { c.ref.x_min = to_real(v); }},
        {"refmodel.x_max", "6", [](RunConfig& c, const std::string& v) { c.ref.x_max = to_real(v); }},
        {"refmodel.x_points", "241", [](RunConfig& c, const std::string& v) { c.ref.x_points = to_int(v); }},
        {"refmodel.nac_step", "1e-4", [](RunConfig& c, const std::string& v) { c.ref.nac_step = to_real(v); }},
        {"refmodel.gh_order", "40", [](RunConfig& c, const std::string& v) { c.ref.gh_order = to_int(v); }},
        {"refmodel.ecor_steps", "200", [](RunConfig& c, const std::string& v) { c.ref.ecor_steps = to_int(v); }},
        {"refmodel.ecor_max_doublings", "6",
         [](RunConfig& c, const std::string& v) { c.ref.ecor_max_doublings = to_int(v); }},
        {"refmodel.ecor_weights", "0.5,0.5,0,0",
         [](RunConfig& c, const std::string& v) { c.ref.ecor_weights = parse_real_list(v); }},
        {"refmodel.U", "", [](RunConfig& c, const std::string& v) { c.ref.U = parse_real_list(v); }},
        {"run.seed", "20240611",
         [](RunConfig& c, const std::string& v) {
             const long long s = to_integer(v);
             if (s < 0) throw std::invalid_argument("seed must be nonnegative");
             c.seed = static_cast<std::uint64_t>(s);
             c.fit.seed = c.seed;
             c.elements.fit.seed = c.seed;
         }},
        {"run.experiment", "", [](RunConfig& c, const std::string& v) { c.experiment = v; }},
        {"run.output", "", [](RunConfig& c, const std::string& v) { c.output = v; }},
    };
    return fields;
}

const Field* find_field(const std::string& key) {
    for (const auto& f : schema())
        if (f.key == key) return &f;
    return nullptr;
}

// Line of `key` inside `[section]` in the raw text, for error messages.
int line_of(const std::string& text, const std::string& section, const std::string& key) {
    std::istringstream in(text);
    std::string line;
    std::string current;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto t = boost::algorithm::trim_copy(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            current = boost::algorithm::trim_copy(t.substr(1, t.size() - 2));
            if (key.empty() && current == section) return n;
            continue;
        }
        const auto eq = t.find('=');
        if (eq != std::string::npos && current == section && boost::algorithm::trim_copy(t.substr(0, eq)) == key) return n;
    }
    return 0;
}

void assign(RunConfig& c, const Field& f, const std::string& value, const std::string& where) {
    try {
        f.apply(c, value);
    } catch (const std::exception& e) {
        throw ConfigError(where + ": invalid value '" + value + "' for " + f.key + " (" + e.what() + ")");
    }
    c.resolved[f.key] = value;
}

void validate(const RunConfig& c, const std::string& origin) {
    try {
        c.model.validate();
        c.heom.validate();
        c.fit.validate();
        if (c.elements.noise_floor < 0.0) throw std::invalid_argument("fit.noise_floor must be >= 0");
        for (double u : c.sweep.U)
            if (u < 0.0) throw std::invalid_argument("sweep.U entries must be >= 0");
        for (double e : c.sweep.eta)
            if (e < 0.0) throw std::invalid_argument("sweep.eta entries must be >= 0");
        if (c.sweep.kind == SweepKind::Convergence && (c.sweep.K.empty() || c.sweep.L.empty()))
            throw std::invalid_argument("a convergence sweep needs sweep.K and sweep.L");
        if (!(c.sweep.tolerance > 0.0)) throw std::invalid_argument("sweep.tolerance must be > 0");
        if (!(c.ref.omega > 0.0)) throw std::invalid_argument("refmodel.omega must be > 0");
        if (c.ref.n_ph < 2) throw std::invalid_argument("refmodel.n_ph must be >= 2");
        if (c.ref.x_points < 3 || !(c.ref.x_max > c.ref.x_min))
            throw std::invalid_argument("refmodel grid needs x_points >= 3 and x_max > x_min");
        for (int m : c.ref.modes)
            if (m < 1 || m > 4) throw std::invalid_argument("refmodel.modes entries must be in 1..4");
        if (c.ref.gh_order < 40) throw std::invalid_argument("refmodel.gh_order must be >= 40");
        if (c.ref.ecor_weights.size() != model::kSectorDim)
            throw std::invalid_argument("refmodel.ecor_weights needs four entries");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

} // namespace

std::vector<double> parse_real_list(const std::string& text) {
    const auto t = boost::algorithm::trim_copy(text);
    std::vector<double> out;
    if (t.empty()) return out;
    if (t.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        boost::algorithm::split(parts, t, boost::algorithm::is_any_of(":"));
        if (parts.size() != 3) throw std::invalid_argument("range must be start:stop:step");
        const double a = to_real(boost::algorithm::trim_copy(parts[0]));
        const double b = to_real(boost::algorithm::trim_copy(parts[1]));
        const double s = to_real(boost::algorithm::trim_copy(parts[2]));
        if (!(s > 0.0) || b < a) throw std::invalid_argument("range needs step > 0 and stop >= start");
        const auto n = static_cast<long long>(std::floor((b - a) / s + 1e-9));
        if (n > 100000) throw std::invalid_argument("range too long");
        for (long long k = 0; k <= n; ++k) out.push_back(a + static_cast<double>(k) * s);
        return out;
    }
    for (const auto& p : split(t)) out.push_back(to_real(p));
    return out;
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides, const std::string& origin) {
    RunConfig c;
    for (const auto& f : schema()) assign(c, f, f.fallback, "default");

    boost::property_tree::ptree tree;
    try {
        std::istringstream in(text);
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError(origin + ":" + std::to_string(line_of(text, "", section)) + ": key '" + section +
                              "' outside a section");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            const Field* f = find_field(full);
            const int line = line_of(text, section, key);
            if (!f) throw ConfigError(origin + ":" + std::to_string(line) + ": unknown key '" + full + "'");
            assign(c, *f, boost::algorithm::trim_copy(value.data()), origin + ":" + std::to_string(line));
        }
        if (body.empty()) {
            bool known = false;
            for (const auto& f : schema()) known = known || f.key.rfind(section + ".", 0) == 0;
            if (!known)
                throw ConfigError(origin + ":" + std::to_string(line_of(text, section, "")) + ": unknown section [" +
                                  section + "]");
        }
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("--override '" + o + "': expected section.key=value");
        const auto key = boost::algorithm::trim_copy(o.substr(0, eq));
        const Field* f = find_field(key);
        if (!f) throw ConfigError("--override '" + o + "': unknown key '" + key + "'");
        assign(c, *f, boost::algorithm::trim_copy(o.substr(eq + 1)), "--override " + key);
    }
    validate(c, origin);
    return c;
}

RunConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
    if (!path) return parse_config("", overrides, "<defaults>");
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file '" + *path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), overrides, *path);
}

} // namespace hhdeco::cli
