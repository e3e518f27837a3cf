#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "infomarket/config.hpp"
#include "infomarket/error.hpp"
#include "infomarket/stats.hpp"
#include "infomarket/sweep.hpp"

namespace infomarket::io {

/// How the information section was written; kept so an echoed config reads
/// the same way it was given.
struct InformationSpec {
    std::string mode = "endogenous";    // endogenous | exogenous | mixed
    int memory_bits = 9;                // endogenous
    std::size_t states = 512;           // exogenous
    std::string distribution = "uniform";  // uniform | exponential | explicit
    double rate = 0.02;                 // exponential
    std::vector<double> weights;        // explicit (exogenous or mixed)
    int endo_bits = 6;                  // mixed
    int exo_bits = 3;                   // mixed

    friend bool operator==(const InformationSpec&, const InformationSpec&) = default;
};

/// Analysis settings shared by `simulate`, `stats` and `compare`.
struct AnalysisSettings {
    std::size_t window = 0;  // final returns analysed; 0 means the final half
    std::size_t max_lag = 500;
    std::size_t head = 10;

    friend bool operator==(const AnalysisSettings&, const AnalysisSettings&) = default;
};

struct SweepSettings {
    std::size_t repetitions = 50;
    std::vector<sweep::Axis> axes;
    std::vector<sweep::Metric> metrics{std::begin(sweep::kAllMetrics), std::end(sweep::kAllMetrics)};
    std::vector<sweep::Variant> variants;  // non-empty selects an alpha scan
    std::size_t variant_producers = 16;

    friend bool operator==(const SweepSettings&, const SweepSettings&) = default;
};

/// A fully resolved configuration file.
struct ResolvedConfig {
    MarketConfig market;
    InformationSpec information;
    AnalysisSettings analysis;
    SweepSettings sweep;

    friend bool operator==(const ResolvedConfig&, const ResolvedConfig&) = default;
};

[[nodiscard]] inline InformationMode build_information(const InformationSpec& s) {
    const auto dist_weights = [&](std::size_t states) -> std::vector<double> {
        if (s.distribution == "uniform") return Exogenous::uniform(states).weights;
        if (s.distribution == "exponential") return Exogenous::exponential(states, s.rate).weights;
        if (s.distribution == "explicit") return s.weights;
        throw ConfigError("information.distribution", "expected uniform, exponential or explicit, got '" +
                                                          s.distribution + "'");
    };
    if (s.mode == "endogenous") return Endogenous{s.memory_bits};
    if (s.mode == "exogenous") {
        if (s.states < 1) throw ConfigError("information.states", "must be at least 1");
        return Exogenous{dist_weights(s.states)};
    }
    if (s.mode == "mixed") {
        if (s.exo_bits < 0 || s.exo_bits > kMaxMemoryBits) {
            throw ConfigError("information.exo_bits", "must be in [0, " + std::to_string(kMaxMemoryBits) + "]");
        }
        return Mixed{s.endo_bits, s.exo_bits, dist_weights(std::size_t{1} << s.exo_bits)};
    }
    throw ConfigError("information.mode", "expected endogenous, exogenous or mixed, got '" + s.mode + "'");
}

[[nodiscard]] inline sweep::SweepSpec sweep_spec(const ResolvedConfig& c) {
    sweep::SweepSpec s;
    s.base = c.market;
    s.axes = c.sweep.axes;
    s.repetitions = c.sweep.repetitions;
    s.metrics = c.sweep.metrics;
    s.head = c.analysis.head;
    return s;
}

[[nodiscard]] inline sweep::AlphaScanSpec alpha_scan_spec(const ResolvedConfig& c) {
    sweep::AlphaScanSpec s;
    s.base = c.market;
    s.repetitions = c.sweep.repetitions;
    s.variants = c.sweep.variants;
    s.variant_producers = c.sweep.variant_producers;
    for (const auto& a : c.sweep.axes) {
        if (a.name == "alpha") s.alphas = a.values;
    }
    if (s.alphas.empty() || c.sweep.axes.size() != 1) {
        throw ConfigError("sweep.variants", "an alpha scan needs exactly one axis, named alpha");
    }
    return s;
}

namespace detail {

inline const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"market",
         {"n_speculators", "n_producers", "producer_kind", "use_param", "epsilon", "horizon", "seed",
          "record_agents", "memory_budget_bytes"}},
        {"information",
         {"mode", "memory_bits", "states", "distribution", "rate", "weights", "endo_bits", "exo_bits"}},
        {"analysis", {"window", "max_lag", "head"}},
        {"sweep",
         {"repetitions", "axis1", "axis1_values", "axis2", "axis2_values", "metrics", "variants",
          "variant_producers"}},
    };
    return keys;
}

/// 1-based line of `key` inside `[section]`, or 0 if not found.
inline std::size_t line_of(std::string_view text, std::string_view section, std::string_view key) {
    std::istringstream in{std::string(text)};
    std::string line, current;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        std::string_view l(line);
        l.remove_prefix(first);
        if (l.front() == '[') {
            const auto close = l.find(']');
            current = std::string(l.substr(1, close == std::string_view::npos ? l.size() - 1 : close - 1));
            continue;
        }
        const auto eq = l.find('=');
        if (eq == std::string_view::npos || current != section) continue;
        auto k = l.substr(0, eq);
        while (!k.empty() && (k.back() == ' ' || k.back() == '\t')) k.remove_suffix(1);
        if (k == key) return n;
    }
    return 0;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string_view::npos ? s.size() : comma;
        auto item = trim(s.substr(start, end - start));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

class Reader {
public:
    Reader(const boost::property_tree::ptree& tree, std::string_view text) : tree_(tree), text_(text) {}

    [[nodiscard]] std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        const auto sec = tree_.get_child_optional(section);
        if (!sec) return std::nullopt;
        const auto v = sec->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
        const std::size_t line = line_of(text_, section, key);
        std::string msg = what;
        if (line > 0) msg = "line " + std::to_string(line) + ": " + msg;
        throw ConfigError(section + "." + key, msg);
    }

    template <class T>
    void number(const std::string& section, const std::string& key, T& out) const {
        const auto v = raw(section, key);
        if (!v) return;
        out = parse_number<T>(section, key, *v);
    }

    template <class T>
    [[nodiscard]] T parse_number(const std::string& section, const std::string& key, const std::string& v) const {
        T value{};
        const char* end = v.data() + v.size();
        const auto [ptr, ec] = std::from_chars(v.data(), end, value);
        if (ec != std::errc{} || ptr != end) fail(section, key, "cannot parse '" + v + "' as a number");
        return value;
    }

    void boolean(const std::string& section, const std::string& key, bool& out) const {
        const auto v = raw(section, key);
        if (!v) return;
        if (*v == "true" || *v == "1") {
            out = true;
        } else if (*v == "false" || *v == "0") {
            out = false;
        } else {
            fail(section, key, "expected true or false, got '" + *v + "'");
        }
    }

    void string(const std::string& section, const std::string& key, std::string& out) const {
        if (const auto v = raw(section, key)) out = *v;
    }

    [[nodiscard]] std::vector<double> numbers(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        if (const auto v = raw(section, key)) {
            for (const auto& item : split_list(*v)) out.push_back(parse_number<double>(section, key, item));
        }
        return out;
    }

private:
    const boost::property_tree::ptree& tree_;
    std::string_view text_;
};

}  // namespace detail

/// Parses INI text. Unknown sections and keys are rejected; semantic errors
/// name the offending field as section.key.
[[nodiscard]] inline ResolvedConfig parse_config_text(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw FormatError(e.message(), e.line());
    }

    for (const auto& [section, body] : tree) {
        const auto known = detail::known_keys().find(section);
        if (body.empty() && !body.data().empty()) {
            throw ConfigError(section, "key outside of any section");
        }
        if (known == detail::known_keys().end()) throw ConfigError(section, "unknown section [" + section + "]");
        for (const auto& [key, value] : body) {
            if (!known->second.contains(key)) {
                const std::size_t line = detail::line_of(text, section, key);
                throw ConfigError(section + "." + key, (line ? "line " + std::to_string(line) + ": " : std::string()) +
                                                           "unknown key '" + key + "'");
            }
        }
    }

    const detail::Reader r(tree, text);
    ResolvedConfig c;
    auto& m = c.market;
    r.number("market", "n_speculators", m.n_speculators);
    r.number("market", "n_producers", m.n_producers);
    std::string kind{to_string(m.producer_kind)};
    r.string("market", "producer_kind", kind);
    if (kind == "deterministic") {
        m.producer_kind = ProducerKind::deterministic;
    } else if (kind == "random") {
        m.producer_kind = ProducerKind::random;
    } else {
        r.fail("market", "producer_kind", "expected deterministic or random, got '" + kind + "'");
    }
    r.number("market", "use_param", m.use_param);
    r.number("market", "epsilon", m.epsilon);
    r.number("market", "horizon", m.horizon);
    r.number("market", "seed", m.seed);
    r.boolean("market", "record_agents", m.record_agents);
    r.number("market", "memory_budget_bytes", m.memory_budget_bytes);

    auto& info = c.information;
    r.string("information", "mode", info.mode);
    r.number("information", "memory_bits", info.memory_bits);
    r.number("information", "states", info.states);
    r.string("information", "distribution", info.distribution);
    r.number("information", "rate", info.rate);
    info.weights = r.numbers("information", "weights");
    if (!info.weights.empty() && !r.raw("information", "distribution")) info.distribution = "explicit";
    r.number("information", "endo_bits", info.endo_bits);
    r.number("information", "exo_bits", info.exo_bits);
    if (info.distribution == "explicit" && info.mode == "exogenous") info.states = info.weights.size();
    m.info = build_information(info);

    r.number("analysis", "window", c.analysis.window);
    r.number("analysis", "max_lag", c.analysis.max_lag);
    r.number("analysis", "head", c.analysis.head);

    auto& s = c.sweep;
    r.number("sweep", "repetitions", s.repetitions);
    for (const char* axis : {"axis1", "axis2"}) {
        auto name = r.raw("sweep", axis);
        if (name && name->empty()) name.reset();
        const auto values = r.numbers("sweep", std::string(axis) + "_values");
        if (!name && values.empty()) continue;
        if (!name) r.fail("sweep", std::string(axis) + "_values", "values given without an axis name");
        if (values.empty()) r.fail("sweep", axis, "axis '" + *name + "' has no values");
        s.axes.push_back({*name, values});
    }
    if (const auto v = r.raw("sweep", "metrics"); v && !detail::split_list(*v).empty()) {
        s.metrics.clear();
        for (const auto& name : detail::split_list(*v)) s.metrics.push_back(sweep::metric_from_string(name));
    }
    if (const auto v = r.raw("sweep", "variants")) {
        for (const auto& name : detail::split_list(*v)) s.variants.push_back(sweep::variant_from_string(name));
    }
    r.number("sweep", "variant_producers", s.variant_producers);

    try {
        validate(m);
    } catch (const ConfigError& e) {
        const std::string field = e.field();
        const std::string section =
            field == "memory_bits" || field == "weights" || field == "endo_bits" || field == "exo_bits" ||
                    field == "exo_weights"
                ? "information"
                : "market";
        const std::string key = field == "exo_weights" ? "weights" : field;
        r.fail(section, key, e.what());
    }
    if (s.repetitions < 1) r.fail("sweep", "repetitions", "must be at least 1");
    if (c.analysis.max_lag < 1) r.fail("analysis", "max_lag", "must be at least 1");
    return c;
}

[[nodiscard]] inline ResolvedConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

/// Writes every resolved field; parse_config_text(to_ini(c)) == c.
[[nodiscard]] inline std::string to_ini(const ResolvedConfig& c) {
    const auto list = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + exact_number(v[i]);
        return s;
    };
    std::ostringstream o;
    const auto& m = c.market;
    o << "[market]\n"
      << "n_speculators = " << m.n_speculators << "\n"
      << "n_producers = " << m.n_producers << "\n"
      << "producer_kind = " << to_string(m.producer_kind) << "\n"
      << "use_param = " << exact_number(m.use_param) << "\n"
      << "epsilon = " << exact_number(m.epsilon) << "\n"
      << "horizon = " << m.horizon << "\n"
      << "seed = " << m.seed << "\n"
      << "record_agents = " << (m.record_agents ? "true" : "false") << "\n"
      << "memory_budget_bytes = " << m.memory_budget_bytes << "\n";

    const auto& i = c.information;
    o << "\n[information]\n"
      << "mode = " << i.mode << "\n";
    if (i.mode == "endogenous") {
        o << "memory_bits = " << i.memory_bits << "\n";
    } else {
        if (i.mode == "exogenous") {
            o << "states = " << i.states << "\n";
        } else {
            o << "endo_bits = " << i.endo_bits << "\n"
              << "exo_bits = " << i.exo_bits << "\n";
        }
        o << "distribution = " << i.distribution << "\n";
        if (i.distribution == "exponential") o << "rate = " << exact_number(i.rate) << "\n";
        if (i.distribution == "explicit") o << "weights = " << list(i.weights) << "\n";
    }

    o << "\n[analysis]\n"
      << "window = " << c.analysis.window << "\n"
      << "max_lag = " << c.analysis.max_lag << "\n"
      << "head = " << c.analysis.head << "\n";

    const auto& s = c.sweep;
    o << "\n[sweep]\n"
      << "repetitions = " << s.repetitions << "\n";
    for (std::size_t a = 0; a < s.axes.size(); ++a) {
        o << "axis" << a + 1 << " = " << s.axes[a].name << "\n"
          << "axis" << a + 1 << "_values = " << list(s.axes[a].values) << "\n";
    }
    o << "metrics = ";
    for (std::size_t k = 0; k < s.metrics.size(); ++k) o << (k ? ", " : "") << sweep::to_string(s.metrics[k]);
    o << "\n";
    if (!s.variants.empty()) {
        o << "variants = ";
        for (std::size_t k = 0; k < s.variants.size(); ++k) o << (k ? ", " : "") << sweep::to_string(s.variants[k]);
        o << "\n";
    }
    o << "variant_producers = " << s.variant_producers << "\n";
    return o.str();
}

/// Hash of the resolved configuration, stamped into every artifact.
[[nodiscard]] inline std::uint64_t config_hash(const ResolvedConfig& c) { return fnv1a64(to_ini(c)); }

}  // namespace infomarket::io
