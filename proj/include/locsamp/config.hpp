#pragma once

// Experiment configuration: a JSON document, or a flat TOML-style file of
// `key = value` lines grouped under [section] headers with JSON right-hand
// sides. Both parse into the same ExperimentConfig.

#include "locsamp/dynamics.hpp"
#include "locsamp/potential.hpp"
#include "locsamp/processes.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace locsamp {

struct ConfigIssue {
    std::size_t line = 0;  // 0 when the issue is not tied to one line
    std::string key;
    std::string reason;
};

class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues)
        : ValidationError(render(issues)), issues_(std::move(issues)) {}
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    static std::string render(const std::vector<ConfigIssue>& issues) {
        std::ostringstream os;
        os << "invalid config:";
        for (const auto& i : issues) {
            os << "\n  ";
            if (i.line > 0) os << "line " << i.line << ": ";
            os << (i.key.empty() ? "<syntax>" : i.key) << ": " << i.reason;
        }
        return os.str();
    }
    std::vector<ConfigIssue> issues_;
};

struct TargetSpec {
    std::string kind = "gaussian";  // gaussian | mixture | custom-quadratic
    int dim = 1;
    std::vector<double> weights;
    std::vector<std::vector<double>> centers;
    std::vector<std::vector<double>> covariance;
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    double c = 0.0;
    std::optional<double> min_value;
    std::optional<double> second_moment;
};

struct ProfileSpec {
    std::string kind = "auto";  // auto | constant
    double value = 0.0;
};

struct ExperimentConfig {
    TargetSpec target;
    double epsilon = 0.1;
    std::optional<double> s0;
    std::optional<double> T;
    std::uint64_t K_cap = 100;
    std::uint64_t chains = 1;
    std::uint64_t runs = 1;
    std::uint64_t seed = 0;
    std::uint64_t max_total_queries = 0;
    ProfileSpec profile;
    std::string output_dir = "out";

    Potential potential() const;
    SmoothnessProfile smoothness_profile() const;
    /// RunConfig with T and s0 defaults resolved against the target.
    RunConfig run_config() const;
};

namespace detail {

inline Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        require(static_cast<Eigen::Index>(rows[i].size()) == n, "matrix must be square");
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

inline Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline GaussianMixture build_mixture(const TargetSpec& t) {
    std::vector<Vector> centers;
    for (const auto& c : t.centers) centers.push_back(to_vector(c));
    return GaussianMixture(t.weights, std::move(centers), to_matrix(t.covariance));
}

inline const std::map<std::string, std::vector<std::string>>& known_keys() {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"target", {"kind", "dim", "weights", "centers", "covariance", "A", "b", "c", "min_value", "second_moment"}},
        {"sampler", {"epsilon", "s0", "T", "K_cap", "chains", "runs", "seed", "max_total_queries"}},
        {"profile", {"kind", "value"}},
        {"output", {"dir"}},
    };
    return keys;
}

using LineMap = std::map<std::string, std::size_t>;

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Strips a trailing `# comment` that is not inside a string literal.
inline std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

inline nlohmann::json parse_flat(const std::string& text, LineMap& lines, std::vector<ConfigIssue>& issues) {
    nlohmann::json doc = nlohmann::json::object();
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.push_back({lineno, "", "unterminated section header"});
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back({lineno, "", "expected `key = value`"});
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        const std::string rhs = trim(line.substr(eq + 1));
        if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
        const auto dot = key.find('.');
        if (dot == std::string::npos) {
            issues.push_back({lineno, key, "key must belong to a section"});
            continue;
        }
        nlohmann::json value;
        try {
            value = nlohmann::json::parse(rhs);
        } catch (const nlohmann::json::parse_error&) {
            const bool bare = !rhs.empty() && std::all_of(rhs.begin(), rhs.end(), [](unsigned char ch) {
                return std::isalnum(ch) || ch == '-' || ch == '_' || ch == '/' || ch == '.';
            });
            if (!bare) {
                issues.push_back({lineno, key, "cannot parse value `" + rhs + "`"});
                continue;
            }
            value = rhs;
        }
        const std::string sec = key.substr(0, dot);
        const std::string name = key.substr(dot + 1);
        if (lines.count(key)) issues.push_back({lineno, key, "duplicate key"});
        lines[key] = lineno;
        doc[sec][name] = std::move(value);
    }
    return doc;
}

template <class T>
void read_field(const nlohmann::json& sec, const std::string& section, const std::string& name, T& dst,
                const LineMap& lines, std::vector<ConfigIssue>& issues) {
    if (!sec.contains(name)) return;
    const std::string key = section + "." + name;
    const auto it = lines.find(key);
    const std::size_t line = it == lines.end() ? 0 : it->second;
    try {
        if constexpr (std::is_same_v<T, std::uint64_t>) {
            const auto& v = sec.at(name);
            if (!v.is_number_unsigned()) {
                issues.push_back({line, key, "must be a non-negative integer"});
                return;
            }
            dst = v.get<std::uint64_t>();
        } else {
            dst = sec.at(name).get<T>();
        }
    } catch (const nlohmann::json::exception&) {
        issues.push_back({line, key, "has the wrong type"});
    }
}

template <class T>
void read_optional(const nlohmann::json& sec, const std::string& section, const std::string& name,
                   std::optional<T>& dst, const LineMap& lines, std::vector<ConfigIssue>& issues) {
    if (!sec.contains(name) || sec.at(name).is_null()) return;
    T v{};
    const std::size_t before = issues.size();
    read_field(sec, section, name, v, lines, issues);
    if (issues.size() == before) dst = v;
}

inline std::size_t line_of(const LineMap& lines, const std::string& key) {
    const auto it = lines.find(key);
    return it == lines.end() ? 0 : it->second;
}

inline void validate(const ExperimentConfig& c, const LineMap& lines, std::vector<ConfigIssue>& issues) {
    auto bad = [&](const std::string& key, const std::string& reason) {
        issues.push_back({line_of(lines, key), key, reason});
    };
    if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) bad("sampler.epsilon", "epsilon must lie in (0, 1)");
    if (c.s0 && !(*c.s0 > 0.0 && std::isfinite(*c.s0))) bad("sampler.s0", "s0 must be positive");
    if (c.T && !(*c.T > 0.0 && std::isfinite(*c.T))) bad("sampler.T", "T must be positive");
    if (c.K_cap < 6) bad("sampler.K_cap", "K_cap must be >= 6");
    if (c.chains < 1) bad("sampler.chains", "chains must be >= 1");
    if (c.runs < 1) bad("sampler.runs", "runs must be >= 1");
    if (c.profile.kind != "auto" && c.profile.kind != "constant") bad("profile.kind", "must be auto or constant");
    if (!(c.profile.value >= 0.0 && std::isfinite(c.profile.value))) bad("profile.value", "must be finite and >= 0");
    if (c.output_dir.empty()) bad("output.dir", "must not be empty");
    const TargetSpec& t = c.target;
    if (t.kind == "gaussian") {
        if (t.dim < 1) bad("target.dim", "dim must be >= 1");
    } else if (t.kind == "mixture") {
        try {
            build_mixture(t);
        } catch (const ValidationError& e) {
            bad("target", e.what());
        }
    } else if (t.kind == "custom-quadratic") {
        try {
            const Matrix A = to_matrix(t.A);
            require(A.rows() >= 1, "A must be non-empty");
            if (!t.b.empty()) require(t.b.size() == t.A.size(), "b must match the size of A");
            const Potential p = quadratic_potential(A, t.b.empty() ? Vector::Zero(A.rows()) : to_vector(t.b), t.c,
                                                    t.min_value, t.second_moment);
            require(p.has_min_value_lower_bound(), "min_value is required when A is not positive definite");
            require(std::isfinite(p.second_moment_bound()),
                    "second_moment is required when A is not positive definite");
        } catch (const ValidationError& e) {
            bad("target", e.what());
        }
    } else {
        bad("target.kind", "must be gaussian, mixture or custom-quadratic");
    }
}

}  // namespace detail

/// Parses and validates; throws ConfigError listing every problem found.
inline ExperimentConfig parse_config(const std::string& text) {
    std::vector<ConfigIssue> issues;
    detail::LineMap lines;
    nlohmann::json doc;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError({{0, "", std::string("malformed JSON: ") + e.what()}});
        }
    } else {
        doc = detail::parse_flat(text, lines, issues);
    }
    if (!doc.is_object()) throw ConfigError({{0, "", "top level must be an object"}});
    for (const auto& [sec, body] : doc.items()) {
        const auto known = detail::known_keys().find(sec);
        if (known == detail::known_keys().end()) {
            issues.push_back({0, sec, "unknown section"});
            continue;
        }
        if (!body.is_object()) {
            issues.push_back({0, sec, "section must be a table"});
            continue;
        }
        for (const auto& [name, v] : body.items()) {
            if (std::find(known->second.begin(), known->second.end(), name) == known->second.end())
                issues.push_back({detail::line_of(lines, sec + "." + name), sec + "." + name, "unknown key"});
        }
    }

    ExperimentConfig c;
    const nlohmann::json empty = nlohmann::json::object();
    auto section = [&](const char* name) -> const nlohmann::json& {
        return doc.contains(name) && doc[name].is_object() ? doc[name] : empty;
    };
    const auto& tg = section("target");
    detail::read_field(tg, "target", "kind", c.target.kind, lines, issues);
    detail::read_field(tg, "target", "dim", c.target.dim, lines, issues);
    detail::read_field(tg, "target", "weights", c.target.weights, lines, issues);
    detail::read_field(tg, "target", "centers", c.target.centers, lines, issues);
    if (tg.contains("covariance") && tg["covariance"].is_number()) {
        // A scalar covariance means that multiple of the identity.
        const double v = tg["covariance"].get<double>();
        const std::size_t d = c.target.centers.empty() ? 1 : c.target.centers.front().size();
        c.target.covariance.assign(d, std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < d; ++i) c.target.covariance[i][i] = v;
    } else {
        detail::read_field(tg, "target", "covariance", c.target.covariance, lines, issues);
    }
    detail::read_field(tg, "target", "A", c.target.A, lines, issues);
    detail::read_field(tg, "target", "b", c.target.b, lines, issues);
    detail::read_field(tg, "target", "c", c.target.c, lines, issues);
    detail::read_optional(tg, "target", "min_value", c.target.min_value, lines, issues);
    detail::read_optional(tg, "target", "second_moment", c.target.second_moment, lines, issues);

    const auto& sm = section("sampler");
    detail::read_field(sm, "sampler", "epsilon", c.epsilon, lines, issues);
    detail::read_optional(sm, "sampler", "s0", c.s0, lines, issues);
    detail::read_optional(sm, "sampler", "T", c.T, lines, issues);
    detail::read_field(sm, "sampler", "K_cap", c.K_cap, lines, issues);
    detail::read_field(sm, "sampler", "chains", c.chains, lines, issues);
    detail::read_field(sm, "sampler", "runs", c.runs, lines, issues);
    detail::read_field(sm, "sampler", "seed", c.seed, lines, issues);
    detail::read_field(sm, "sampler", "max_total_queries", c.max_total_queries, lines, issues);

    const auto& pf = section("profile");
    detail::read_field(pf, "profile", "kind", c.profile.kind, lines, issues);
    detail::read_field(pf, "profile", "value", c.profile.value, lines, issues);
    detail::read_field(section("output"), "output", "dir", c.output_dir, lines, issues);

    if (issues.empty()) detail::validate(c, lines, issues);
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return c;
}

/// Canonical JSON form; parse_config(serialize_config(c)) reproduces c.
inline std::string serialize_config(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    auto& t = j["target"];
    t["kind"] = c.target.kind;
    if (c.target.kind == "gaussian") t["dim"] = c.target.dim;
    if (c.target.kind == "mixture") {
        t["weights"] = c.target.weights;
        t["centers"] = c.target.centers;
        t["covariance"] = c.target.covariance;
    }
    if (c.target.kind == "custom-quadratic") {
        t["A"] = c.target.A;
        t["b"] = c.target.b;
        t["c"] = c.target.c;
    }
    if (c.target.min_value) t["min_value"] = *c.target.min_value;
    if (c.target.second_moment) t["second_moment"] = *c.target.second_moment;
    auto& s = j["sampler"];
    s["epsilon"] = c.epsilon;
    if (c.s0) s["s0"] = *c.s0;
    if (c.T) s["T"] = *c.T;
    s["K_cap"] = c.K_cap;
    s["chains"] = c.chains;
    s["runs"] = c.runs;
    s["seed"] = c.seed;
    s["max_total_queries"] = c.max_total_queries;
    j["profile"]["kind"] = c.profile.kind;
    j["profile"]["value"] = c.profile.value;
    j["output"]["dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return serialize_config(a) == serialize_config(b);
}

inline Potential ExperimentConfig::potential() const {
    if (target.kind == "gaussian") return standard_gaussian_potential(target.dim);
    if (target.kind == "mixture") return mixture_potential(detail::build_mixture(target));
    const Matrix A = detail::to_matrix(target.A);
    return quadratic_potential(A, target.b.empty() ? Vector::Zero(A.rows()) : detail::to_vector(target.b), target.c,
                               target.min_value, target.second_moment);
}

/// Constant 1 for the standard Gaussian (its OU marginals are all N(0, Id)),
/// the analytic mixture profile for mixtures, and max(L, 1) for quadratics.
inline SmoothnessProfile ExperimentConfig::smoothness_profile() const {
    if (profile.kind == "constant") return SmoothnessProfile::constant(profile.value);
    if (target.kind == "gaussian") return SmoothnessProfile::constant(1.0);
    if (target.kind == "mixture") return mixture_ou_profile(detail::build_mixture(target));
    return SmoothnessProfile::constant(std::max(1.0, potential().smoothness()));
}

inline RunConfig ExperimentConfig::run_config() const {
    const Potential p = potential();
    RunConfig r;
    r.epsilon = epsilon;
    r.T = T.value_or(2.0 * p.smoothness() * static_cast<double>(p.dim()));
    r.s0 = s0.value_or(derive_s0(epsilon, p.smoothness(), p.dim(), p.second_moment_bound()));
    r.K_cap = K_cap;
    r.max_total_queries = max_total_queries;
    r.seed = seed;
    r.chains = static_cast<std::size_t>(chains);
    return r;
}

}  // namespace locsamp
