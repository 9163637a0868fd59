#pragma once

// `locsamp` subcommands: sample, verify, bounds, bench rgo. dispatch() is the
// whole program minus main(), so tests drive it in-process.

#include "locsamp/config.hpp"
#include "locsamp/diagnostics.hpp"
#include "locsamp/dynamics.hpp"
#include "locsamp/poincare.hpp"
#include "locsamp/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace locsamp {

namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

inline std::size_t worker_threads() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("LOCSAMP_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) n = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw ValidationError(std::string("LOCSAMP_THREADS must be a positive integer, got '") + env + "'");
        }
    }
    return n;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline nlohmann::ordered_json to_json(const CheckReport& r) {
    nlohmann::ordered_json j;
    j["check"] = r.check;
    j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.inputs) j["inputs"][k] = v;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["tol"] = r.tol;
    j["pass"] = r.pass;
    return j;
}

inline nlohmann::ordered_json to_json(const PIBound& b) {
    nlohmann::ordered_json j;
    j["formula_id"] = to_string(b.formula);
    j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : b.inputs) j["inputs"][k] = v;
    if (b.finite())
        j["value"] = b.value;
    else
        j["value"] = "inf";
    if (!b.reason.empty()) j["reason"] = b.reason;
    return j;
}

/// Analytic density of coordinate j of the configured target.
inline std::function<double(double)> marginal_density(const ExperimentConfig& cfg, Eigen::Index j) {
    auto normal = [](double mean, double var) {
        return [mean, var](double x) { return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * M_PI * var); };
    };
    if (cfg.target.kind == "gaussian") return normal(0.0, 1.0);
    if (cfg.target.kind == "mixture") {
        const GaussianMixture m = detail::build_mixture(cfg.target);
        std::vector<std::function<double(double)>> parts;
        for (const auto& c : m.centers()) parts.push_back(normal(c[j], m.covariance()(j, j)));
        return [parts, w = m.weights()](double x) {
            double s = 0.0;
            for (std::size_t i = 0; i < parts.size(); ++i) s += w[i] * parts[i](x);
            return s;
        };
    }
    const Matrix A = detail::to_matrix(cfg.target.A);
    const Vector b = cfg.target.b.empty() ? Vector::Zero(A.rows()) : detail::to_vector(cfg.target.b);
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) throw ValidationError("--report needs a positive definite quadratic target");
    const Matrix cov = llt.solve(Matrix::Identity(A.rows(), A.rows()));
    const Vector mean = -llt.solve(b);
    return normal(mean[j], cov(j, j));
}

struct SampleOptions {
    std::string config;
    std::optional<std::uint64_t> seed, chains, runs, max_queries;
    std::optional<double> eps;
    std::optional<std::string> out_dir;
    bool report = false;
};

inline int run_sample(const SampleOptions& o, std::ostream& out) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : parse_config(read_file(o.config));
    if (o.seed) cfg.seed = *o.seed;
    if (o.chains) cfg.chains = *o.chains;
    if (o.runs) cfg.runs = *o.runs;
    if (o.max_queries) cfg.max_total_queries = *o.max_queries;
    if (o.eps) cfg.epsilon = *o.eps;
    if (o.out_dir) cfg.output_dir = *o.out_dir;
    cfg = parse_config(serialize_config(cfg));  // re-validate after overrides

    const Potential p = cfg.potential();
    const SmoothnessProfile profile = cfg.smoothness_profile();
    const RunConfig rc = cfg.run_config();
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<RunReport> runs(cfg.runs);
    detail::for_each_index(runs.size(), worker_threads(),
                           [&](std::size_t r) { runs[r] = run_late_init_rgd(p, rc, profile, r, 1); });
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    std::string csv;
    std::vector<std::vector<double>> coords(static_cast<std::size_t>(p.dim()));
    for (const auto& run : runs) {
        for (const auto& ch : run.chains) {
            for (Eigen::Index j = 0; j < ch.sample.size(); ++j) {
                if (j) csv += ',';
                csv += format_double(ch.sample[j]);
                coords[static_cast<std::size_t>(j)].push_back(ch.sample[j]);
            }
            csv += '\n';
        }
    }
    write_file(dir / "samples.csv", csv);

    nlohmann::ordered_json rep;
    rep["config"] = nlohmann::ordered_json::parse(serialize_config(cfg));
    rep["epsilon"] = rc.epsilon;
    rep["s0"] = *rc.s0;
    rep["T"] = *rc.T;
    rep["rgo_sigma2"] = 1.0 / (*rc.T + *rc.s0);
    rep["draws"] = cfg.runs * cfg.chains;
    QuerySnapshot total;
    std::vector<double> k_formula;
    std::vector<std::uint64_t> K, K_prime, iters, rounds, queries;
    std::vector<bool> truncated, capped;
    std::uint64_t n_trunc = 0, n_capped = 0;
    for (const auto& run : runs) {
        total = total + run.queries;
        for (const auto& ch : run.chains) {
            k_formula.push_back(ch.K_formula);
            K.push_back(ch.K);
            K_prime.push_back(ch.K_prime);
            iters.push_back(ch.iterations_done);
            rounds.push_back(ch.rejection_rounds);
            queries.push_back(ch.queries.total());
            truncated.push_back(ch.truncated);
            capped.push_back(ch.capped);
            n_trunc += ch.truncated;
            n_capped += ch.capped;
        }
    }
    rep["queries"] = {{"value", total.value_queries}, {"gradient", total.gradient_queries}, {"total", total.total()}};
    rep["truncated_chains"] = n_trunc;
    rep["capped_chains"] = n_capped;
    auto& pc = rep["per_chain"];
    pc["K_formula"] = k_formula;
    pc["K"] = K;
    pc["K_prime"] = K_prime;
    pc["iterations"] = iters;
    pc["rejection_rounds"] = rounds;
    pc["queries"] = queries;
    pc["truncated"] = truncated;
    pc["capped"] = capped;
    if (o.report) {
        auto& diag = rep["diagnostics"];
        diag = nlohmann::ordered_json::array();
        for (std::size_t j = 0; j < coords.size() && j < 2; ++j) {
            const DivergenceReport tv =
                tv_histogram(coords[j], marginal_density(cfg, static_cast<Eigen::Index>(j)), default_edges(coords[j]));
            diag.push_back({{"coordinate", j}, {"kind", to_string(tv.kind)}, {"value", tv.value},
                            {"method", to_string(tv.method)}});
        }
    }
    write_file(dir / "report.json", rep.dump(2) + "\n");
    out << "wrote " << cfg.runs * cfg.chains << " draws to " << (dir / "samples.csv").string() << " in "
        << std::fixed << std::setprecision(2) << wall << " s";
    if (n_trunc) out << " (" << n_trunc << " chains truncated by the query budget)";
    out << "\n";
    return kExitOk;
}

inline int run_verify(const std::string& out_dir, std::uint64_t seed, std::ostream& out) {
    const auto checks = identity_battery(seed);
    nlohmann::ordered_json j;
    j["checks"] = nlohmann::ordered_json::array();
    std::size_t failed = 0;
    for (const auto& c : checks) {
        j["checks"].push_back(to_json(c));
        if (!c.pass) {
            ++failed;
            out << "FAIL " << c.check << " (max error " << c.max_abs_error() << ", tol " << c.tol << ")\n";
        }
    }
    j["passed"] = checks.size() - failed;
    j["failed"] = failed;
    std::filesystem::create_directories(out_dir);
    write_file(std::filesystem::path(out_dir) / "verify.json", j.dump(2) + "\n");
    out << checks.size() - failed << "/" << checks.size() << " checks passed\n";
    return failed == 0 ? kExitOk : kExitRuntime;
}

struct BoundsOptions {
    std::string mixture;  // "R=<value>"
    std::vector<double> sigma;
    double lambda = 1.0;
    double L = 1.0;
    double Lbar = 1.0;
    double s0 = 0.01;
    double T = 2.0;
    std::size_t grid = 200;
    bool json = false;
};

inline double parse_radius(const std::string& spec) {
    std::string v = spec;
    if (v.rfind("R=", 0) == 0) v = v.substr(2);
    try {
        std::size_t used = 0;
        const double r = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ValidationError("--mixture expects R=<number>, got '" + spec + "'");
    }
}

inline int run_bounds(const BoundsOptions& o, std::ostream& out) {
    std::vector<PIBound> rows;
    if (!o.mixture.empty()) {
        const double R = parse_radius(o.mixture);
        rows.push_back(pi_mixture_identity(R));
        if (!o.sigma.empty()) {
            const auto d = static_cast<Eigen::Index>(o.sigma.size());
            Matrix S = Matrix::Zero(d, d);
            for (Eigen::Index i = 0; i < d; ++i) S(i, i) = o.sigma[static_cast<std::size_t>(i)];
            rows.push_back(pi_mixture_general(R, S));
        }
    } else {
        const SmoothnessProfile prof = SmoothnessProfile::constant(o.Lbar);
        rows.push_back(conservation_bound(prof, o.T));
        rows.push_back(pi_rgd_bound(o.s0, o.T, prof));
        rows.push_back(pi_initial_subgaussian(o.s0, o.lambda));
        if (o.s0 <= 2.0 * o.L) rows.push_back(pi_concatenation(o.L, o.s0, pi_initial_subgaussian(o.s0, o.lambda), prof));
        const PIBound fin = pi_subgaussian_final(o.lambda, o.L, prof, o.grid);
        rows.push_back(fin);
        if (fin.finite()) rows.push_back(pi_subgaussian_simplified(fin.input("s0"), o.lambda, o.Lbar));
    }
    if (o.json) {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& b : rows) j.push_back(to_json(b));
        out << j.dump(2) << "\n";
        return kExitOk;
    }
    std::vector<std::array<std::string, 3>> table{{"formula_id", "inputs", "value"}};
    for (const auto& b : rows) {
        std::ostringstream in;
        for (std::size_t i = 0; i < b.inputs.size(); ++i)
            in << (i ? " " : "") << b.inputs[i].first << "=" << std::setprecision(6) << b.inputs[i].second;
        std::ostringstream val;
        if (b.finite())
            val << std::setprecision(10) << b.value;
        else
            val << "inf (" << b.reason << ")";
        table.push_back({to_string(b.formula), in.str(), val.str()});
    }
    std::array<std::size_t, 2> width{0, 0};
    for (const auto& r : table)
        for (std::size_t k = 0; k < 2; ++k) width[k] = std::max(width[k], r[k].size());
    for (const auto& r : table)
        out << std::left << std::setw(static_cast<int>(width[0]) + 2) << r[0] << std::setw(static_cast<int>(width[1]) + 2)
            << r[1] << r[2] << "\n";
    return kExitOk;
}

struct BenchOptions {
    std::string target = "gaussian";
    std::size_t calls = 10000;
    std::uint64_t seed = 0;
    std::optional<double> sigma2;
};

/// Rejection-round histogram of RGO calls at centers drawn as the chain would
/// see them: y = X + sqrt(sigma2) Z with X from the target.
inline int run_bench_rgo(const BenchOptions& o, std::ostream& out, std::ostream& err) {
    std::optional<GaussianMixture> mix;
    if (o.target == "mixture") mix = symmetric_mixture_1d();
    else if (o.target != "gaussian") throw ValidationError("bench rgo: --target must be gaussian or mixture");
    const Potential p = mix ? mixture_potential(*mix) : standard_gaussian_potential(1);
    const double sigma2 = o.sigma2.value_or(1.0 / (2.0 * p.smoothness() * static_cast<double>(p.dim())));
    Rng gen = make_stream(o.seed, 0, 0);
    std::map<std::size_t, std::uint64_t> hist;
    double total = 0.0;
    for (std::size_t i = 0; i < o.calls; ++i) {
        const Vector x = mix ? mix->sample(gen) : standard_normal_vector(1, gen);
        const Vector y = x + std::sqrt(sigma2) * standard_normal_vector(1, gen);
        const RGOResult r = rgo_sample(p, RGOQuery{y, sigma2}, gen);
        ++hist[r.rejection_rounds];
        total += static_cast<double>(r.rejection_rounds);
    }
    out << "rejection_rounds,count\n";
    for (const auto& [k, n] : hist) out << k << "," << n << "\n";
    err << "mean rejection rounds " << total / static_cast<double>(std::max<std::size_t>(1, o.calls)) << " over "
        << o.calls << " calls (sigma2 = " << sigma2 << ")\n";
    return kExitOk;
}

}  // namespace cli

/// Runs one command line (without the program name). Exit codes: 0 success,
/// 1 invalid input, 2 runtime failure or failed verification.
inline int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sampling with late-initialized restricted Gaussian dynamics", "locsamp"};
    app.require_subcommand(1);

    cli::SampleOptions so;
    auto* sample = app.add_subcommand("sample", "run the sampler and write samples.csv and report.json");
    sample->add_option("--config", so.config, "experiment config (JSON or key = value)");
    sample->add_option("--seed", so.seed, "base seed");
    sample->add_option("--out", so.out_dir, "output directory");
    sample->add_option("--chains", so.chains, "chains per run");
    sample->add_option("--runs", so.runs, "independent runs");
    sample->add_option("--max-queries", so.max_queries, "per-chain oracle budget (0 = unlimited)");
    sample->add_option("--eps", so.eps, "target accuracy in (0, 1)");
    sample->add_flag("--report", so.report, "add histogram TV diagnostics for 1D marginals");

    std::string verify_out = ".";
    std::uint64_t verify_seed = 0;
    auto* verify = app.add_subcommand("verify", "run the identity battery and write verify.json");
    verify->add_option("--out", verify_out, "output directory");
    verify->add_option("--seed", verify_seed, "seed for the randomized checks");

    cli::BoundsOptions bo;
    auto* bounds = app.add_subcommand("bounds", "print Poincare-constant bounds");
    bounds->add_option("--mixture", bo.mixture, "mixture radius, as R=<value>");
    bounds->add_option("--sigma", bo.sigma, "diagonal of the mixture covariance");
    bounds->add_option("--lambda", bo.lambda, "sub-Gaussian parameter");
    bounds->add_option("--L", bo.L, "smoothness of V");
    bounds->add_option("--Lbar", bo.Lbar, "constant smoothness profile value");
    bounds->add_option("--s0", bo.s0, "initial localization time");
    bounds->add_option("--T", bo.T, "dynamics time");
    bounds->add_option("--grid", bo.grid, "grid points for the s0 minimization");
    bounds->add_flag("--json", bo.json, "emit JSON instead of a table");

    cli::BenchOptions be;
    auto* bench = app.add_subcommand("bench", "benchmarks");
    bench->require_subcommand(1);
    auto* bench_rgo = bench->add_subcommand("rgo", "rejection-round histogram of the RGO as CSV");
    bench_rgo->add_option("--target", be.target, "gaussian or mixture");
    bench_rgo->add_option("--calls", be.calls, "number of RGO calls");
    bench_rgo->add_option("--seed", be.seed, "seed");
    bench_rgo->add_option("--sigma2", be.sigma2, "RGO variance (default 1/(2 L d))");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return cli::kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return cli::kExitValidation;
    }
    try {
        if (*sample) return cli::run_sample(so, out);
        if (*verify) return cli::run_verify(verify_out, verify_seed, out);
        if (*bounds) return cli::run_bounds(bo, out);
        if (*bench_rgo) return cli::run_bench_rgo(be, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return cli::kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return cli::kExitRuntime;
    }
    err << app.help();
    return cli::kExitValidation;
}

}  // namespace locsamp
