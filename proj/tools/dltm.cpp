// dltm: simulate / fit / diagnose / forecast / pg-bench.
//
// Exit status: 0 success, 1 usage error, 2 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "dltm/dltm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dltm;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

const std::set<std::string> kTrendKeys = {"trend.kind",  "trend.delta2",    "trend.obs_var",  "trend.m0",
                                          "trend.c0_var", "trend.frequency", "trend.evolution", "trend.discount"};

StateSpaceSpec spec_from_config(const Config& c, const StateSpaceSpec& fallback)
{
    const auto kind = parse_trend_kind(c.get_string("trend.kind", to_string(fallback.kind)));
    const double delta2 = c.get_double("trend.delta2", fallback.W(0, 0));
    const double obs_var = c.get_double("trend.obs_var", fallback.obs_var);
    const double c0 = c.get_double("trend.c0_var", fallback.C0(0, 0));
    const double freq = c.get_double(
        "trend.frequency", fallback.kind == TrendKind::harmonic ? fallback.frequency : std::numbers::pi / 2);
    auto s = trend_spec(kind, delta2, obs_var, 0.0, c0, freq);
    if (c.has("trend.m0")) {
        const auto m0 = c.get_doubles("trend.m0");
        if (m0.size() == 1)
            s.m0.setConstant(m0[0]);
        else if (static_cast<Eigen::Index>(m0.size()) == s.dim())
            s.m0 = Eigen::Map<const Eigen::VectorXd>(m0.data(), static_cast<Eigen::Index>(m0.size()));
        else
            throw ConfigError("trend.m0 needs 1 or " + std::to_string(s.dim()) + " values");
    }
    const auto evo = c.get_string("trend.evolution", "additive");
    if (evo == "discount") {
        s.evolution = Evolution::discount;
        s.discount = c.get_double("trend.discount", 0.95);
    } else if (evo != "additive") {
        throw ConfigError("trend.evolution must be 'additive' or 'discount'");
    }
    s.validate();
    return s;
}

SynthDesign design_from_config(const Config& c)
{
    std::set<std::string> known = {"K", "V", "T", "doc_rate", "word_rate", "high", "sigma2", "seed", "topic_m0"};
    known.insert(kTrendKeys.begin(), kTrendKeys.end());
    c.require_known(known);
    SynthDesign d;
    d.K = static_cast<std::size_t>(c.get_int("K", static_cast<long long>(d.K)));
    d.V = static_cast<std::size_t>(c.get_int("V", static_cast<long long>(d.V)));
    d.T = static_cast<std::size_t>(c.get_int("T", static_cast<long long>(d.T)));
    d.doc_rate = c.get_double("doc_rate", d.doc_rate);
    d.word_rate = c.get_double("word_rate", d.word_rate);
    d.high = c.get_double("high", d.high);
    d.sigma2 = c.get_double("sigma2", d.sigma2);
    d.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long long>(d.seed)));
    d.spec = spec_from_config(c, d.spec);
    if (c.has("topic_m0")) {
        // K-1 consecutive state vectors
        const auto v = c.get_doubles("topic_m0");
        const std::size_t p = d.spec.dim();
        if (d.K < 1 || v.size() != (d.K - 1) * p)
            throw ConfigError("topic_m0 needs (K-1) * state dimension values");
        for (std::size_t k = 0; k + 1 < d.K; ++k)
            d.topic_m0.push_back(Eigen::Map<const Eigen::VectorXd>(v.data() + k * p, static_cast<Eigen::Index>(p)));
    }
    d.validate();
    return d;
}

struct FitPlan
{
    fs::path corpus, out;
    ChainConfig cfg;
    Hyperparams hp;
    std::size_t chains = 1;
    MatrixFormat format = MatrixFormat::csv;
};

FitPlan fit_from_config(const Config& c, const fs::path& config_path)
{
    std::set<std::string> known = {"corpus",        "out",       "format",         "chains",         "K",
                                   "n_iter",        "thin",      "burn_in",        "seed",           "pg_threshold",
                                   "aux_schedule",  "parallel",  "cached_log_sums", "prior.sigma2",  "prior.beta0_mean",
                                   "prior.beta0_var", "prior.init_inflation"};
    known.insert(kTrendKeys.begin(), kTrendKeys.end());
    c.require_known(known);
    FitPlan plan;
    const fs::path base = config_path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    plan.corpus = resolve(c.require_string("corpus"));
    if (c.has("out"))
        plan.out = resolve(c.get_string("out", ""));
    plan.format = parse_matrix_format(c.get_string("format", "csv"));
    plan.chains = static_cast<std::size_t>(c.get_int("chains", 1));

    auto& cfg = plan.cfg;
    cfg.K = static_cast<std::size_t>(c.get_int("K", static_cast<long long>(cfg.K)));
    cfg.n_iter = c.get_int("n_iter", cfg.n_iter);
    cfg.thin = c.get_int("thin", cfg.thin);
    cfg.burn_in = c.get_int("burn_in", cfg.burn_in);
    cfg.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long long>(cfg.seed)));
    cfg.pg_threshold = c.get_int("pg_threshold", cfg.pg_threshold);
    cfg.aux = parse_aux_schedule(c.get_string("aux_schedule", to_string(cfg.aux)));
    cfg.parallel = c.get_bool("parallel", cfg.parallel);
    cfg.cached_log_sums = c.get_bool("cached_log_sums", cfg.cached_log_sums);

    auto& hp = plan.hp;
    hp.sigma2 = c.get_double("prior.sigma2", hp.sigma2);
    hp.beta0_mean = c.get_double("prior.beta0_mean", hp.beta0_mean);
    hp.beta0_var = c.get_double("prior.beta0_var", hp.beta0_var);
    hp.init_inflation = c.get_double("prior.init_inflation", hp.init_inflation);
    hp.spec = spec_from_config(c, hp.spec);
    return plan;
}

void write_manifest(const fs::path& dir, const std::string& subcommand, const std::string& config_path,
                    const json& params, std::uint64_t seed, const std::vector<std::string>& argv)
{
    fs::create_directories(dir);
    const json m = {{"subcommand", subcommand},
                    {"config", config_path},
                    {"parameters", params},
                    {"seed", seed},
                    {"output", dir.string()},
                    {"version", kVersion},
                    {"argv", argv}};
    std::ofstream out(dir / "manifest.json");
    out << m.dump(2) << '\n';
    if (!out)
        throw std::runtime_error("cannot write manifest in '" + dir.string() + "'");
}

json design_to_json(const SynthDesign& d)
{
    json m0 = json::array();
    for (const auto& v : d.topic_m0)
        m0.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    return {{"K", d.K},           {"V", d.V},         {"T", d.T},           {"doc_rate", d.doc_rate},
            {"word_rate", d.word_rate}, {"high", d.high}, {"sigma2", d.sigma2}, {"spec", to_json(d.spec)},
            {"topic_m0", m0},     {"seed", d.seed}};
}

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out.precision(17);
    return out;
}

// ---- subcommands ----

struct Common
{
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::vector<std::string> argv;
};

int run_simulate(const Common& common, const std::string& design_path, const fs::path& out_dir,
                 MatrixFormat fmt)
{
    const Config c = design_path.empty() ? Config{} : Config::load(design_path);
    SynthDesign d = design_from_config(c);
    if (common.seed)
        d.seed = *common.seed;
    write_manifest(out_dir, "simulate", design_path, design_to_json(d), d.seed, common.argv);
    const auto r = simulate_corpus(d);
    save_corpus(r.corpus, (out_dir / "corpus.txt").string());
    save_truth(r.truth, out_dir / "truth", fmt);
    const auto docs = docs_per_slice(r.corpus);
    std::cerr << "simulated " << docs.size() << " slices, " << std::accumulate(docs.begin(), docs.end(), std::size_t{0})
              << " documents into " << out_dir << '\n';
    return 0;
}

int run_fit(const Common& common, const std::string& config_path, const fs::path& out_override,
            std::optional<std::size_t> chains_override, bool progress)
{
    const Config c = Config::load(config_path);
    FitPlan plan = fit_from_config(c, fs::path(config_path));
    if (common.seed)
        plan.cfg.seed = *common.seed;
    if (!out_override.empty())
        plan.out = out_override;
    if (chains_override)
        plan.chains = *chains_override;
    if (plan.out.empty())
        throw UsageError("fit needs an output directory (config key 'out' or --out)");
    if (plan.chains < 1)
        throw UsageError("chains must be at least 1");
    plan.cfg.validate();
    plan.hp.validate();

    const Corpus corpus = load_corpus(plan.corpus.string());
    if (const auto short_docs = count_short_documents(corpus); short_docs > 0)
        std::cerr << "note: " << short_docs << " documents have fewer than 20 words\n";
    const json params = {{"corpus", plan.corpus.string()},
                         {"chains", plan.chains},
                         {"format", to_string(plan.format)},
                         {"config", to_json(plan.cfg)},
                         {"hyperparams", to_json(plan.hp)}};
    write_manifest(plan.out, "fit", config_path, params, plan.cfg.seed, common.argv);

    if (plan.chains == 1) {
        SweepObserver obs;
        if (progress) {
            const auto every = std::max<std::int64_t>(1, plan.cfg.n_iter / 20);
            obs = [&, every](std::int64_t s, const ModelState&) {
                if (s % every == 0)
                    std::cerr << "sweep " << s << " / " << plan.cfg.n_iter << '\n';
            };
        }
        const auto a = run_chain(corpus, plan.cfg, plan.hp, obs);
        save_archive(a, plan.out, plan.format);
    } else {
        const auto archives = run_multi_chain(corpus, plan.cfg, plan.hp, plan.chains);
        for (std::size_t i = 0; i < archives.size(); ++i)
            save_archive(archives[i], plan.out / ("chain_" + std::to_string(i + 1)), plan.format);
    }
    return 0;
}

std::vector<double> parse_grid(const std::string& s)
{
    Config c;
    c.set("grid", s);
    return c.get_doubles("grid");
}

int run_diagnose(const Common& common, const std::vector<std::string>& archive_dirs, const std::string& truth_dir,
                 const fs::path& out_dir, std::size_t pairs, std::size_t overlap_mc, const std::string& grid_text)
{
    const std::uint64_t seed = common.seed.value_or(1);
    const json params = {{"archives", archive_dirs},
                         {"truth", truth_dir},
                         {"pairs", pairs},
                         {"overlap_mc", overlap_mc},
                         {"overlap_grid", grid_text}};
    write_manifest(out_dir, "diagnose", "", params, seed, common.argv);

    std::vector<PosteriorArchive> archives;
    for (const auto& d : archive_dirs)
        archives.push_back(load_archive(d));
    std::optional<GroundTruth> truth;
    if (!truth_dir.empty())
        truth = load_truth(truth_dir);
    const auto r = convergence_report(archives, truth ? &*truth : nullptr, pairs, seed);

    json report = to_json(r);
    report["archives"] = archive_dirs;
    if (truth)
        report["realized_proportions"] = "mean of softmax(eta) over the true documents of each slice";
    {
        auto out = open_out(out_dir / "report.json");
        out << report.dump(2) << '\n';
    }
    {
        auto out = open_out(out_dir / "topic_max_tv.csv");
        out << "k,tv\n";
        for (std::size_t k = 0; k < r.topic_max_tv.size(); ++k)
            out << k << ',' << r.topic_max_tv[k] << '\n';
    }
    {
        auto out = open_out(out_dir / "doc_max_tv.csv");
        out << "t,d,tv\n";
        std::size_t i = 0;
        for (std::size_t t = 0; t < archives[0].T; ++t)
            for (std::size_t d = 0; d < archives[0].docs[t]; ++d)
                out << t << ',' << d << ',' << r.doc_max_tv[i++] << '\n';
    }
    auto traces = [&](const fs::path& name, const std::vector<std::vector<double>>& x, const char* col) {
        auto out = open_out(out_dir / name);
        out << "k," << col << ",tv\n";
        for (std::size_t k = 0; k < x.size(); ++k)
            for (std::size_t i = 0; i < x[k].size(); ++i)
                out << k << ',' << i << ',' << x[k][i] << '\n';
    };
    traces("across_chain_tv.csv", r.across_chain_tv, "sample");
    traces("within_chain_tv.csv", r.within_chain_tv, "pair");
    if (r.truth) {
        auto out = open_out(out_dir / "truth_doc_tv.csv");
        out << "i,tv\n";
        for (std::size_t i = 0; i < r.truth->doc_tv.size(); ++i)
            out << i << ',' << r.truth->doc_tv[i] << '\n';
    }
    if (overlap_mc > 0) {
        const auto grid = parse_grid(grid_text);
        const auto curve = prior_overlap_curve(archives[0].V, grid, overlap_mc, seed);
        auto out = open_out(out_dir / "overlap_curve.csv");
        out << "sigma2,overlap\n";
        for (std::size_t i = 0; i < grid.size(); ++i)
            out << grid[i] << ',' << curve[i] << '\n';
    }
    {
        CurveOptions opt;
        opt.seed = seed;
        auto out = open_out(out_dir / "topic_curve.csv");
        write_curve_csv(marginal_topic_curve(archives[0], opt), out);
    }
    return 0;
}

int run_forecast(const Common& common, const std::string& archive_dir, int horizon, const std::string& out_path,
                 CurveOptions opt, bool include_fitted)
{
    opt.seed = common.seed.value_or(opt.seed);
    const auto a = load_archive(archive_dir);
    TopicTrendCurve curve;
    std::size_t first_t = a.T + 1;
    if (include_fitted) {
        curve = marginal_topic_curve(a, opt);
        first_t = 1;
    }
    const auto ahead = forecast_topic_curve(a, horizon, opt);
    curve.points.insert(curve.points.end(), ahead.points.begin(), ahead.points.end());
    if (out_path.empty() || out_path == "-") {
        std::cout.precision(17);
        write_curve_csv(curve, std::cout, first_t);
    } else {
        auto out = open_out(out_path);
        write_curve_csv(curve, out, first_t);
    }
    return 0;
}

int run_pg_bench(const Common& common, std::size_t n, double b_rate, double c_sd, int replications,
                 std::int64_t threshold, const std::string& out_path)
{
    const auto report = pg_bench(n, b_rate, c_sd, replications, threshold, common.seed.value_or(1));
    if (out_path.empty() || out_path == "-") {
        write_bench_csv(report, std::cout);
    } else {
        auto out = open_out(out_path);
        write_bench_csv(report, out);
    }
    std::cerr << "gaussian speedup over exact: " << report.speedup("Exact", "Gaussian") << "x\n";
    return 0;
}

void apply_threads(const Common& common)
{
    std::optional<int> n = common.threads;
    if (!n) {
        if (const char* env = std::getenv("DLTM_THREADS")) {
            try {
                n = std::stoi(env);
            } catch (const std::exception&) {
                throw UsageError(std::string("DLTM_THREADS is not an integer: '") + env + "'");
            }
        }
    }
    if (n) {
        if (*n < 1)
            throw UsageError("thread count must be at least 1");
#ifdef _OPENMP
        omp_set_num_threads(*n);
#endif
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Polya-Gamma Gibbs sampler for the dynamic linear topic model", "dltm"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kVersion);

    Common common;
    common.argv.assign(argv, argv + argc);
    std::uint64_t seed = 0;
    int threads = 0;
    auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides any config value)");
    auto* threads_opt =
        app.add_option("--threads", threads, "worker threads (default: DLTM_THREADS, else all cores)");

    auto* sim = app.add_subcommand("simulate", "generate a synthetic corpus with known truth");
    std::string design_path, fmt_name = "csv";
    std::string sim_out;
    sim->add_option("--design", design_path, "design file (key = value)")->check(CLI::ExistingFile);
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--format", fmt_name, "truth matrix format")->check(CLI::IsMember({"csv", "binary"}));

    auto* fit = app.add_subcommand("fit", "run the Gibbs sampler");
    std::string config_path, fit_out;
    std::size_t chains = 0;
    bool progress = false;
    fit->add_option("--config", config_path, "fit configuration file")->required()->check(CLI::ExistingFile);
    fit->add_option("--out", fit_out, "archive directory (overrides config)");
    auto* chains_opt = fit->add_option("--chains", chains, "independent chains (overrides config)");
    fit->add_flag("--progress", progress, "report sweeps on stderr");

    auto* diag = app.add_subcommand("diagnose", "convergence and truth-recovery report");
    std::vector<std::string> archive_dirs;
    std::string truth_dir, diag_out;
    std::size_t pairs = 1000, overlap_mc = 100;
    std::string grid = "0.01,0.1,0.25,0.5,1,2,4";
    diag->add_option("archives", archive_dirs, "archive directories")->required()->check(CLI::ExistingDirectory);
    diag->add_option("--truth", truth_dir, "ground-truth directory from simulate")->check(CLI::ExistingDirectory);
    diag->add_option("--out", diag_out, "report directory")->required();
    diag->add_option("--pairs", pairs, "within-chain sample pairs")->capture_default_str();
    diag->add_option("--overlap-mc", overlap_mc, "Monte Carlo draws for the prior overlap curve (0 skips)")
        ->capture_default_str();
    diag->add_option("--overlap-grid", grid, "comma-separated prior variances")->capture_default_str();

    auto* fc = app.add_subcommand("forecast", "marginal topic curves and trend forecasts");
    std::string fc_archive, fc_out;
    int horizon = 1;
    CurveOptions copt;
    bool no_noise = false, include_fitted = false;
    fc->add_option("archive", fc_archive, "archive directory")->required()->check(CLI::ExistingDirectory);
    fc->add_option("--horizon", horizon, "steps ahead")->check(CLI::PositiveNumber)->capture_default_str();
    fc->add_option("--out", fc_out, "CSV file (default stdout)");
    fc->add_option("--n-mc", copt.n_mc, "new-document draws per posterior sample")->capture_default_str();
    fc->add_option("--lower", copt.lower, "lower band quantile")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    fc->add_option("--upper", copt.upper, "upper band quantile")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    fc->add_flag("--no-obs-noise", no_noise, "bands from state uncertainty only");
    fc->add_flag("--include-fitted", include_fitted, "also emit the curve at the fitted slices");

    auto* bench = app.add_subcommand("pg-bench", "time exact against approximate Polya-Gamma draws");
    std::size_t bench_n = 1000;
    double b_rate = 150, c_sd = 1;
    int reps = 100;
    std::int64_t threshold = kDefaultPgThreshold;
    std::string bench_out;
    bench->add_option("--n", bench_n, "draws per replication")->capture_default_str();
    bench->add_option("--b-rate", b_rate, "Poisson mean of the shape b")->capture_default_str();
    bench->add_option("--c-sd", c_sd, "standard deviation of the tilt c")->capture_default_str();
    bench->add_option("--replications", reps, "replications")->capture_default_str();
    bench->add_option("--threshold", threshold, "dispatch threshold on b")->capture_default_str();
    bench->add_option("--out", bench_out, "CSV file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    if (*seed_opt)
        common.seed = seed;
    if (*threads_opt)
        common.threads = threads;

    try {
        apply_threads(common);
        if (*sim)
            return run_simulate(common, design_path, sim_out, parse_matrix_format(fmt_name));
        if (*fit)
            return run_fit(common, config_path, fit_out, *chains_opt ? std::optional<std::size_t>(chains) : std::nullopt,
                           progress);
        if (*diag)
            return run_diagnose(common, archive_dirs, truth_dir, diag_out, pairs, overlap_mc, grid);
        if (*fc) {
            copt.include_obs_noise = !no_noise;
            return run_forecast(common, fc_archive, horizon, fc_out, copt, include_fitted);
        }
        if (*bench)
            return run_pg_bench(common, bench_n, b_rate, c_sd, reps, threshold, bench_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
