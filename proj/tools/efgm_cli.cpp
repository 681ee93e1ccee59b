#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "efgm/efgm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitReject = 1;    // statistical rejection in --strict mode
constexpr int kExitInvalid = 2;   // validity-constraint failure
constexpr int kExitUsage = 3;     // usage / IO / malformed input

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 20240915;
    double alpha = 0.05;
    int threads = 1;
};

efgm::Config load_config(const GlobalOpts& g)
{
    if (g.config_path.empty()) return {};
    return efgm::read_config(g.config_path);
}

int config_dimension(const efgm::Config& cfg, int fallback = 4)
{
    return cfg.has("dimension") ? static_cast<int>(cfg.get_u64("dimension")) : fallback;
}

bool config_has_lambdas(const efgm::Config& cfg)
{
    for (const auto& [key, value] : cfg.items())
        if (key.rfind("lambda", 0) == 0) return true;
    return false;
}

/// Parameter vector from --params CSV, else inline config lambdas.
std::optional<efgm::ParamVector> maybe_params(const efgm::Config& cfg,
                                              const std::string& params_path)
{
    if (!params_path.empty()) return efgm::read_params_csv(params_path);
    if (config_has_lambdas(cfg)) return efgm::params_from_config(cfg, config_dimension(cfg));
    return std::nullopt;
}

efgm::ParamVector load_params(const efgm::Config& cfg, const std::string& params_path)
{
    auto p = maybe_params(cfg, params_path);
    if (!p) throw std::runtime_error("no parameters given: use --params or config lambda keys");
    return std::move(*p);
}

std::string out_path(const GlobalOpts& g, const std::string& name)
{
    std::filesystem::create_directories(g.out_dir);
    return (std::filesystem::path(g.out_dir) / name).string();
}

/// Either checked (validity enforced) or forced construction.
efgm::CopulaModel make_model(const efgm::ParamVector& p, bool force)
{
    return force ? efgm::CopulaModel::assume_valid(p) : efgm::CopulaModel::checked(p);
}

struct DataOpts {
    std::string data_path;
    std::string pit_mode = "none";  // none | gent | ranks
    int split = 3;                  // 1: rows 1..1100, 2: rows 1101..end, 3: all
};

/// Loads a data CSV, applies the optional marginal transform, applies the
/// row split, and returns a row-major pseudo-observation matrix.
struct LoadedData {
    std::vector<double> values;
    std::size_t n = 0;
    int d = 0;
};

LoadedData load_data(const DataOpts& opts, const efgm::Config& cfg)
{
    if (opts.data_path.empty()) throw std::runtime_error("--data <csv> is required");
    const efgm::LoadedMatrix raw = efgm::read_matrix_csv(opts.data_path);
    LoadedData out;
    out.d = raw.d;

    std::vector<double> values;
    if (opts.pit_mode == "gent") {
        values = efgm::pit(raw.values, raw.n, raw.d, efgm::gent_from_config(cfg, raw.d));
    } else if (opts.pit_mode == "ranks") {
        values.resize(raw.values.size());
        std::vector<double> col(raw.n);
        for (int j = 0; j < raw.d; ++j) {
            for (std::size_t i = 0; i < raw.n; ++i) col[i] = raw.values[i * raw.d + j];
            const auto u = efgm::pit_ranks(col);
            for (std::size_t i = 0; i < raw.n; ++i) values[i * raw.d + j] = u[i];
        }
    } else if (opts.pit_mode == "none") {
        values = raw.values;
    } else {
        throw std::runtime_error("--pit must be none, gent, or ranks");
    }

    std::size_t first = 0, last = raw.n;
    if (opts.split == 1) {
        last = std::min<std::size_t>(1100, raw.n);
    } else if (opts.split == 2) {
        if (raw.n <= 1100) throw std::runtime_error("--split 2 needs more than 1100 rows");
        first = 1100;
    } else if (opts.split != 3) {
        throw std::runtime_error("--split must be 1, 2, or 3");
    }
    out.n = last - first;
    if (out.n < 2) throw std::runtime_error("selected split has fewer than 2 rows");
    out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(first * raw.d),
                      values.begin() + static_cast<std::ptrdiff_t>(last * raw.d));
    return out;
}

void print_validity(const efgm::ValidityReport& rep)
{
    if (rep.valid)
        std::cout << "valid: constraint sum " << efgm::fmt_sig(rep.constraint_sum, 6)
                  << ", margin " << efgm::fmt_sig(rep.margin(), 6) << "\n";
    else
        std::cout << "invalid: constraint sum " << efgm::fmt_sig(rep.constraint_sum, 6)
                  << ", excess " << efgm::fmt_sig(rep.excess(), 6) << "\n";
}

void print_estimates(const efgm::EstimationResult& res)
{
    const int d = res.params_hat.dim();
    std::vector<std::string> header{"k", "M", "lambda", "se", "pvalue"};
    std::vector<std::vector<std::string>> rows;
    const auto keys = res.params_hat.keys();
    for (std::size_t i = 0; i < keys.size(); ++i)
        rows.push_back({std::to_string(keys[i].k), efgm::mask_label(keys[i].mask, d),
                        efgm::fmt_sig(res.params_hat.flat()[i], 4), efgm::fmt_sig(res.se[i], 4),
                        efgm::fmt_sig(res.pvalue[i], 3)});
    efgm::write_table_md(std::cout, header, rows);
}

efgm::VarianceMode parse_variance(const std::string& s)
{
    if (s == "closed-form") return efgm::VarianceMode::closed_form;
    if (s == "plugin") return efgm::VarianceMode::plugin;
    throw std::runtime_error("--variance must be closed-form or plugin");
}

int run(int argc, char** argv)
{
    CLI::App app{"Extended FGM copula toolkit: evaluation, sampling, estimation, inference"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--config", g.config_path, "structured key = value config file");
    app.add_option("--seed", g.seed, "64-bit RNG seed");
    app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--alpha", g.alpha, "significance / CI level")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (speed only, never results)")
        ->capture_default_str();

    std::string params_path;
    bool force = false;
    DataOpts data_opts;
    std::string variance = "closed-form";
    std::string chi2_mode = "null-identity";
    bool strict = false;

    auto* c_check = app.add_subcommand("check", "validity-constraint check of a parameter vector");
    c_check->add_option("--params", params_path, "parameter CSV (k,mask,lambda)");

    auto* c_sim = app.add_subcommand("simulate", "draw n rows from the copula");
    std::size_t sim_n = 1000;
    c_sim->add_option("--params", params_path, "parameter CSV");
    c_sim->add_option("--n", sim_n, "sample size")->capture_default_str();
    c_sim->add_flag("--force", force, "sample even if the sufficient validity constraint fails");

    auto* c_est = app.add_subcommand("estimate", "moment estimates with inference columns");
    c_est->add_option("--data", data_opts.data_path, "input CSV");
    c_est->add_option("--pit", data_opts.pit_mode, "marginal transform: none|gent|ranks")
        ->capture_default_str();
    c_est->add_option("--split", data_opts.split, "row split: 1|2|3")->capture_default_str();
    c_est->add_option("--variance", variance, "se source: closed-form|plugin")->capture_default_str();

    auto* c_ci = app.add_subcommand("ci", "confidence intervals for every parameter");
    c_ci->add_option("--data", data_opts.data_path, "input CSV");
    c_ci->add_option("--pit", data_opts.pit_mode, "marginal transform: none|gent|ranks");
    c_ci->add_option("--split", data_opts.split, "row split: 1|2|3");
    c_ci->add_option("--variance", variance, "variance source: closed-form|plugin");

    auto* c_test = app.add_subcommand("test", "chi-squared test of Lambda^(2) = 0");
    c_test->add_option("--data", data_opts.data_path, "input CSV");
    c_test->add_option("--pit", data_opts.pit_mode, "marginal transform: none|gent|ranks");
    c_test->add_option("--split", data_opts.split, "row split: 1|2|3");
    c_test->add_option("--mode", chi2_mode, "null-identity|plug-in")->capture_default_str();
    c_test->add_flag("--strict", strict, "exit 1 when the test rejects at --alpha");

    auto* c_gof = app.add_subcommand("gof", "Rosenblatt + KS goodness of fit");
    c_gof->add_option("--data", data_opts.data_path, "input CSV");
    c_gof->add_option("--pit", data_opts.pit_mode, "marginal transform: none|gent|ranks");
    c_gof->add_option("--split", data_opts.split, "row split: 1|2|3");
    c_gof->add_option("--params", params_path, "model parameters (default: fit to the data)");
    c_gof->add_flag("--strict", strict, "exit 1 when any coordinate rejects at --alpha");

    auto* c_sel = app.add_subcommand("select", "classical vs extended vs reduced comparison");
    c_sel->add_option("--data", data_opts.data_path, "input CSV");
    c_sel->add_option("--pit", data_opts.pit_mode, "marginal transform: none|gent|ranks");
    c_sel->add_option("--split", data_opts.split, "row split: 1|2|3");
    bool refit = false, project = false;
    c_sel->add_flag("--refit", refit, "re-estimate kept coefficients after zeroing");
    c_sel->add_flag("--project", project, "shrink the reduced vector into the validity region");

    auto* c_study = app.add_subcommand("study", "Monte Carlo studies");
    std::string which = "consistency";
    std::string format = "csv";
    std::string checkpoint_dir;
    std::vector<std::size_t> sizes;
    std::size_t reps = 1000;
    c_study->add_option("--which", which, "consistency|coverage|covariance|chi2")
        ->capture_default_str();
    c_study->add_option("--params", params_path, "parameter CSV");
    c_study->add_option("--sizes", sizes, "sample sizes")->delimiter(',');
    c_study->add_option("--replications", reps, "replication count")->capture_default_str();
    c_study->add_option("--format", format, "table format: csv|md")->capture_default_str();
    c_study->add_option("--checkpoint", checkpoint_dir, "checkpoint directory for resume");
    c_study->add_flag("--force", force, "run even if the sufficient validity constraint fails");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    const efgm::Config cfg = load_config(g);

    if (c_check->parsed()) {
        const auto p = load_params(cfg, params_path);
        const auto rep = efgm::check_validity(p);
        print_validity(rep);
        return rep.valid ? kExitOk : kExitInvalid;
    }

    if (c_sim->parsed()) {
        const auto p = load_params(cfg, params_path);
        if (cfg.has("n") && !c_sim->count("--n")) sim_n = cfg.get_u64("n");
        const auto m = make_model(p, force);
        const auto batch = efgm::sample(m, sim_n, g.seed, g.threads);
        const auto path = out_path(g, "sample.csv");
        efgm::write_sample_csv(path, batch);
        std::cout << "wrote " << path << " (" << batch.n << " x " << batch.d << ", seed " << g.seed
                  << ")\n";
        return kExitOk;
    }

    if (c_est->parsed() || c_ci->parsed()) {
        const auto data = load_data(data_opts, cfg);
        const efgm::DataView view(data.values, data.n, data.d);
        const auto res = efgm::estimate_params(view, g.threads, parse_variance(variance));
        if (c_est->parsed()) {
            print_estimates(res);
            efgm::write_estimates_csv(out_path(g, "estimates.csv"), res);
            efgm::write_covariance_csv(out_path(g, "covariance.csv"), res.sigma_hat, data.d);
            std::cout << "wrote estimates.csv, covariance.csv in " << g.out_dir << "\n";
        } else {
            const auto keys = res.params_hat.keys();
            std::ofstream out(out_path(g, "cis.csv"));
            if (!out) throw std::runtime_error("cannot write cis.csv");
            out << "k,mask,lambda,lo,hi\n";
            std::vector<std::vector<std::string>> rows;
            for (const auto& [k, mask] : keys) {
                const auto [lo, hi] =
                    efgm::confidence_interval(res, k, mask, g.alpha, parse_variance(variance));
                out << k << ',' << mask << ',' << efgm::fmt17(res.params_hat.get(k, mask)) << ','
                    << efgm::fmt17(lo) << ',' << efgm::fmt17(hi) << "\n";
                rows.push_back({std::to_string(k), efgm::mask_label(mask, data.d),
                                efgm::fmt_sig(res.params_hat.get(k, mask), 4),
                                efgm::fmt_sig(lo, 4), efgm::fmt_sig(hi, 4)});
            }
            efgm::write_table_md(std::cout, {"k", "M", "lambda", "lo", "hi"}, rows);
            std::cout << "wrote cis.csv in " << g.out_dir << "\n";
        }
        return kExitOk;
    }

    if (c_test->parsed()) {
        const auto data = load_data(data_opts, cfg);
        const efgm::DataView view(data.values, data.n, data.d);
        const auto res = efgm::estimate_params(view, g.threads);
        efgm::Chi2Mode mode;
        if (chi2_mode == "null-identity")
            mode = efgm::Chi2Mode::null_identity;
        else if (chi2_mode == "plug-in")
            mode = efgm::Chi2Mode::plugin;
        else
            throw std::runtime_error("--mode must be null-identity or plug-in");
        const auto t = efgm::test_lambda2_zero(res, mode);
        std::cout << "T_n = " << efgm::fmt_sig(t.statistic, 6) << ", df = " << t.df
                  << ", p-value = " << efgm::fmt_sig(t.pvalue, 4) << "\n";
        std::ofstream out(out_path(g, "chi2.csv"));
        if (!out) throw std::runtime_error("cannot write chi2.csv");
        out << "statistic,df,pvalue,mode\n"
            << efgm::fmt17(t.statistic) << ',' << t.df << ',' << efgm::fmt17(t.pvalue) << ','
            << chi2_mode << "\n";
        if (strict && t.pvalue <= g.alpha) return kExitReject;
        return kExitOk;
    }

    if (c_gof->parsed()) {
        const auto data = load_data(data_opts, cfg);
        const efgm::DataView view(data.values, data.n, data.d);
        const auto given = maybe_params(cfg, params_path);
        const efgm::ParamVector p = given ? *given : efgm::estimate_moments(view, g.threads);
        if (p.dim() != data.d)
            throw std::runtime_error("model dimension does not match data width");
        const auto m = efgm::CopulaModel::assume_valid(p);
        const auto rep = efgm::gof(m, view, g.alpha);
        std::vector<std::vector<std::string>> rows;
        for (const auto& c : rep.coords)
            rows.push_back({std::to_string(c.coordinate), efgm::fmt_sig(c.statistic, 4),
                            efgm::fmt_sig(c.pvalue, 4)});
        efgm::write_table_md(std::cout, {"coordinate", "KS", "pvalue"}, rows);
        efgm::write_gof_csv(out_path(g, "gof.csv"), rep);
        std::vector<std::vector<efgm::DeviationPoint>> dev;
        std::vector<double> col(data.n);
        std::vector<double> u(data.d);
        std::vector<std::vector<double>> rcols(data.d, std::vector<double>(data.n));
        for (std::size_t i = 0; i < data.n; ++i) {
            for (int j = 0; j < data.d; ++j) u[j] = view.at(i, j);
            const auto r = efgm::rosenblatt(m, u);
            for (int j = 0; j < data.d; ++j) rcols[j][i] = r[j];
        }
        for (int j = 0; j < data.d; ++j) dev.push_back(efgm::deviation_data(rcols[j]));
        efgm::write_deviation_csv(out_path(g, "deviation.csv"), dev);
        std::cout << (rep.pass ? "no coordinate rejects" : "rejection") << " at alpha = " << g.alpha
                  << "\n";
        if (strict && !rep.pass) return kExitReject;
        return kExitOk;
    }

    if (c_sel->parsed()) {
        const auto data = load_data(data_opts, cfg);
        const efgm::DataView view(data.values, data.n, data.d);
        const auto res = efgm::estimate_params(view, g.threads);
        efgm::ParamVector reduced = efgm::reduce_model(res, g.alpha);
        if (refit) {
            // moment estimates are marginal sums, so re-fitting reproduces the
            // kept values; run it anyway for interface parity
            const auto res2 = efgm::estimate_params(view, g.threads);
            reduced = efgm::reduce_model(res2, g.alpha);
        }
        if (project) reduced = efgm::project_to_valid(reduced);
        const efgm::ParamVector classical = efgm::classical_projection(res.params_hat);
        std::vector<std::pair<std::string, efgm::ModelScore>> scores{
            {"classical", efgm::score_params(classical, view)},
            {"extended-full", efgm::score_params(res.params_hat, view)},
            {"extended-reduced", efgm::score_params(reduced, view)}};
        std::vector<std::vector<std::string>> rows;
        for (const auto& [name, s] : scores)
            rows.push_back({name, efgm::fmt_sig(s.loglik, 6), std::to_string(s.p_active),
                            efgm::fmt_sig(s.aic, 6), efgm::fmt_sig(s.bic, 6)});
        efgm::write_table_md(std::cout, {"model", "loglik", "p_active", "AIC", "BIC"}, rows);
        efgm::write_scores_csv(out_path(g, "scores.csv"), scores);
        efgm::write_params_csv(out_path(g, "reduced.csv"), reduced);
        std::cout << "wrote scores.csv, reduced.csv in " << g.out_dir << "\n";
        return kExitOk;
    }

    if (c_study->parsed()) {
        efgm::StudySpec spec;
        spec.model = load_params(cfg, params_path);
        if (!force) (void)efgm::CopulaModel::checked(spec.model);  // throws when invalid
        spec.sizes.assign(sizes.begin(), sizes.end());
        if (spec.sizes.empty() && cfg.has("sizes"))
            for (auto v : cfg.get_u64_list("sizes")) spec.sizes.push_back(v);
        if (spec.sizes.empty()) spec.sizes = {100, 1000, 10000};
        spec.replications = reps;
        spec.alpha = g.alpha;
        spec.seed = g.seed;
        spec.threads = g.threads;
        spec.checkpoint_dir = checkpoint_dir;
        const bool md = format == "md";
        if (format != "csv" && format != "md")
            throw std::runtime_error("--format must be csv or md");
        if (which == "consistency") {
            const auto res = efgm::run_consistency(spec);
            const auto path = out_path(g, md ? "study_consistency.md" : "study_consistency.csv");
            efgm::write_consistency_table(path, res, md);
            std::cout << "wrote " << path << "\n";
        } else if (which == "coverage") {
            const auto res = efgm::run_coverage(spec);
            const auto path = out_path(g, md ? "study_coverage.md" : "study_coverage.csv");
            efgm::write_coverage_table(path, res, md);
            std::cout << "wrote " << path << "\n";
        } else if (which == "covariance") {
            const auto res = efgm::run_covariance(spec);
            efgm::write_covariance_csv(out_path(g, "study_cov_theoretical.csv"), res.theoretical,
                                       spec.model.dim());
            efgm::write_covariance_csv(out_path(g, "study_cov_empirical.csv"), res.empirical,
                                       spec.model.dim());
            std::cout << "max |empirical - theoretical| = " << efgm::fmt_sig(res.max_abs_dev, 4)
                      << "; wrote study_cov_{theoretical,empirical}.csv in " << g.out_dir << "\n";
        } else if (which == "chi2") {
            const auto res = efgm::run_chi2_calibration(spec);
            const auto path = out_path(g, md ? "study_chi2.md" : "study_chi2.csv");
            efgm::write_chi2_table(path, res, md);
            std::cout << "rejection rate " << efgm::fmt_sig(100.0 * res.rejection_rate, 4)
                      << "% at alpha = " << efgm::fmt_sig(spec.alpha, 4) << "; wrote " << path
                      << "\n";
        } else {
            throw std::runtime_error("--which must be consistency, coverage, covariance, or chi2");
        }
        return kExitOk;
    }

    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const efgm::invalid_model_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const efgm::singular_prefix_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
