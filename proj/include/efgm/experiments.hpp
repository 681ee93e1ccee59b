#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "estimate.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "special.hpp"

namespace efgm {

/// One Monte Carlo study request. `sizes` feeds the consistency table; the
/// replicated studies use sizes[0]. Replication r draws its sample with seed
/// substream(seed, r), so results do not depend on scheduling.
struct StudySpec {
    ParamVector model;
    std::vector<std::size_t> sizes;
    std::size_t replications = 1000;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string checkpoint_dir;  ///< empty disables checkpoint/resume
};

struct ConsistencyResult {
    ParamVector truth;
    std::vector<std::size_t> sizes;
    std::vector<ParamKey> order;
    std::vector<std::vector<double>> estimates;  ///< per size, canonical flat order
};

struct CoverageResult {
    ParamVector truth;
    std::size_t n = 0;
    std::size_t reps = 0;
    double alpha = 0.05;
    std::vector<ParamKey> order;
    std::vector<double> coverage_pct;
};

struct CovarianceStudyResult {
    std::size_t n = 0;
    std::size_t reps = 0;
    CovMatrix theoretical;
    CovMatrix empirical;
    double max_abs_dev = 0.0;
};

struct Chi2CalibrationResult {
    std::size_t n = 0;
    std::size_t reps = 0;
    double alpha = 0.05;
    int df = 0;
    std::size_t rejections = 0;
    double rejection_rate = 0.0;
};

namespace detail {

inline std::uint64_t rep_seed(std::uint64_t seed, std::uint64_t index)
{
    return substream(seed, index).next();
}

inline std::uint64_t study_digest(const StudySpec& spec, const char* which, std::size_t n)
{
    std::uint64_t h = param_digest(spec.model);
    const auto mix = [&h](std::uint64_t v) { h = mix64(h ^ (v + kGolden)); };
    for (const char* c = which; *c; ++c) mix(static_cast<std::uint64_t>(*c));
    mix(n);
    mix(spec.replications);
    std::uint64_t abits;
    static_assert(sizeof(abits) == sizeof(spec.alpha));
    std::memcpy(&abits, &spec.alpha, sizeof(abits));
    mix(abits);
    mix(spec.seed);
    return h;
}

/// Per-rep rows of `width` doubles, persisted in batches so an interrupted run
/// resumes instead of restarting. A header mismatch discards the old file.
class RepStore {
public:
    RepStore(const StudySpec& spec, const char* which, std::size_t n, std::size_t width)
        : reps_(spec.replications), width_(width), rows_(spec.replications * width, 0.0),
          have_(spec.replications, 0)
    {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "# efgm-study %s digest=%016llx reps=%llu width=%llu",
                      which, static_cast<unsigned long long>(study_digest(spec, which, n)),
                      static_cast<unsigned long long>(reps_),
                      static_cast<unsigned long long>(width_));
        header_ = buf;
        if (!spec.checkpoint_dir.empty()) {
            std::filesystem::create_directories(spec.checkpoint_dir);
            path_ = (std::filesystem::path(spec.checkpoint_dir) /
                     (std::string("study_") + which + ".ckpt"))
                        .string();
            load();
        }
    }

    bool have(std::size_t r) const { return have_[r] != 0; }
    double* row(std::size_t r) { return rows_.data() + r * width_; }
    const double* row(std::size_t r) const { return rows_.data() + r * width_; }
    void mark(std::size_t r) { have_[r] = 1; }

    /// Append rows in [first, last) that were computed this run.
    void flush(std::size_t first, std::size_t last, const std::vector<char>& fresh)
    {
        if (path_.empty()) return;
        std::ofstream out(path_, started_ ? std::ios::app : std::ios::trunc);
        if (!out) throw std::runtime_error("checkpoint: cannot open " + path_);
        if (!started_) {
            out << header_ << "\n";
            started_ = true;
        }
        char buf[32];
        for (std::size_t r = first; r < last; ++r) {
            if (!fresh[r]) continue;
            out << r;
            for (std::size_t j = 0; j < width_; ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", row(r)[j]);
                out << ',' << buf;
            }
            out << "\n";
        }
    }

private:
    void load()
    {
        std::ifstream in(path_);
        if (!in) return;
        std::string line;
        if (!std::getline(in, line) || line != header_) return;  // stale: overwrite later
        started_ = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string cell;
            if (!std::getline(ss, cell, ',')) continue;
            const std::size_t r = std::stoull(cell);
            if (r >= reps_) continue;
            std::size_t j = 0;
            for (; j < width_ && std::getline(ss, cell, ','); ++j)
                row(r)[j] = std::strtod(cell.c_str(), nullptr);
            if (j == width_) have_[r] = 1;
        }
    }

    std::size_t reps_, width_;
    std::vector<double> rows_;
    std::vector<char> have_;
    std::string path_, header_;
    bool started_ = false;
};

/// Run `fn(rep, out_row)` for every replication not already checkpointed,
/// batches of 100, parallel inside each batch.
template <typename Fn>
void run_reps(const StudySpec& spec, const char* which, std::size_t n, std::size_t width,
              RepStore& store, Fn&& fn)
{
    constexpr std::size_t kBatch = 100;
    std::vector<char> fresh(spec.replications, 0);
    for (std::size_t base = 0; base < spec.replications; base += kBatch) {
        const std::size_t stop = std::min(base + kBatch, spec.replications);
        parallel_chunks(stop - base, 1, spec.threads,
                        [&](std::size_t, std::size_t first, std::size_t last) {
                            for (std::size_t i = first; i < last; ++i) {
                                const std::size_t r = base + i;
                                if (store.have(r)) continue;
                                fn(r, store.row(r));
                                fresh[r] = 1;
                            }
                        });
        for (std::size_t r = base; r < stop; ++r) store.mark(r);
        store.flush(base, stop, fresh);
    }
    (void)which;
    (void)n;
    (void)width;
}

}  // namespace detail

/// One seed-pinned estimate per sample size (one column per size).
inline ConsistencyResult run_consistency(const StudySpec& spec)
{
    ConsistencyResult out;
    out.truth = spec.model;
    out.sizes = spec.sizes;
    out.order = spec.model.keys();
    const CopulaModel m = CopulaModel::assume_valid(spec.model);
    for (std::size_t s = 0; s < spec.sizes.size(); ++s) {
        const SampleBatch batch =
            sample(m, spec.sizes[s], detail::rep_seed(spec.seed, s), spec.threads);
        out.estimates.push_back(estimate_moments(DataView(batch), spec.threads).flat());
    }
    return out;
}

/// Fraction of replications whose closed-form CI contains the truth, per
/// parameter, in percent.
inline CoverageResult run_coverage(const StudySpec& spec)
{
    if (spec.sizes.empty()) throw std::invalid_argument("run_coverage: no sample size");
    if (spec.replications < 1) throw std::invalid_argument("run_coverage: need replications >= 1");
    const std::size_t n = spec.sizes.front();
    const CopulaModel m = CopulaModel::assume_valid(spec.model);
    const auto keys = spec.model.keys();
    const std::size_t width = keys.size();
    const double z = norm_quantile(1.0 - spec.alpha / 2.0);
    const std::vector<double> truth = spec.model.flat();

    detail::RepStore store(spec, "coverage", n, width);
    detail::run_reps(spec, "coverage", n, width, store, [&](std::size_t r, double* row) {
        const SampleBatch batch = sample(m, n, detail::rep_seed(spec.seed, r), 1);
        const ParamVector est = estimate_moments(DataView(batch), 1);
        for (std::size_t i = 0; i < width; ++i) {
            const auto [s1, s2] = closed_form_variances(est, keys[i].mask);
            const double s = keys[i].k == 1 ? s1 : s2;
            const double half = z * std::sqrt(std::max(s, 0.0) / static_cast<double>(n));
            const double center = est.flat()[i];
            row[i] = (truth[i] >= center - half && truth[i] <= center + half) ? 1.0 : 0.0;
        }
    });

    CoverageResult out;
    out.truth = spec.model;
    out.n = n;
    out.reps = spec.replications;
    out.alpha = spec.alpha;
    out.order = keys;
    out.coverage_pct.assign(width, 0.0);
    for (std::size_t r = 0; r < spec.replications; ++r)
        for (std::size_t i = 0; i < width; ++i) out.coverage_pct[i] += store.row(r)[i];
    for (double& v : out.coverage_pct) v *= 100.0 / static_cast<double>(spec.replications);
    return out;
}

/// Sample covariance of sqrt(n)(Lambda_hat - Lambda) across replications
/// against the closed-form matrix at the truth.
inline CovarianceStudyResult run_covariance(const StudySpec& spec)
{
    if (spec.sizes.empty()) throw std::invalid_argument("run_covariance: no sample size");
    if (spec.replications < 2) throw std::invalid_argument("run_covariance: need replications >= 2");
    const std::size_t n = spec.sizes.front();
    const CopulaModel m = CopulaModel::assume_valid(spec.model);
    const std::size_t width = spec.model.keys().size();
    const double sqn = std::sqrt(static_cast<double>(n));
    const std::vector<double> truth = spec.model.flat();

    detail::RepStore store(spec, "covariance", n, width);
    detail::run_reps(spec, "covariance", n, width, store, [&](std::size_t r, double* row) {
        const SampleBatch batch = sample(m, n, detail::rep_seed(spec.seed, r), 1);
        const ParamVector est = estimate_moments(DataView(batch), 1);
        for (std::size_t i = 0; i < width; ++i) row[i] = sqn * (est.flat()[i] - truth[i]);
    });

    const auto w = static_cast<Eigen::Index>(width);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(w);
    for (std::size_t r = 0; r < spec.replications; ++r)
        mean += Eigen::Map<const Eigen::VectorXd>(store.row(r), w);
    mean /= static_cast<double>(spec.replications);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(w, w);
    for (std::size_t r = 0; r < spec.replications; ++r) {
        const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(store.row(r), w) - mean;
        cov.noalias() += x * x.transpose();
    }
    cov /= static_cast<double>(spec.replications - 1);

    CovarianceStudyResult out;
    out.n = n;
    out.reps = spec.replications;
    out.theoretical = plug_in_covariance(spec.model);
    out.empirical = CovMatrix{spec.model.keys(), cov};
    out.max_abs_dev = (cov - out.theoretical.mat).cwiseAbs().maxCoeff();
    return out;
}

/// Empirical size of the chi-squared test of Lambda^(2) = 0 when the null
/// holds; spec.model must have a zero second-order block.
inline Chi2CalibrationResult run_chi2_calibration(const StudySpec& spec)
{
    if (spec.sizes.empty()) throw std::invalid_argument("run_chi2_calibration: no sample size");
    if (spec.replications < 1)
        throw std::invalid_argument("run_chi2_calibration: need replications >= 1");
    for (mask_t mm : spec.model.masks())
        if (spec.model.get(2, mm) != 0.0)
            throw std::invalid_argument(
                "run_chi2_calibration: model must satisfy the null Lambda^(2) = 0");
    const std::size_t n = spec.sizes.front();
    const CopulaModel m = CopulaModel::assume_valid(spec.model);
    const auto& masks = spec.model.masks();
    const int df = (1 << spec.model.dim()) - spec.model.dim() - 1;

    detail::RepStore store(spec, "chi2", n, 1);
    detail::run_reps(spec, "chi2", n, 1, store, [&](std::size_t r, double* row) {
        const SampleBatch batch = sample(m, n, detail::rep_seed(spec.seed, r), 1);
        const ParamVector est = estimate_moments(DataView(batch), 1);
        double t = 0.0;
        for (mask_t mm : masks) {
            const double v = est.get(2, mm);
            t += v * v;
        }
        row[0] = static_cast<double>(n) * t;
    });

    Chi2CalibrationResult out;
    out.n = n;
    out.reps = spec.replications;
    out.alpha = spec.alpha;
    out.df = df;
    for (std::size_t r = 0; r < spec.replications; ++r)
        if (chi2_sf(store.row(r)[0], df) <= spec.alpha) ++out.rejections;
    out.rejection_rate = static_cast<double>(out.rejections) / static_cast<double>(spec.replications);
    return out;
}

}  // namespace efgm
