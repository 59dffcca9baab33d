#pragma once

#include "snipsde/data_model.hpp"
#include "snipsde/ensemble.hpp"
#include "snipsde/error.hpp"
#include "snipsde/parallel.hpp"
#include "snipsde/reference_processes.hpp"
#include "snipsde/regression.hpp"
#include "snipsde/rng.hpp"
#include "snipsde/sde_recon.hpp"
#include "snipsde/snippet_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace snipsde {

namespace detail {

inline void check_coupled(const PathEnsemble& est, const PathEnsemble& truth) {
    if (!(est.grid == truth.grid)) throw ArgumentError("ensembles live on different time grids");
    if (est.size() != truth.size())
        throw ArgumentError("ensembles have different replicate counts (" + std::to_string(est.size()) + " vs " +
                            std::to_string(truth.size()) + ")");
    if (est.replicate_ids != truth.replicate_ids) throw ArgumentError("ensembles are driven by different replicates");
    if (est.size() == 0) throw ArgumentError("empty ensemble");
}

} // namespace detail

/// Root-mean-square difference of terminal values between an estimated and
/// a true ensemble driven by the same normal draws.
inline double rmse_terminal(const PathEnsemble& est, const PathEnsemble& truth) {
    detail::check_coupled(est, truth);
    const auto last = est.paths.cols() - 1;
    return std::sqrt((est.paths.col(last) - truth.paths.col(last)).squaredNorm() / static_cast<double>(est.size()));
}

/// Diagnostic: RMSE over every grid time after t0.
inline double rmse_path(const PathEnsemble& est, const PathEnsemble& truth) {
    detail::check_coupled(est, truth);
    const auto cols = est.paths.cols() - 1;
    const auto diff = est.paths.rightCols(cols) - truth.paths.rightCols(cols);
    return std::sqrt(diff.squaredNorm() / static_cast<double>(est.size() * static_cast<std::size_t>(cols)));
}

/// 2-Wasserstein distance between N(m1, s1^2) and N(m2, s2^2).
inline double wasserstein_gaussian(double m1, double s1, double m2, double s2) {
    if (!(s1 >= 0.0) || !(s2 >= 0.0)) throw ArgumentError("standard deviations must be non-negative");
    return std::hypot(m1 - m2, s1 - s2);
}

/// 2-Wasserstein distance between two equal-size empirical distributions,
/// coupling order statistics.
inline double wasserstein_empirical(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ArgumentError("empirical Wasserstein needs equal sample sizes (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
    if (a.empty()) throw ArgumentError("empty samples");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ss += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(ss / static_cast<double>(x.size()));
}

/// Slope of the least-squares line through (log x, log y).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("log-log slope needs two or more matched points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ArgumentError("log-log slope needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

struct StudyConfig {
    GaussianProcessSpec spec = GaussianProcessSpec::ou(1.0, 1.0);
    std::vector<std::size_t> n_list{100, 1000};
    std::vector<double> noise_list{0.0, 0.01, 0.1};
    std::size_t repetitions = 100;
    std::size_t replicates = 1000;
    double delta = 0.05;
    RegressionMethod method = RegressionMethod::ols;
    /// Local linear only: explicit bandwidth, else LOOCV over the default grid.
    std::optional<std::vector<double>> bandwidth;
    std::uint64_t seed = 1;
    unsigned threads = 1;

    void validate() const {
        spec.validate();
        if (n_list.empty() || noise_list.empty()) throw ArgumentError("study needs at least one n and one noise level");
        for (auto n : n_list)
            if (n < 1) throw ArgumentError("sample sizes must be >= 1");
        for (auto nu : noise_list)
            if (!(nu >= 0.0)) throw ArgumentError("noise levels must be >= 0");
        if (repetitions < 1 || replicates < 1) throw ArgumentError("repetitions and replicates must be >= 1");
        unit_interval_steps(delta);
    }
};

struct StudyCell {
    std::size_t n = 0;
    double noise = 0.0;
    /// One entry per repetition; nullopt when that repetition failed.
    std::vector<std::optional<double>> rmse;
    std::vector<std::string> failures;
    double armse = std::numeric_limits<double>::quiet_NaN();
    /// More than 5% of repetitions failed.
    bool invalid = false;
};

struct StudyResult {
    StudyConfig config;
    /// cells[i][j] for n_list[i], noise_list[j].
    std::vector<std::vector<StudyCell>> cells;

    const StudyCell& cell(std::size_t n, double noise) const {
        for (const auto& row : cells)
            for (const auto& c : row)
                if (c.n == n && c.noise == noise) return c;
        throw ArgumentError("no study cell for n = " + std::to_string(n));
    }
};

/// RMSE of one synthesize -> fit -> coupled simulate repetition.
inline double run_repetition(const StudyConfig& cfg, std::size_t n, double noise, std::uint64_t rep_seed) {
    const auto ds = synth_snippets(cfg.spec, n, cfg.delta, noise, derive_key(rep_seed, 1));
    const auto pairs = make_training_pairs(ds, PairMode::regular);
    const ConditionalModel model = [&] {
        if (cfg.method == RegressionMethod::ols) return fit_ols(pairs);
        if (cfg.bandwidth) return fit_local_linear(pairs, *cfg.bandwidth);
        return fit_local_linear(pairs, BandwidthGrid::scaled_default(pairs));
    }();

    const TimeGrid grid{0.0, cfg.delta, unit_interval_steps(cfg.delta)};
    auto draws = std::make_shared<const NormalDraws>(
        NormalDraws::generate(derive_key(rep_seed, 2), cfg.replicates, grid.steps));
    const auto est = simulate_paths(model, grid, cfg.spec.x0, cfg.replicates, draws);
    auto truth = exact_simulate(cfg.spec, grid, cfg.replicates, draws);
    if (!est.aborted.empty()) truth = truth.restrict_to(est.replicate_ids);
    return rmse_terminal(est, truth);
}

/// Q repetitions per (n, noise) cell; each repetition has its own derived
/// seed, and results are gathered by index, so output is independent of
/// the thread count.
inline StudyResult run_study(const StudyConfig& cfg) {
    cfg.validate();
    const std::size_t rows = cfg.n_list.size();
    const std::size_t cols = cfg.noise_list.size();
    const std::size_t Q = cfg.repetitions;

    StudyResult result;
    result.config = cfg;
    result.cells.assign(rows, std::vector<StudyCell>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            auto& c = result.cells[i][j];
            c.n = cfg.n_list[i];
            c.noise = cfg.noise_list[j];
            c.rmse.assign(Q, std::nullopt);
            c.failures.assign(Q, std::string{});
        }

    parallel_for(rows * cols * Q, cfg.threads, [&](std::size_t task) {
        const std::size_t q = task % Q;
        const std::size_t j = (task / Q) % cols;
        const std::size_t i = task / (Q * cols);
        auto& c = result.cells[i][j];
        const std::uint64_t rep_seed = derive_key(cfg.seed, static_cast<std::uint64_t>(StreamTag::study_repetition),
                                                  c.n, j, q);
        try {
            c.rmse[q] = run_repetition(cfg, c.n, c.noise, rep_seed);
        } catch (const Error& e) {
            c.failures[q] = e.what();
        }
    });

    for (auto& row : result.cells)
        for (auto& c : row) {
            double sum = 0.0;
            std::size_t ok = 0;
            for (const auto& r : c.rmse)
                if (r) {
                    sum += *r;
                    ++ok;
                }
            const std::size_t failed = Q - ok;
            c.invalid = static_cast<double>(failed) > 0.05 * static_cast<double>(Q);
            if (ok > 0) c.armse = sum / static_cast<double>(ok);
        }
    return result;
}

/// ARMSE table: one row per n, one column per noise level.
inline void write_armse_csv(std::ostream& out, const StudyResult& r, const std::vector<std::string>& comment = {}) {
    for (const auto& c : comment) out << "# " << c << '\n';
    out << "n";
    for (double nu : r.config.noise_list) out << ",nu=" << detail::format_double(nu);
    out << '\n';
    for (const auto& row : r.cells) {
        out << row.front().n;
        for (const auto& c : row) {
            out << ',';
            if (c.invalid)
                out << "invalid";
            else
                out << detail::format_double(c.armse);
        }
        out << '\n';
    }
}

/// Long format for boxplots: n,noise,rep,rmse,status.
inline void write_rmse_long_csv(std::ostream& out, const StudyResult& r, const std::vector<std::string>& comment = {}) {
    for (const auto& c : comment) out << "# " << c << '\n';
    out << "n,noise,rep,rmse,status\n";
    for (const auto& row : r.cells)
        for (const auto& c : row)
            for (std::size_t q = 0; q < c.rmse.size(); ++q) {
                out << c.n << ',' << detail::format_double(c.noise) << ',' << q << ',';
                if (c.rmse[q])
                    out << detail::format_double(*c.rmse[q]) << ",ok\n";
                else
                    out << ",failed\n";
            }
}

} // namespace snipsde
