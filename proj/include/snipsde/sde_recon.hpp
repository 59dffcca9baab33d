#pragma once

#include "snipsde/data_model.hpp"
#include "snipsde/ensemble.hpp"
#include "snipsde/error.hpp"
#include "snipsde/parallel.hpp"
#include "snipsde/predictor.hpp"
#include "snipsde/regression.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace snipsde {

struct SimulationOptions {
    unsigned threads = 1;
    /// Fraction of replicates allowed to abort before the ensemble fails.
    double max_abort_fraction = 0.01;
};

/// Forward recursion X_k = m(Z_{k-1}) + v(Z_{k-1}) W_k with
/// Z_{k-1} = (X_{k-1}, t_{k-1}) (plus t_k for 3-component laws) and
/// v = sqrt(max(v^2, 0)). A replicate whose prediction turns non-finite is
/// dropped and listed in `aborted`.
template <ConditionalLaw Law>
PathEnsemble simulate_paths(const Law& law, const TimeGrid& grid, double x0, std::size_t replicates,
                            std::shared_ptr<const NormalDraws> draws, const SimulationOptions& opt = {}) {
    grid.validate();
    if (replicates < 1) throw ArgumentError("need at least one replicate");
    if (!std::isfinite(x0)) throw ArgumentError("x0 must be finite");
    const std::size_t dim = law.predictor_dim();
    if (dim != 2 && dim != 3) throw ArgumentError("conditional law must take 2 or 3 predictor components");
    draws = checked_draws(std::move(draws), replicates, grid);

    const auto cols = static_cast<Eigen::Index>(grid.steps + 1);
    RowMatrix paths(static_cast<Eigen::Index>(replicates), cols);
    std::vector<std::size_t> abort_step(replicates, 0);
    std::vector<unsigned char> ok(replicates, 1);
    std::vector<std::size_t> extrapolated(replicates, 0);

    parallel_for(replicates, opt.threads, [&](std::size_t l) {
        const auto row = static_cast<Eigen::Index>(l);
        double x = x0;
        paths(row, 0) = x;
        for (std::size_t k = 1; k <= grid.steps; ++k) {
            const double t_prev = grid.time(k - 1);
            const Predictor z = dim == 2 ? Predictor::regular(x, t_prev) : Predictor::irregular(x, t_prev, grid.time(k));
            if constexpr (requires { law.in_training_range(z); }) {
                if (!law.in_training_range(z)) ++extrapolated[l];
            }
            const double m = law.predict_mean(z);
            const double v2 = law.predict_var(z);
            x = m + std::sqrt(std::max(v2, 0.0)) * (*draws)(l, k - 1);
            if (!std::isfinite(m) || std::isnan(v2) || !std::isfinite(x)) {
                ok[l] = 0;
                abort_step[l] = k;
                return;
            }
            paths(row, static_cast<Eigen::Index>(k)) = x;
        }
    });

    PathEnsemble ens;
    ens.grid = grid;
    ens.x0 = x0;
    ens.draws = draws;
    for (std::size_t l = 0; l < replicates; ++l) {
        ens.extrapolated_steps += extrapolated[l];
        if (ok[l])
            ens.replicate_ids.push_back(l);
        else
            ens.aborted.push_back({l, abort_step[l]});
    }
    if (static_cast<double>(ens.aborted.size()) > opt.max_abort_fraction * static_cast<double>(replicates)) {
        throw EnsembleError(std::to_string(ens.aborted.size()) + " of " + std::to_string(replicates) +
                            " replicates hit a non-finite prediction (first at replicate " +
                            std::to_string(ens.aborted.front().replicate) + ", step " +
                            std::to_string(ens.aborted.front().step) + ")");
    }
    if (ens.aborted.empty()) {
        ens.paths = std::move(paths);
    } else {
        ens.paths.resize(static_cast<Eigen::Index>(ens.replicate_ids.size()), cols);
        for (std::size_t r = 0; r < ens.replicate_ids.size(); ++r)
            ens.paths.row(static_cast<Eigen::Index>(r)) = paths.row(static_cast<Eigen::Index>(ens.replicate_ids[r]));
    }
    return ens;
}

template <ConditionalLaw Law>
PathEnsemble simulate_paths(const Law& law, const TimeGrid& grid, double x0, std::size_t replicates, std::uint64_t seed,
                            const SimulationOptions& opt = {}) {
    grid.validate();
    auto draws = std::make_shared<const NormalDraws>(NormalDraws::generate(seed, replicates, grid.steps, 0, opt.threads));
    return simulate_paths(law, grid, x0, replicates, std::move(draws), opt);
}

/// Percentile bands: values(p, k) is the probs[p] quantile of the ensemble
/// at grid time k. `times` are in the ensemble's (normalized) units unless
/// converted.
struct PercentileCurves {
    std::vector<double> probs;
    std::vector<double> times;
    Eigen::MatrixXd values;
};

/// Empirical quantile by linear interpolation between order statistics at
/// position (n - 1) p. `sorted` must be ascending.
inline double empirical_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw ArgumentError("quantile of an empty sample");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline PercentileCurves percentile_curves(const PathEnsemble& ens, const std::vector<double>& probs) {
    if (probs.empty()) throw ArgumentError("no percentiles requested");
    for (double p : probs)
        if (!(p > 0.0 && p < 1.0)) throw ArgumentError("percentile probabilities must lie in (0, 1)");
    if (ens.size() == 0) throw ArgumentError("empty ensemble");

    PercentileCurves out;
    out.probs = probs;
    const auto cols = ens.paths.cols();
    out.values.resize(static_cast<Eigen::Index>(probs.size()), cols);
    std::vector<double> col(ens.size());
    for (Eigen::Index k = 0; k < cols; ++k) {
        out.times.push_back(ens.grid.time(static_cast<std::size_t>(k)));
        for (std::size_t r = 0; r < ens.size(); ++r) col[r] = ens.paths(static_cast<Eigen::Index>(r), k);
        std::sort(col.begin(), col.end());
        for (std::size_t p = 0; p < probs.size(); ++p)
            out.values(static_cast<Eigen::Index>(p), k) = empirical_quantile(col, probs[p]);
    }
    return out;
}

enum class ObservationFlag { below_low, within, above_high };

inline const char* to_string(ObservationFlag f) noexcept {
    switch (f) {
    case ObservationFlag::below_low: return "below_low";
    case ObservationFlag::within: return "within";
    case ObservationFlag::above_high: return "above_high";
    }
    return "?";
}

/// Compare an observation with the lowest and highest percentile curves at
/// the nearest grid time, which must be within half a grid spacing.
inline ObservationFlag flag_observation(const PercentileCurves& curves, double time, double value) {
    if (curves.times.empty() || curves.probs.empty()) throw ArgumentError("empty percentile curves");
    std::size_t nearest = 0;
    for (std::size_t k = 1; k < curves.times.size(); ++k)
        if (std::abs(curves.times[k] - time) < std::abs(curves.times[nearest] - time)) nearest = k;
    const double spacing = curves.times.size() > 1 ? std::abs(curves.times[1] - curves.times[0]) : 0.0;
    const double slack = 1e-9 * std::max({1.0, std::abs(time), spacing});
    if (std::abs(curves.times[nearest] - time) > 0.5 * spacing + slack)
        throw OutOfRangeError("time " + detail::format_double(time) + " is outside the percentile grid [" +
                              detail::format_double(curves.times.front()) + ", " +
                              detail::format_double(curves.times.back()) + "]");

    const auto lo_idx = static_cast<Eigen::Index>(std::min_element(curves.probs.begin(), curves.probs.end()) - curves.probs.begin());
    const auto hi_idx = static_cast<Eigen::Index>(std::max_element(curves.probs.begin(), curves.probs.end()) - curves.probs.begin());
    const auto k = static_cast<Eigen::Index>(nearest);
    if (value < curves.values(lo_idx, k)) return ObservationFlag::below_low;
    if (value > curves.values(hi_idx, k)) return ObservationFlag::above_high;
    return ObservationFlag::within;
}

/// Long-format ensemble export: replicate,step,time,value (times in raw units).
inline void write_paths_csv(std::ostream& out, const PathEnsemble& ens, const AffineTimeMap& map = {},
                            const std::vector<std::string>& comment = {}) {
    for (const auto& c : comment) out << "# " << c << '\n';
    out << "replicate,step,time,value\n";
    for (std::size_t r = 0; r < ens.size(); ++r)
        for (Eigen::Index k = 0; k < ens.paths.cols(); ++k)
            out << ens.replicate_ids[r] << ',' << k << ','
                << detail::format_double(map.to_raw(ens.grid.time(static_cast<std::size_t>(k)))) << ','
                << detail::format_double(ens.paths(static_cast<Eigen::Index>(r), k)) << '\n';
}

/// prob,time,value rows, ordered by time then probability.
inline void write_percentiles_csv(std::ostream& out, const PercentileCurves& curves, const AffineTimeMap& map = {},
                                  const std::vector<std::string>& comment = {}) {
    for (const auto& c : comment) out << "# " << c << '\n';
    out << "prob,time,value\n";
    std::vector<std::size_t> order(curves.probs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return curves.probs[a] < curves.probs[b]; });
    for (std::size_t k = 0; k < curves.times.size(); ++k)
        for (std::size_t p : order)
            out << detail::format_double(curves.probs[p]) << ',' << detail::format_double(map.to_raw(curves.times[k]))
                << ',' << detail::format_double(curves.values(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)))
                << '\n';
}

/// Read a prob,time,value table back into curves (times as written).
inline PercentileCurves read_percentiles_csv(std::istream& in) {
    std::string line;
    std::size_t row = 0;
    bool header = false;
    std::map<double, std::map<double, double>> by_time;
    std::vector<double> probs;
    while (std::getline(in, line)) {
        ++row;
        if (detail::is_comment_or_blank(line)) continue;
        const auto cells = detail::split(line, ',');
        if (!header) {
            if (cells.size() < 3 || cells[0] != "prob" || cells[1] != "time" || cells[2] != "value")
                throw SchemaError("percentile file header must be prob,time,value");
            header = true;
            continue;
        }
        if (cells.size() < 3) throw ParseError("row " + std::to_string(row) + ": expected 3 cells", row);
        const auto p = detail::parse_double(cells[0]);
        const auto t = detail::parse_double(cells[1]);
        const auto v = detail::parse_double(cells[2]);
        if (!p || !t || !v) throw ParseError("row " + std::to_string(row) + ": non-numeric cell", row);
        by_time[*t][*p] = *v;
        if (std::find(probs.begin(), probs.end(), *p) == probs.end()) probs.push_back(*p);
    }
    if (by_time.empty()) throw SchemaError("percentile file has no rows");
    std::sort(probs.begin(), probs.end());

    PercentileCurves curves;
    curves.probs = probs;
    curves.values.resize(static_cast<Eigen::Index>(probs.size()), static_cast<Eigen::Index>(by_time.size()));
    Eigen::Index k = 0;
    for (const auto& [t, row_values] : by_time) {
        curves.times.push_back(t);
        for (std::size_t p = 0; p < probs.size(); ++p) {
            const auto it = row_values.find(probs[p]);
            if (it == row_values.end())
                throw SchemaError("percentile " + detail::format_double(probs[p]) + " missing at time " +
                                  detail::format_double(t));
            curves.values(static_cast<Eigen::Index>(p), k) = it->second;
        }
        ++k;
    }
    return curves;
}

} // namespace snipsde
