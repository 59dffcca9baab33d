#pragma once

#include "snipsde/data_model.hpp"
#include "snipsde/error.hpp"
#include "snipsde/parallel.hpp"
#include "snipsde/predictor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace snipsde {

/// Anything that supplies one-step conditional moments for the path
/// recursion: a fitted model, or the true law of a reference process.
template <typename Law>
concept ConditionalLaw = requires(const Law& law, const Predictor& z) {
    { law.predictor_dim() } -> std::convertible_to<std::size_t>;
    { law.predict_mean(z) } -> std::convertible_to<double>;
    { law.predict_var(z) } -> std::convertible_to<double>;
};

enum class RegressionMethod { ols, local_linear };

inline const char* to_string(RegressionMethod m) noexcept {
    return m == RegressionMethod::ols ? "ols" : "local_linear";
}

/// Per-dimension bandwidth candidates; LOOCV searches their Cartesian product.
struct BandwidthGrid {
    std::vector<std::vector<double>> per_dim;

    void validate(std::size_t dim) const {
        if (per_dim.size() != dim)
            throw ArgumentError("bandwidth grid has " + std::to_string(per_dim.size()) + " dimensions, model needs " +
                                std::to_string(dim));
        for (const auto& c : per_dim) {
            if (c.empty()) throw ArgumentError("bandwidth grid has an empty dimension");
            for (double h : c)
                if (!(h > 0.0) || !std::isfinite(h)) throw ArgumentError("bandwidth candidates must be positive");
        }
    }

    std::size_t size() const noexcept {
        std::size_t n = per_dim.empty() ? 0 : 1;
        for (const auto& c : per_dim) n *= c.size();
        return n;
    }

    /// The i-th candidate in row-major order over the dimensions.
    std::vector<double> candidate(std::size_t i) const {
        std::vector<double> h(per_dim.size());
        for (std::size_t d = per_dim.size(); d-- > 0;) {
            h[d] = per_dim[d][i % per_dim[d].size()];
            i /= per_dim[d].size();
        }
        return h;
    }

    /// `count` log-spaced candidates per dimension over [lo, hi] times the
    /// sample standard deviation of that predictor coordinate.
    static BandwidthGrid scaled_default(std::span<const TrainingPair> pairs, std::size_t count = 8, double lo = 0.05,
                                        double hi = 1.0) {
        if (pairs.empty()) throw InsufficientDataError("cannot build a bandwidth grid from zero pairs");
        if (count == 0 || !(lo > 0.0) || !(hi >= lo)) throw ArgumentError("invalid default bandwidth grid settings");
        const std::size_t dim = pairs.front().z.dim();
        BandwidthGrid grid;
        for (std::size_t d = 0; d < dim; ++d) {
            double mean = 0.0;
            for (const auto& p : pairs) mean += p.z[d];
            mean /= static_cast<double>(pairs.size());
            double ss = 0.0;
            for (const auto& p : pairs) ss += (p.z[d] - mean) * (p.z[d] - mean);
            double sd = pairs.size() > 1 ? std::sqrt(ss / static_cast<double>(pairs.size() - 1)) : 0.0;
            if (!(sd > 0.0)) sd = 1.0;
            std::vector<double> c(count);
            for (std::size_t k = 0; k < count; ++k) {
                const double frac = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
                c[k] = sd * lo * std::pow(hi / lo, frac);
            }
            grid.per_dim.push_back(std::move(c));
        }
        return grid;
    }
};

struct LocalLinearOptions {
    /// Minimum leave-one-out kernel mass, sum_{j != i} prod_d exp(-u_d^2 / 2),
    /// required at every training point for a bandwidth to be feasible.
    double min_kernel_mass = 1.0;
    /// Added to the diagonal of the weight-normalized normal equations.
    double ridge = 1e-10;
    /// Workers used to score grid candidates.
    unsigned threads = 1;
};

/// Outcome of a grid search. Infeasible candidates have no score.
struct BandwidthSelection {
    std::vector<std::vector<double>> candidates;
    std::vector<std::optional<double>> scores;
    std::size_t chosen = 0;

    const std::vector<double>& bandwidth() const { return candidates.at(chosen); }
    double score() const { return *scores.at(chosen); }
};

struct TrainingSummary {
    std::size_t n_pairs = 0;
    std::vector<std::pair<double, double>> ranges;
};

/// Training data retained by a local linear model.
struct LocalSample {
    Eigen::MatrixXd z;          // n x dim
    Eigen::VectorXd y;          // responses
    Eigen::VectorXd sq_resid;   // squared residuals of the mean fit
};

namespace detail {

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, Predictor::max_dim + 1, Predictor::max_dim + 1>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, Predictor::max_dim + 1, 1>;

struct LocalFit {
    double value = std::numeric_limits<double>::quiet_NaN();
    /// Unshifted kernel mass sum_j prod_d exp(-u_d^2 / 2).
    double mass = 0.0;
};

/// Intercept of the kernel-weighted least-squares plane at `z`, skipping
/// row `exclude`. Weights are rescaled so the nearest point has weight 1;
/// the solution is unchanged and far queries stay finite.
inline LocalFit local_linear_at(const Eigen::MatrixXd& Z, const Eigen::VectorXd& r, std::span<const double> h,
                                std::span<const double> z, double ridge,
                                std::size_t exclude = std::numeric_limits<std::size_t>::max()) {
    const auto n = static_cast<std::size_t>(Z.rows());
    const std::size_t dim = z.size();
    const std::size_t p = dim + 1;

    thread_local std::vector<double> d2;
    d2.resize(n);
    double d2_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (i == exclude) continue;
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double u = (Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) - z[d]) / h[d];
            acc += u * u;
        }
        d2[i] = acc;
        d2_min = std::min(d2_min, acc);
    }

    LocalFit fit;
    if (!std::isfinite(d2_min)) return fit;

    SmallMatrix A = SmallMatrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    SmallVector b = SmallVector::Zero(static_cast<Eigen::Index>(p));
    double wsum = 0.0;
    double row[Predictor::max_dim + 1];
    row[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == exclude) continue;
        const double w = std::exp(-0.5 * (d2[i] - d2_min));
        if (w == 0.0) continue;
        wsum += w;
        for (std::size_t d = 0; d < dim; ++d)
            row[d + 1] = (Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) - z[d]) / h[d];
        const double ri = r(static_cast<Eigen::Index>(i));
        for (std::size_t a = 0; a < p; ++a) {
            b(static_cast<Eigen::Index>(a)) += w * row[a] * ri;
            for (std::size_t c = a; c < p; ++c) A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) += w * row[a] * row[c];
        }
    }
    fit.mass = wsum * std::exp(-0.5 * d2_min);
    A /= wsum;
    b /= wsum;
    for (std::size_t a = 0; a < p; ++a) {
        A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) += ridge;
        for (std::size_t c = 0; c < a; ++c)
            A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = A(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(a));
    }
    const SmallVector beta = A.ldlt().solve(b);
    fit.value = beta(0);
    return fit;
}

inline Eigen::MatrixXd predictor_matrix(std::span<const TrainingPair> pairs, std::size_t dim) {
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < pairs.size(); ++i)
        for (std::size_t d = 0; d < dim; ++d) Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = pairs[i].z[d];
    return Z;
}

inline Eigen::VectorXd response_vector(std::span<const TrainingPair> pairs) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) y(static_cast<Eigen::Index>(i)) = pairs[i].y;
    return y;
}

/// Design matrix with a leading intercept column.
inline Eigen::MatrixXd ols_design(std::span<const TrainingPair> pairs, std::size_t dim) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(dim + 1));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        X(static_cast<Eigen::Index>(i), 0) = 1.0;
        for (std::size_t d = 0; d < dim; ++d) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d + 1)) = pairs[i].z[d];
    }
    return X;
}

inline std::string design_column_name(Eigen::Index c) {
    return c == 0 ? std::string("intercept") : std::string(predictor_column_name(static_cast<std::size_t>(c - 1)));
}

inline std::size_t checked_dim(std::span<const TrainingPair> pairs) {
    if (pairs.empty()) throw InsufficientDataError("no training pairs");
    const std::size_t dim = pairs.front().z.dim();
    for (const auto& p : pairs) {
        if (p.z.dim() != dim) throw ArgumentError("training pairs mix predictor dimensions");
        if (!p.z.finite() || !std::isfinite(p.y)) throw ArgumentError("training pair with non-finite entries");
    }
    return dim;
}

inline TrainingSummary summarize(std::span<const TrainingPair> pairs, std::size_t dim) {
    TrainingSummary s;
    s.n_pairs = pairs.size();
    s.ranges.assign(dim, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
    for (const auto& p : pairs)
        for (std::size_t d = 0; d < dim; ++d) {
            s.ranges[d].first = std::min(s.ranges[d].first, p.z[d]);
            s.ranges[d].second = std::max(s.ranges[d].second, p.z[d]);
        }
    return s;
}

/// Least squares coefficients of r on the columns of X. Throws on rank
/// deficiency, naming the columns QR pivoting could not resolve.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& r) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X.rows(), X.cols());
    qr.setThreshold(1e-10);
    qr.compute(X);
    if (qr.rank() < X.cols()) {
        std::string cols;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < X.cols(); ++k) {
            if (!cols.empty()) cols += ", ";
            cols += design_column_name(perm(k));
        }
        throw SingularDesignError("rank-deficient design (rank " + std::to_string(qr.rank()) + " of " +
                                  std::to_string(X.cols()) + "); collinear column(s): " + cols);
    }
    return qr.solve(r);
}

/// Mean LOO squared error of a local linear fit to `r`; nullopt when some
/// training point has LOO kernel mass below the threshold.
inline std::optional<double> local_linear_loocv(const Eigen::MatrixXd& Z, const Eigen::VectorXd& r,
                                                std::span<const double> h, const LocalLinearOptions& opt) {
    const auto n = static_cast<std::size_t>(Z.rows());
    const std::size_t dim = static_cast<std::size_t>(Z.cols());
    double sse = 0.0;
    std::vector<double> zi(dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim; ++d) zi[d] = Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
        const LocalFit fit = local_linear_at(Z, r, h, zi, opt.ridge, i);
        if (!(fit.mass >= opt.min_kernel_mass) || !std::isfinite(fit.value)) return std::nullopt;
        const double e = r(static_cast<Eigen::Index>(i)) - fit.value;
        sse += e * e;
    }
    return sse / static_cast<double>(n);
}

inline bool prefer_larger(const std::vector<double>& a, const std::vector<double>& b) {
    double la = 0.0;
    double lb = 0.0;
    for (double v : a) la += std::log(v);
    for (double v : b) lb += std::log(v);
    if (la != lb) return la > lb;
    return a > b;
}

inline BandwidthSelection select_bandwidth(const Eigen::MatrixXd& Z, const Eigen::VectorXd& r,
                                           const BandwidthGrid& grid, const LocalLinearOptions& opt) {
    grid.validate(static_cast<std::size_t>(Z.cols()));
    BandwidthSelection sel;
    sel.candidates.resize(grid.size());
    sel.scores.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) sel.candidates[i] = grid.candidate(i);
    parallel_for(grid.size(), opt.threads,
                 [&](std::size_t i) { sel.scores[i] = local_linear_loocv(Z, r, sel.candidates[i], opt); });

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < sel.scores.size(); ++i) {
        if (!sel.scores[i]) continue;
        if (!best) {
            best = i;
            continue;
        }
        const double a = *sel.scores[i];
        const double b = *sel.scores[*best];
        const double tol = 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
        if (a < b - tol || (std::abs(a - b) <= tol && prefer_larger(sel.candidates[i], sel.candidates[*best])))
            best = i;
    }
    if (!best)
        throw BandwidthGridTooSmallError("every bandwidth candidate leaves some training point with kernel mass below " +
                                         std::to_string(opt.min_kernel_mass) + "; widen the grid");
    sel.chosen = *best;
    return sel;
}

inline void check_bandwidth(std::span<const double> h, std::size_t dim) {
    if (h.size() != dim)
        throw ArgumentError("bandwidth has " + std::to_string(h.size()) + " components, model needs " +
                            std::to_string(dim));
    for (double v : h)
        if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("bandwidth components must be positive");
}

} // namespace detail

/// Fitted conditional mean m(z) = E(Y | Z = z) and conditional variance
/// v^2(z) = Var(Y | Z = z). Immutable once built; prediction is reentrant.
class ConditionalModel {
public:
    RegressionMethod method() const noexcept { return method_; }
    std::size_t predictor_dim() const noexcept { return dim_; }
    const TrainingSummary& training_summary() const noexcept { return summary_; }

    /// OLS coefficients (intercept first). Empty for local linear models.
    const Eigen::VectorXd& mean_coefficients() const noexcept { return mean_coef_; }
    const Eigen::VectorXd& var_coefficients() const noexcept { return var_coef_; }

    /// Local linear bandwidths (h1 for the mean, h2 for the variance).
    const std::vector<double>& mean_bandwidth() const noexcept { return h_mean_; }
    const std::vector<double>& var_bandwidth() const noexcept { return h_var_; }
    const std::shared_ptr<const LocalSample>& sample() const noexcept { return sample_; }

    const std::optional<BandwidthSelection>& mean_selection() const noexcept { return mean_sel_; }
    const std::optional<BandwidthSelection>& var_selection() const noexcept { return var_sel_; }

    /// Time units of the training data, and their scheduled spacing
    /// (normalized; 0 when unknown).
    const AffineTimeMap& time_map() const noexcept { return time_map_; }
    double spacing() const noexcept { return spacing_; }
    void set_time_context(const AffineTimeMap& map, double spacing) {
        time_map_ = map;
        spacing_ = spacing;
    }

    double predict_mean(const Predictor& z) const {
        check(z);
        return method_ == RegressionMethod::ols ? linear(mean_coef_, z) : local(sample_->y, h_mean_, z);
    }

    /// Variance prediction before the zero clamp.
    double raw_predict_var(const Predictor& z) const {
        check(z);
        return method_ == RegressionMethod::ols ? linear(var_coef_, z) : local(sample_->sq_resid, h_var_, z);
    }

    double predict_var(const Predictor& z) const {
        const double v = raw_predict_var(z);
        return std::isnan(v) ? v : std::max(v, 0.0);
    }

    /// Whether z lies inside the per-coordinate training ranges.
    bool in_training_range(const Predictor& z) const noexcept {
        for (std::size_t d = 0; d < dim_ && d < summary_.ranges.size(); ++d)
            if (z[d] < summary_.ranges[d].first || z[d] > summary_.ranges[d].second) return false;
        return true;
    }

    double ridge() const noexcept { return ridge_; }

    /// Assemble from stored parts (deserialization).
    static ConditionalModel make_ols(std::size_t dim, Eigen::VectorXd mean_coef, Eigen::VectorXd var_coef,
                                     TrainingSummary summary) {
        if (dim < 2 || dim > Predictor::max_dim) throw FormatError("predictor_dim must be 2 or 3");
        if (static_cast<std::size_t>(mean_coef.size()) != dim + 1 || static_cast<std::size_t>(var_coef.size()) != dim + 1)
            throw FormatError("OLS coefficient vectors must have predictor_dim + 1 entries");
        ConditionalModel m;
        m.method_ = RegressionMethod::ols;
        m.dim_ = dim;
        m.mean_coef_ = std::move(mean_coef);
        m.var_coef_ = std::move(var_coef);
        m.summary_ = std::move(summary);
        return m;
    }

    static ConditionalModel make_local_linear(std::shared_ptr<const LocalSample> sample, std::vector<double> h_mean,
                                              std::vector<double> h_var, TrainingSummary summary,
                                              double ridge = LocalLinearOptions{}.ridge) {
        if (!sample) throw FormatError("local linear model needs its training sample");
        const auto dim = static_cast<std::size_t>(sample->z.cols());
        if (dim < 2 || dim > Predictor::max_dim) throw FormatError("predictor_dim must be 2 or 3");
        if (sample->y.size() != sample->z.rows() || sample->sq_resid.size() != sample->z.rows())
            throw FormatError("local linear sample arrays disagree in length");
        detail::check_bandwidth(h_mean, dim);
        detail::check_bandwidth(h_var, dim);
        ConditionalModel m;
        m.method_ = RegressionMethod::local_linear;
        m.dim_ = dim;
        m.sample_ = std::move(sample);
        m.h_mean_ = std::move(h_mean);
        m.h_var_ = std::move(h_var);
        m.summary_ = std::move(summary);
        m.ridge_ = ridge;
        return m;
    }

private:
    friend ConditionalModel fit_local_linear_impl(std::span<const TrainingPair>, std::optional<std::vector<double>>,
                                                  std::optional<std::vector<double>>, const BandwidthGrid*,
                                                  const LocalLinearOptions&);

    void check(const Predictor& z) const {
        if (z.dim() != dim_)
            throw ArgumentError("predictor has dimension " + std::to_string(z.dim()) + ", model expects " +
                                std::to_string(dim_));
    }

    static double linear(const Eigen::VectorXd& c, const Predictor& z) noexcept {
        double v = c(0);
        for (std::size_t d = 0; d < z.dim(); ++d) v += c(static_cast<Eigen::Index>(d + 1)) * z[d];
        return v;
    }

    double local(const Eigen::VectorXd& r, const std::vector<double>& h, const Predictor& z) const {
        return detail::local_linear_at(sample_->z, r, h, z.values(), ridge_).value;
    }

    RegressionMethod method_ = RegressionMethod::ols;
    std::size_t dim_ = 2;
    TrainingSummary summary_;
    Eigen::VectorXd mean_coef_;
    Eigen::VectorXd var_coef_;
    std::shared_ptr<const LocalSample> sample_;
    std::vector<double> h_mean_;
    std::vector<double> h_var_;
    std::optional<BandwidthSelection> mean_sel_;
    std::optional<BandwidthSelection> var_sel_;
    double ridge_ = LocalLinearOptions{}.ridge;
    AffineTimeMap time_map_;
    double spacing_ = 0.0;
};

static_assert(ConditionalLaw<ConditionalModel>);

inline double predict_mean(const ConditionalModel& model, const Predictor& z) { return model.predict_mean(z); }
inline double predict_var(const ConditionalModel& model, const Predictor& z) { return model.predict_var(z); }

/// Multiple linear regression of y on (1, z), then of the squared
/// residuals on (1, z).
inline ConditionalModel fit_ols(std::span<const TrainingPair> pairs) {
    const std::size_t dim = detail::checked_dim(pairs);
    if (pairs.size() < dim + 2)
        throw InsufficientDataError("OLS needs at least " + std::to_string(dim + 2) + " pairs, got " +
                                    std::to_string(pairs.size()));
    const Eigen::MatrixXd X = detail::ols_design(pairs, dim);
    const Eigen::VectorXd y = detail::response_vector(pairs);
    Eigen::VectorXd beta = detail::least_squares(X, y);
    const Eigen::VectorXd resid = y - X * beta;
    Eigen::VectorXd gamma = detail::least_squares(X, resid.array().square().matrix());
    return ConditionalModel::make_ols(dim, std::move(beta), std::move(gamma), detail::summarize(pairs, dim));
}

inline ConditionalModel fit_local_linear_impl(std::span<const TrainingPair> pairs,
                                              std::optional<std::vector<double>> h_mean,
                                              std::optional<std::vector<double>> h_var, const BandwidthGrid* grid,
                                              const LocalLinearOptions& opt) {
    const std::size_t dim = detail::checked_dim(pairs);
    if (pairs.size() < 10)
        throw InsufficientDataError("local linear regression needs at least 10 pairs, got " +
                                    std::to_string(pairs.size()));
    if (!(opt.ridge >= 0.0)) throw ArgumentError("ridge must be non-negative");

    auto sample = std::make_shared<LocalSample>();
    sample->z = detail::predictor_matrix(pairs, dim);
    sample->y = detail::response_vector(pairs);

    std::optional<BandwidthSelection> mean_sel;
    if (!h_mean) {
        mean_sel = detail::select_bandwidth(sample->z, sample->y, *grid, opt);
        h_mean = mean_sel->bandwidth();
    }
    detail::check_bandwidth(*h_mean, dim);

    sample->sq_resid.resize(sample->y.size());
    std::vector<double> zi(dim);
    for (Eigen::Index i = 0; i < sample->z.rows(); ++i) {
        for (std::size_t d = 0; d < dim; ++d) zi[d] = sample->z(i, static_cast<Eigen::Index>(d));
        const double e = sample->y(i) - detail::local_linear_at(sample->z, sample->y, *h_mean, zi, opt.ridge).value;
        sample->sq_resid(i) = e * e;
    }

    std::optional<BandwidthSelection> var_sel;
    if (!h_var) {
        if (grid) {
            var_sel = detail::select_bandwidth(sample->z, sample->sq_resid, *grid, opt);
            h_var = var_sel->bandwidth();
        } else {
            h_var = h_mean;
        }
    }
    detail::check_bandwidth(*h_var, dim);

    auto model = ConditionalModel::make_local_linear(std::move(sample), std::move(*h_mean), std::move(*h_var),
                                                     detail::summarize(pairs, dim), opt.ridge);
    model.mean_sel_ = std::move(mean_sel);
    model.var_sel_ = std::move(var_sel);
    return model;
}

/// Local linear fit with one explicit bandwidth used for both the mean and
/// the squared-residual smooth.
inline ConditionalModel fit_local_linear(std::span<const TrainingPair> pairs, std::vector<double> bandwidth,
                                         const LocalLinearOptions& opt = {}) {
    return fit_local_linear_impl(pairs, bandwidth, bandwidth, nullptr, opt);
}

inline ConditionalModel fit_local_linear(std::span<const TrainingPair> pairs, std::vector<double> mean_bandwidth,
                                         std::vector<double> var_bandwidth, const LocalLinearOptions& opt = {}) {
    return fit_local_linear_impl(pairs, std::move(mean_bandwidth), std::move(var_bandwidth), nullptr, opt);
}

/// Local linear fit with h1 and h2 chosen independently by LOOCV over `grid`.
inline ConditionalModel fit_local_linear(std::span<const TrainingPair> pairs, const BandwidthGrid& grid,
                                         const LocalLinearOptions& opt = {}) {
    return fit_local_linear_impl(pairs, std::nullopt, std::nullopt, &grid, opt);
}

/// Mean squared leave-one-out prediction error of the mean fit.
/// `bandwidth` is ignored for OLS.
inline double loocv_score(std::span<const TrainingPair> pairs, RegressionMethod method,
                          std::span<const double> bandwidth = {}, const LocalLinearOptions& opt = {}) {
    const std::size_t dim = detail::checked_dim(pairs);
    if (method == RegressionMethod::ols) {
        if (pairs.size() < dim + 2)
            throw InsufficientDataError("OLS needs at least " + std::to_string(dim + 2) + " pairs");
        const Eigen::MatrixXd X = detail::ols_design(pairs, dim);
        const Eigen::VectorXd y = detail::response_vector(pairs);
        const Eigen::VectorXd beta = detail::least_squares(X, y);
        const Eigen::MatrixXd gram_inv = (X.transpose() * X).ldlt().solve(
            Eigen::MatrixXd::Identity(X.cols(), X.cols()));
        double sse = 0.0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const double lev = X.row(i) * gram_inv * X.row(i).transpose();
            const double e = (y(i) - X.row(i).dot(beta)) / (1.0 - lev);
            sse += e * e;
        }
        return sse / static_cast<double>(X.rows());
    }
    if (pairs.size() < 10) throw InsufficientDataError("local linear regression needs at least 10 pairs");
    detail::check_bandwidth(bandwidth, dim);
    const auto score = detail::local_linear_loocv(detail::predictor_matrix(pairs, dim), detail::response_vector(pairs),
                                                  bandwidth, opt);
    if (!score)
        throw InfeasibleBandwidthError("bandwidth leaves a training point with leave-one-out kernel mass below " +
                                       std::to_string(opt.min_kernel_mass));
    return *score;
}

} // namespace snipsde
