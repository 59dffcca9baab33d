#pragma once

// Gaussian reference processes with exact simulation and closed-form
// moments: Brownian motion, Ho-Lee dX = g(t) dt + sigma dB, and
// Ornstein-Uhlenbeck dX = -theta X dt + sigma dB, all started at a
// deterministic x0 at time 0.

#include "snipsde/ensemble.hpp"
#include "snipsde/error.hpp"
#include "snipsde/predictor.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace snipsde {

enum class ProcessKind { brownian, ho_lee, ou };

inline const char* to_string(ProcessKind k) noexcept {
    switch (k) {
    case ProcessKind::brownian: return "brownian";
    case ProcessKind::ho_lee: return "ho_lee";
    case ProcessKind::ou: return "ou";
    }
    return "?";
}

inline ProcessKind parse_process_kind(const std::string& s) {
    if (s == "brownian" || s == "bm") return ProcessKind::brownian;
    if (s == "ho_lee" || s == "holee" || s == "ho-lee") return ProcessKind::ho_lee;
    if (s == "ou" || s == "ornstein_uhlenbeck") return ProcessKind::ou;
    throw ArgumentError("unknown process '" + s + "' (expected brownian, ho_lee or ou)");
}

/// Deterministic Ho-Lee drift g(t). Named built-ins integrate analytically;
/// custom functions use adaptive Gauss-Kronrod quadrature.
class Drift {
public:
    static Drift named(const std::string& name) {
        Drift d;
        d.name_ = name;
        if (name == "cos") {
            d.fn_ = [](double t) { return std::cos(t); };
            d.antiderivative_ = [](double t) { return std::sin(t); };
        } else if (name == "sin") {
            d.fn_ = [](double t) { return std::sin(t); };
            d.antiderivative_ = [](double t) { return -std::cos(t); };
        } else if (name == "zero") {
            d.fn_ = [](double) { return 0.0; };
            d.antiderivative_ = [](double) { return 0.0; };
        } else if (name == "linear") {
            d.fn_ = [](double t) { return t; };
            d.antiderivative_ = [](double t) { return 0.5 * t * t; };
        } else {
            throw ArgumentError("unknown drift '" + name + "' (expected cos, sin, zero or linear)");
        }
        return d;
    }

    static Drift custom(std::string name, std::function<double(double)> g) {
        if (!g) throw ArgumentError("custom drift needs a callable");
        Drift d;
        d.name_ = std::move(name);
        d.fn_ = std::move(g);
        d.antiderivative_ = nullptr;
        return d;
    }

    const std::string& name() const noexcept { return name_; }
    bool analytic() const noexcept { return static_cast<bool>(antiderivative_); }
    double operator()(double t) const { return fn_(t); }

    /// Integral of g over [a, b].
    double integral(double a, double b) const {
        if (a == b) return 0.0;
        if (antiderivative_) return antiderivative_(b) - antiderivative_(a);
        return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(fn_, a, b, 15, 1e-10);
    }

private:
    std::string name_ = "zero";
    std::function<double(double)> fn_ = [](double) { return 0.0; };
    std::function<double(double)> antiderivative_ = [](double) { return 0.0; };
};

struct GaussianProcessSpec {
    ProcessKind kind = ProcessKind::brownian;
    double sigma = 1.0;
    double theta = 1.0;
    Drift drift = Drift::named("zero");
    double x0 = 0.0;

    static GaussianProcessSpec brownian(double x0 = 0.0) {
        GaussianProcessSpec s;
        s.kind = ProcessKind::brownian;
        s.x0 = x0;
        return s;
    }

    static GaussianProcessSpec ho_lee(double sigma, Drift g = Drift::named("cos"), double x0 = 0.0) {
        GaussianProcessSpec s;
        s.kind = ProcessKind::ho_lee;
        s.sigma = sigma;
        s.drift = std::move(g);
        s.x0 = x0;
        s.validate();
        return s;
    }

    static GaussianProcessSpec ou(double theta, double sigma, double x0 = 0.0) {
        GaussianProcessSpec s;
        s.kind = ProcessKind::ou;
        s.theta = theta;
        s.sigma = sigma;
        s.x0 = x0;
        s.validate();
        return s;
    }

    /// sigma = 0 is accepted and gives a deterministic process.
    void validate() const {
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ArgumentError("sigma must be >= 0");
        if (kind == ProcessKind::ou && !(theta > 0.0)) throw ArgumentError("theta must be > 0");
        if (!std::isfinite(x0)) throw ArgumentError("x0 must be finite");
    }

    /// Brownian motion is Ho-Lee with zero drift and unit diffusion.
    double effective_sigma() const noexcept { return kind == ProcessKind::brownian ? 1.0 : sigma; }
};

inline double mean_fn(const GaussianProcessSpec& spec, double t) {
    switch (spec.kind) {
    case ProcessKind::brownian: return spec.x0;
    case ProcessKind::ho_lee: return spec.x0 + spec.drift.integral(0.0, t);
    case ProcessKind::ou: return spec.x0 * std::exp(-spec.theta * t);
    }
    return 0.0;
}

inline double cov_fn(const GaussianProcessSpec& spec, double s, double t) {
    const double sig2 = spec.effective_sigma() * spec.effective_sigma();
    switch (spec.kind) {
    case ProcessKind::brownian:
    case ProcessKind::ho_lee: return sig2 * std::min(s, t);
    case ProcessKind::ou:
        return sig2 / (2.0 * spec.theta) * (std::exp(-spec.theta * std::abs(s - t)) - std::exp(-spec.theta * (s + t)));
    }
    return 0.0;
}

struct ConditionalMoments {
    double mean = 0.0;
    double var = 0.0;
};

/// Law of X_s given X_t = x, for 0 <= t < s.
inline ConditionalMoments conditional_moments(const GaussianProcessSpec& spec, double t, double s, double x) {
    if (!(t >= 0.0) || !(s > t)) throw ArgumentError("conditional moments need 0 <= t < s");
    const double mu_t = mean_fn(spec, t);
    if (cov_fn(spec, t, t) <= 0.0 && std::abs(x - mu_t) > 1e-12 * std::max(1.0, std::abs(mu_t)))
        throw InconsistentConditioningError("X_t has zero variance at t = " + std::to_string(t) +
                                            " but the conditioning value differs from its mean");
    const double gap = s - t;
    const double sig = spec.effective_sigma();
    switch (spec.kind) {
    case ProcessKind::brownian:
    case ProcessKind::ho_lee: return {x + (mean_fn(spec, s) - mu_t), sig * sig * gap};
    case ProcessKind::ou: {
        const double rho = std::exp(-spec.theta * gap);
        return {mean_fn(spec, s) + rho * (x - mu_t), -sig * sig / (2.0 * spec.theta) * std::expm1(-2.0 * spec.theta * gap)};
    }
    }
    return {};
}

/// True one-step law of a reference process as a ConditionalLaw: a
/// regular predictor (x, t) is advanced by `step`; an irregular one
/// (x, t, s) to its own s.
struct ReferenceLaw {
    GaussianProcessSpec spec;
    double step = 0.05;
    std::size_t dim = 2;

    std::size_t predictor_dim() const noexcept { return dim; }
    double predict_mean(const Predictor& z) const { return moments(z).mean; }
    double predict_var(const Predictor& z) const { return moments(z).var; }

private:
    ConditionalMoments moments(const Predictor& z) const {
        return conditional_moments(spec, z.t(), z.dim() == 3 ? z.s() : z.t() + step, z.x());
    }
};

/// One exact transition from x at time t to time s driven by the standard
/// normal w.
inline double exact_step(const GaussianProcessSpec& spec, double x, double t, double s, double w) {
    const double gap = s - t;
    const double sig = spec.effective_sigma();
    switch (spec.kind) {
    case ProcessKind::brownian: return x + std::sqrt(gap) * w;
    case ProcessKind::ho_lee: return x + spec.drift.integral(t, s) + sig * std::sqrt(gap) * w;
    case ProcessKind::ou: {
        const double sd = std::sqrt(-sig * sig / (2.0 * spec.theta) * std::expm1(-2.0 * spec.theta * gap));
        return std::exp(-spec.theta * gap) * x + sd * w;
    }
    }
    return x;
}

/// Exact paths on `grid` from the deterministic start x0 at grid.t0 (the
/// spec's x0 unless overridden). Uses draws(l, k) for step k -> k + 1, the
/// same alignment as simulate_paths, so the two can be coupled.
inline PathEnsemble exact_simulate(const GaussianProcessSpec& spec, const TimeGrid& grid, std::size_t replicates,
                                   std::shared_ptr<const NormalDraws> draws, std::optional<double> x0 = std::nullopt,
                                   unsigned threads = 1) {
    spec.validate();
    grid.validate();
    if (replicates < 1) throw ArgumentError("need at least one replicate");
    draws = checked_draws(std::move(draws), replicates, grid);

    PathEnsemble ens;
    ens.grid = grid;
    ens.x0 = x0.value_or(spec.x0);
    ens.draws = draws;
    ens.paths.resize(static_cast<Eigen::Index>(replicates), static_cast<Eigen::Index>(grid.steps + 1));
    ens.replicate_ids.resize(replicates);

    // Drift increments are shared by all replicates.
    std::vector<double> drift_inc(grid.steps, 0.0);
    if (spec.kind == ProcessKind::ho_lee)
        for (std::size_t k = 0; k < grid.steps; ++k) drift_inc[k] = spec.drift.integral(grid.time(k), grid.time(k + 1));

    const double sig = spec.effective_sigma();
    parallel_for(replicates, threads, [&](std::size_t l) {
        const auto row = static_cast<Eigen::Index>(l);
        ens.replicate_ids[l] = l;
        double x = ens.x0;
        ens.paths(row, 0) = x;
        for (std::size_t k = 0; k < grid.steps; ++k) {
            const double w = (*draws)(l, k);
            if (spec.kind == ProcessKind::ho_lee)
                x = x + drift_inc[k] + sig * std::sqrt(grid.time(k + 1) - grid.time(k)) * w;
            else
                x = exact_step(spec, x, grid.time(k), grid.time(k + 1), w);
            ens.paths(row, static_cast<Eigen::Index>(k + 1)) = x;
        }
    });
    return ens;
}

inline PathEnsemble exact_simulate(const GaussianProcessSpec& spec, const TimeGrid& grid, std::size_t replicates,
                                   std::uint64_t seed, unsigned threads = 1) {
    auto draws = std::make_shared<const NormalDraws>(NormalDraws::generate(seed, replicates, grid.steps, 0, threads));
    return exact_simulate(spec, grid, replicates, std::move(draws), std::nullopt, threads);
}

/// max over interior grid points t_1..t_{K-1} of |Sigma(t + delta, t) / Sigma(t, t)|:
/// the Lipschitz constant in x of the one-step conditional mean.
inline double lipschitz_constant(const GaussianProcessSpec& spec, const TimeGrid& grid, double delta) {
    grid.validate();
    if (!(delta > 0.0)) throw ArgumentError("delta must be positive");
    if (grid.steps < 2) throw ArgumentError("grid has no interior points");
    double L = 0.0;
    for (std::size_t k = 1; k < grid.steps; ++k) {
        const double t = grid.time(k);
        const double var = cov_fn(spec, t, t);
        if (!(var > 0.0)) throw ArgumentError("process variance vanishes at interior grid time " + std::to_string(t));
        L = std::max(L, std::abs(cov_fn(spec, t + delta, t) / var));
    }
    return L;
}

} // namespace snipsde
