#pragma once

// Helpers shared by the test suites. Nothing here calls into the code
// under test except to build inputs.

#include "snipsde/snipsde.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace snipsde::test {

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("snipsde_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline double sample_mean(const Eigen::VectorXd& v) { return v.mean(); }

inline double sample_var(const Eigen::VectorXd& v) {
    const double m = v.mean();
    return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Kolmogorov-Smirnov statistic of `x` against N(mean, sd^2).
inline double ks_statistic_normal(std::vector<double> x, double mean, double sd) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = normal_cdf((x[i] - mean) / sd);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Asymptotic KS critical value sqrt(n) D at level 0.001.
inline constexpr double ks_critical_0001 = 1.949474603504375;

/// Conditional law of X_s given X_t = x from the 2x2 joint covariance,
/// via its inverse (precision matrix): Var = 1 / P_ss,
/// mean = mu_s - (P_st / P_ss)(x - mu_t).
struct BivariateOracle {
    double mean;
    double var;
};

inline BivariateOracle condition_bivariate(double mu_s, double mu_t, double c_ss, double c_st, double c_tt, double x) {
    Eigen::Matrix2d cov;
    cov << c_ss, c_st, c_st, c_tt;
    const Eigen::Matrix2d prec = cov.inverse();
    return {mu_s - prec(0, 1) / prec(0, 0) * (x - mu_t), 1.0 / prec(0, 0)};
}

/// Regular two-point pairs generated from y = f(x, t) (+ optional noise).
template <typename F>
std::vector<TrainingPair> pairs_from(F f, std::size_t n, std::uint64_t seed, double noise = 0.0,
                                     double x_lo = -2.0, double x_hi = 2.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> ux(x_lo, x_hi);
    std::uniform_real_distribution<double> ut(0.0, 0.95);
    std::normal_distribution<double> eps(0.0, 1.0);
    std::vector<TrainingPair> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ux(gen);
        const double t = ut(gen);
        out.push_back({Predictor::regular(x, t), f(x, t) + noise * eps(gen), "S" + std::to_string(i)});
    }
    return out;
}

/// Exact OU pairs (x at a random grid time, x one step later).
inline std::vector<TrainingPair> ou_pairs(std::size_t n, double theta, double sigma, double delta, std::uint64_t seed) {
    const auto spec = GaussianProcessSpec::ou(theta, sigma);
    const auto ds = synth_snippets(spec, n, delta, 0.0, seed);
    return make_training_pairs(ds, PairMode::regular);
}

} // namespace snipsde::test
