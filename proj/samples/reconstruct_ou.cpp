// End-to-end use of the library: synthesize OU snippets, fit the one-step
// regressions, and compare reconstructed paths with exact ones driven by
// the same noise.

#include "snipsde/snipsde.hpp"

#include <iostream>
#include <memory>

int main() {
    using namespace snipsde;

    const auto spec = GaussianProcessSpec::ou(1.0, 1.0);
    const auto ds = synth_snippets(spec, 1000, 0.05, 0.0, 42);
    const auto pairs = make_training_pairs(ds, PairMode::regular);
    const auto model = fit_ols(pairs);

    std::cout << "mean coefficients (1, x, t): " << model.mean_coefficients().transpose() << '\n';
    std::cout << "variance coefficients:        " << model.var_coefficients().transpose() << '\n';

    const TimeGrid grid{0.0, 0.05, 20};
    auto draws = std::make_shared<const NormalDraws>(NormalDraws::generate(7, 1000, grid.steps));
    const auto est = simulate_paths(model, grid, 0.0, 1000, draws);
    const auto truth = exact_simulate(spec, grid, 1000, draws);

    const auto bands = percentile_curves(est, {0.05, 0.5, 0.95});
    std::cout << "terminal 5/50/95%: " << bands.values.col(bands.values.cols() - 1).transpose() << '\n';
    std::cout << "terminal RMSE vs exact paths: " << rmse_terminal(est, truth) << '\n';
    const Eigen::VectorXd a = est.terminal();
    const Eigen::VectorXd b = truth.terminal();
    std::cout << "terminal W2 distance: " << wasserstein_empirical({a.data(), std::size_t(a.size())}, {b.data(), std::size_t(b.size())})
              << '\n';
}
