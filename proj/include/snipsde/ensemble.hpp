#pragma once

#include "snipsde/error.hpp"
#include "snipsde/parallel.hpp"
#include "snipsde/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace snipsde {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Simulation lattice t_k = t0 + k * delta, k = 0..steps.
struct TimeGrid {
    double t0 = 0.0;
    double delta = 0.05;
    std::size_t steps = 20;

    double time(std::size_t k) const noexcept { return t0 + static_cast<double>(k) * delta; }
    double end() const noexcept { return time(steps); }

    void validate() const {
        if (!std::isfinite(t0)) throw ArgumentError("grid start must be finite");
        if (!(delta > 0.0) || !std::isfinite(delta)) throw ArgumentError("grid spacing must be positive");
        if (steps < 1) throw ArgumentError("grid needs at least one step");
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// M x K standard normal variates; entry (l, k) is counter_normal(seed,
/// stream, l, k), so any subset can be regenerated independently.
class NormalDraws {
public:
    NormalDraws() = default;

    static NormalDraws generate(std::uint64_t seed, std::size_t replicates, std::size_t steps, std::uint64_t stream = 0,
                                unsigned threads = 1) {
        if (replicates < 1 || steps < 1) throw ArgumentError("normal draws need at least one replicate and one step");
        NormalDraws d;
        d.seed_ = seed;
        d.stream_ = stream;
        d.w_.resize(static_cast<Eigen::Index>(replicates), static_cast<Eigen::Index>(steps));
        parallel_for(replicates, threads, [&](std::size_t l) {
            for (std::size_t k = 0; k < steps; ++k)
                d.w_(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = counter_normal(seed, stream, l, k);
        });
        return d;
    }

    /// Wrap an explicit matrix (tests, externally supplied noise).
    static NormalDraws from_matrix(RowMatrix w) {
        NormalDraws d;
        d.w_ = std::move(w);
        d.explicit_ = true;
        return d;
    }

    std::size_t replicates() const noexcept { return static_cast<std::size_t>(w_.rows()); }
    std::size_t steps() const noexcept { return static_cast<std::size_t>(w_.cols()); }
    /// Draw driving step k -> k + 1 (k is zero-based) of replicate l.
    double operator()(std::size_t l, std::size_t k) const noexcept {
        return w_(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
    }
    const RowMatrix& matrix() const noexcept { return w_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    bool is_explicit() const noexcept { return explicit_; }

private:
    RowMatrix w_;
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    bool explicit_ = false;
};

struct AbortedReplicate {
    std::size_t replicate = 0;
    std::size_t step = 0;
};

/// Simulated trajectories on a grid. Row r is driven by draw row
/// replicate_ids[r]; column 0 is x0.
struct PathEnsemble {
    TimeGrid grid;
    double x0 = 0.0;
    RowMatrix paths;
    std::vector<std::size_t> replicate_ids;
    std::shared_ptr<const NormalDraws> draws;
    std::vector<AbortedReplicate> aborted;
    /// Recursion steps whose predictor fell outside the training ranges.
    std::size_t extrapolated_steps = 0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(paths.rows()); }
    Eigen::VectorXd terminal() const { return paths.col(paths.cols() - 1); }
    Eigen::VectorXd column(std::size_t k) const { return paths.col(static_cast<Eigen::Index>(k)); }

    /// Rows whose replicate id appears in `ids`, in the order given.
    PathEnsemble restrict_to(const std::vector<std::size_t>& ids) const {
        std::vector<std::ptrdiff_t> row_of;
        for (std::size_t r = 0; r < replicate_ids.size(); ++r) {
            if (replicate_ids[r] >= row_of.size()) row_of.resize(replicate_ids[r] + 1, -1);
            row_of[replicate_ids[r]] = static_cast<std::ptrdiff_t>(r);
        }
        PathEnsemble out = *this;
        out.paths.resize(static_cast<Eigen::Index>(ids.size()), paths.cols());
        out.replicate_ids = ids;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] >= row_of.size() || row_of[ids[i]] < 0)
                throw ArgumentError("replicate " + std::to_string(ids[i]) + " is not in the ensemble");
            out.paths.row(static_cast<Eigen::Index>(i)) = paths.row(row_of[ids[i]]);
        }
        return out;
    }
};

inline std::shared_ptr<const NormalDraws> checked_draws(std::shared_ptr<const NormalDraws> draws, std::size_t replicates,
                                                        const TimeGrid& grid) {
    if (!draws) throw ArgumentError("normal draws missing");
    if (draws->replicates() < replicates || draws->steps() < grid.steps)
        throw ArgumentError("normal draws are " + std::to_string(draws->replicates()) + " x " +
                            std::to_string(draws->steps()) + ", need at least " + std::to_string(replicates) + " x " +
                            std::to_string(grid.steps));
    return draws;
}

} // namespace snipsde
