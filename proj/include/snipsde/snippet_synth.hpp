#pragma once

#include "snipsde/data_model.hpp"
#include "snipsde/error.hpp"
#include "snipsde/parallel.hpp"
#include "snipsde/reference_processes.hpp"
#include "snipsde/rng.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace snipsde {

/// Number of grid steps K with K * delta = 1; throws unless 1 / delta is an
/// integer to within 1e-9.
inline std::size_t unit_interval_steps(double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw ArgumentError("delta must lie in (0, 1]");
    const double k = std::round(1.0 / delta);
    if (std::abs(k * delta - 1.0) > 1e-9)
        throw ArgumentError("delta must divide the unit interval (1/delta integral), got " + detail::format_double(delta));
    return static_cast<std::size_t>(k);
}

struct SynthOptions {
    unsigned threads = 1;
};

/// Two-point snippets from a reference process: per subject, one exact path
/// on t_k = k delta, a start time drawn uniformly from t_0..t_{K-1}, and
/// both window values contaminated with independent N(0, noise^2) errors.
/// Subject i draws only from its own counter stream, so the result does not
/// depend on thread count.
inline SnippetDataset synth_snippets(const GaussianProcessSpec& spec, std::size_t n, double delta, double noise,
                                     std::uint64_t seed, const SynthOptions& opt = {}) {
    spec.validate();
    if (n < 1) throw ArgumentError("need at least one subject");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw ArgumentError("noise level must be >= 0");
    const std::size_t K = unit_interval_steps(delta);

    std::vector<double> drift_inc(K, 0.0);
    if (spec.kind == ProcessKind::ho_lee)
        for (std::size_t k = 0; k < K; ++k)
            drift_inc[k] = spec.drift.integral(static_cast<double>(k) * delta, static_cast<double>(k + 1) * delta);

    const int width = static_cast<int>(std::to_string(n).size());
    std::vector<SnippetRecord> records(n);
    parallel_for(n, opt.threads, [&](std::size_t i) {
        CounterRng rng(derive_key(seed, static_cast<std::uint64_t>(StreamTag::synth_subject), i));
        const std::size_t start = static_cast<std::size_t>(rng.uniform_index(K));
        auto step = [&](double x, std::size_t k) {
            const double w = rng.normal();
            return spec.kind == ProcessKind::ho_lee
                       ? x + drift_inc[k] + spec.sigma * std::sqrt(delta) * w
                       : exact_step(spec, x, static_cast<double>(k) * delta, static_cast<double>(k + 1) * delta, w);
        };
        // Only the path prefix up to the window end is ever observed.
        double x_start = spec.x0;
        for (std::size_t k = 0; k < start; ++k) x_start = step(x_start, k);
        const double x_end = step(x_start, start);
        const double e1 = noise * rng.normal();
        const double e2 = noise * rng.normal();

        char id[32];
        std::snprintf(id, sizeof id, "S%0*zu", width, i + 1);
        records[i].subject_id = id;
        records[i].observations = {{static_cast<double>(start) * delta, x_start + e1},
                                   {static_cast<double>(start + 1) * delta, x_end + e2}};
    });
    return SnippetDataset::from_records(std::move(records), AffineTimeMap{}, std::pair{0.0, 1.0});
}

} // namespace snipsde
