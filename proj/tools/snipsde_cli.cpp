// snipsde command-line front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 argument error.

#include "snipsde/snipsde.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace snipsde;

/// Tool version plus the argument echo. --threads only changes scheduling,
/// so it is left out to keep outputs identical across thread counts.
std::string provenance_line(int argc, char** argv) {
    std::string line = std::string("snipsde ") + snipsde::version + " args:";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--threads") {
            ++i;
            continue;
        }
        if (a.rfind("--threads=", 0) == 0) continue;
        line += ' ';
        line += a;
    }
    return line;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto v = detail::parse_double(detail::trim(item));
        if (!v) throw ArgumentError("cannot parse '" + item + "' in " + what);
        out.push_back(*v);
    }
    if (out.empty()) throw ArgumentError(what + " is empty");
    return out;
}

std::vector<std::size_t> parse_counts(const std::string& text, const std::string& what) {
    std::vector<std::size_t> out;
    for (double v : parse_list(text, what)) {
        if (!(v >= 1.0) || v != std::floor(v)) throw ArgumentError(what + " entries must be positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    return out;
}

struct ProcessArgs {
    std::string process;
    double theta = 1.0;
    double sigma = 1.0;
    std::string g = "cos";
    double x0 = 0.0;

    void add_to(CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--process", process, "Reference process: brownian, ho_lee or ou");
        if (required) opt->required();
        cmd->add_option("--theta", theta, "OU mean-reversion rate")->capture_default_str();
        cmd->add_option("--sigma", sigma, "Diffusion scale")->capture_default_str();
        cmd->add_option("--g", g, "Ho-Lee drift: cos, sin, zero or linear")->capture_default_str();
        cmd->add_option("--x0", x0, "Initial value at t = 0")->capture_default_str();
    }

    GaussianProcessSpec spec() const {
        switch (parse_process_kind(process)) {
        case ProcessKind::brownian: return GaussianProcessSpec::brownian(x0);
        case ProcessKind::ho_lee: return GaussianProcessSpec::ho_lee(sigma, Drift::named(g), x0);
        case ProcessKind::ou: return GaussianProcessSpec::ou(theta, sigma, x0);
        }
        throw ArgumentError("unknown process");
    }

    nlohmann::ordered_json to_json(const GaussianProcessSpec& s) const {
        nlohmann::ordered_json j;
        j["kind"] = to_string(s.kind);
        if (s.kind == ProcessKind::ou) j["theta"] = s.theta;
        if (s.kind != ProcessKind::brownian) j["sigma"] = s.sigma;
        if (s.kind == ProcessKind::ho_lee) j["g"] = s.drift.name();
        j["x0"] = s.x0;
        return j;
    }
};

// ---------------------------------------------------------------- synth

struct SynthArgs {
    ProcessArgs proc;
    std::size_t n = 0;
    double delta = 0.05;
    double noise = 0.0;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_synth(const SynthArgs& a, unsigned threads, const std::string& prov) {
    const auto spec = a.proc.spec();
    const auto ds = synth_snippets(spec, a.n, a.delta, a.noise, a.seed, {threads});
    {
        auto out = open_out(a.out);
        write_snippets(out, ds, {prov});
    }
    nlohmann::ordered_json meta;
    meta["generator"] = prov;
    meta["process"] = a.proc.to_json(spec);
    meta["n"] = a.n;
    meta["delta"] = a.delta;
    meta["noise"] = a.noise;
    meta["seed"] = a.seed;
    meta["records"] = ds.records().size();
    open_out(a.out + ".meta.json") << meta.dump(2) << '\n';
    std::cout << "wrote " << ds.records().size() << " subjects to " << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string data;
    ColumnSchema schema;
    bool normalize = false;
    std::string method = "ols";
    std::string bandwidth;
    std::string cv_grid;
    std::string mode = "auto";
    std::string out;
};

/// "default" or per-dimension lists separated by ';', e.g. "5,10,20;0.25,0.5".
BandwidthGrid parse_grid(const std::string& text, std::span<const TrainingPair> pairs, const AffineTimeMap& map,
                         std::size_t dim) {
    if (text.empty() || text == "default") return BandwidthGrid::scaled_default(pairs);
    BandwidthGrid grid;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) {
        auto v = parse_list(part, "--cv-grid");
        if (grid.per_dim.size() >= 1)
            for (auto& h : v) h = map.duration_to_normalized(h);
        grid.per_dim.push_back(std::move(v));
    }
    grid.validate(dim);
    return grid;
}

std::string format_bandwidth(const std::vector<double>& h, const AffineTimeMap& map) {
    std::string s;
    for (std::size_t d = 0; d < h.size(); ++d) {
        if (d) s += ',';
        s += detail::format_double(d == 0 ? h[d] : map.duration_to_raw(h[d]));
    }
    return s;
}

int cmd_fit(const FitArgs& a, unsigned threads, const std::string& prov) {
    const auto ds = load_snippets(a.data, a.schema, a.normalize);
    PairMode mode = ds.regular() ? PairMode::regular : PairMode::irregular;
    if (a.mode == "regular") mode = PairMode::regular;
    if (a.mode == "irregular") mode = PairMode::irregular;
    const auto pairs = make_training_pairs(ds, mode);
    const std::size_t dim = pairs.front().z.dim();
    const auto& map = ds.time_map();

    ConditionalModel model = [&] {
        if (a.method == "ols") return fit_ols(pairs);
        LocalLinearOptions opt;
        opt.threads = threads;
        if (!a.bandwidth.empty()) {
            auto h = parse_list(a.bandwidth, "--bandwidth");
            if (h.size() != dim)
                throw ArgumentError("--bandwidth needs " + std::to_string(dim) + " components for this design");
            for (std::size_t d = 1; d < h.size(); ++d) h[d] = map.duration_to_normalized(h[d]);
            return fit_local_linear(pairs, h, opt);
        }
        return fit_local_linear(pairs, parse_grid(a.cv_grid, pairs, map, dim), opt);
    }();
    model.set_time_context(map, ds.spacing());
    save_model(a.out, model, prov);

    std::cout << "n_pairs " << pairs.size() << '\n';
    std::cout << "mode " << (mode == PairMode::regular ? "regular" : "irregular") << '\n';
    if (model.method() == RegressionMethod::local_linear) {
        std::cout << "bandwidth_mean " << format_bandwidth(model.mean_bandwidth(), map) << '\n';
        std::cout << "bandwidth_var " << format_bandwidth(model.var_bandwidth(), map) << '\n';
    }
    if (mode == PairMode::irregular) {
        const auto g = ds.gap_summary();
        std::cout << "gaps min " << detail::format_double(map.duration_to_raw(g.min)) << " median "
                  << detail::format_double(map.duration_to_raw(g.median)) << " max "
                  << detail::format_double(map.duration_to_raw(g.max)) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs {
    std::string model;
    double x0 = 0.0;
    std::optional<double> t0;
    std::optional<double> delta;
    std::size_t steps = 0;
    std::size_t paths = 1000;
    std::string percentiles = "5,50,95";
    std::uint64_t seed = 1;
    std::string out_prefix;
};

int cmd_reconstruct(const ReconstructArgs& a, unsigned threads, const std::string& prov) {
    const auto model = load_model(a.model);
    const auto& map = model.time_map();

    TimeGrid grid;
    grid.t0 = map.to_normalized(a.t0.value_or(map.to_raw(0.0)));
    if (a.delta) {
        grid.delta = map.duration_to_normalized(*a.delta);
    } else if (model.spacing() > 0.0) {
        grid.delta = model.spacing();
    } else {
        throw ArgumentError("--delta is required: the model's training design has no common spacing");
    }
    grid.steps = a.steps;

    std::vector<double> probs;
    for (double p : parse_list(a.percentiles, "--percentiles")) {
        if (!(p > 0.0 && p < 100.0)) throw ArgumentError("--percentiles entries must lie in (0, 100)");
        probs.push_back(p / 100.0);
    }
    if (a.paths < 20) std::cerr << "warning: fewer than 20 paths; tail percentiles are unstable\n";

    const auto ens = simulate_paths(model, grid, a.x0, a.paths, a.seed, {threads});
    const auto curves = percentile_curves(ens, probs);
    {
        auto out = open_out(a.out_prefix + "_paths.csv");
        write_paths_csv(out, ens, map, {prov});
    }
    {
        auto out = open_out(a.out_prefix + "_percentiles.csv");
        write_percentiles_csv(out, curves, map, {prov});
    }
    std::cout << "paths " << ens.size() << " aborted " << ens.aborted.size() << " extrapolated_steps "
              << ens.extrapolated_steps << '\n';
    std::cout << "grid " << detail::format_double(map.to_raw(grid.time(0))) << " .. "
              << detail::format_double(map.to_raw(grid.end())) << '\n';
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    ProcessArgs proc;
    std::string n_list = "100,1000";
    std::string noise_list = "0,0.01,0.1";
    std::size_t reps = 100;
    std::size_t paths = 1000;
    double delta = 0.05;
    std::string method = "ols";
    std::string bandwidth;
    std::uint64_t seed = 1;
    std::string out_prefix;
};

int cmd_evaluate(const EvaluateArgs& a, unsigned threads, const std::string& prov) {
    StudyConfig cfg;
    cfg.spec = a.proc.spec();
    cfg.n_list = parse_counts(a.n_list, "--n-list");
    cfg.noise_list = parse_list(a.noise_list, "--noise-list");
    cfg.repetitions = a.reps;
    cfg.replicates = a.paths;
    cfg.delta = a.delta;
    cfg.method = a.method == "ols" ? RegressionMethod::ols : RegressionMethod::local_linear;
    if (!a.bandwidth.empty()) cfg.bandwidth = parse_list(a.bandwidth, "--bandwidth");
    cfg.seed = a.seed;
    cfg.threads = threads;

    const auto result = run_study(cfg);
    {
        auto out = open_out(a.out_prefix + "_armse.csv");
        write_armse_csv(out, result, {prov});
    }
    {
        auto out = open_out(a.out_prefix + "_rmse.csv");
        write_rmse_long_csv(out, result, {prov});
    }
    write_armse_csv(std::cout, result);
    for (const auto& row : result.cells)
        for (const auto& c : row)
            for (const auto& f : c.failures)
                if (!f.empty()) {
                    std::cerr << "n=" << c.n << " noise=" << c.noise << ": " << f << '\n';
                    break;
                }
    return 0;
}

// ---------------------------------------------------------------- wasserstein

struct WassersteinArgs {
    std::string gaussian;
    std::string a;
    std::string b;
    std::optional<std::size_t> step;
};

std::vector<double> read_ensemble_column(const std::string& path, std::optional<std::size_t> step) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    std::size_t row = 0;
    bool header = false;
    std::vector<std::pair<std::size_t, double>> values;
    std::size_t max_step = 0;
    while (std::getline(in, line)) {
        ++row;
        if (detail::is_comment_or_blank(line)) continue;
        const auto cells = detail::split(line, ',');
        if (!header) {
            if (cells.size() < 4 || cells[1] != "step" || cells[3] != "value")
                throw SchemaError("'" + path + "' is not a replicate,step,time,value ensemble file");
            header = true;
            continue;
        }
        const auto k = detail::parse_double(cells.at(1));
        const auto v = detail::parse_double(cells.at(3));
        if (!k || !v) throw ParseError("row " + std::to_string(row) + ": non-numeric cell", row);
        values.emplace_back(static_cast<std::size_t>(*k), *v);
        max_step = std::max(max_step, static_cast<std::size_t>(*k));
    }
    const std::size_t want = step.value_or(max_step);
    std::vector<double> out;
    for (const auto& [k, v] : values)
        if (k == want) out.push_back(v);
    if (out.empty()) throw ArgumentError("no values at step " + std::to_string(want) + " in '" + path + "'");
    return out;
}

int cmd_wasserstein(const WassersteinArgs& a) {
    if (!a.gaussian.empty()) {
        const auto p = parse_list(a.gaussian, "--gaussian");
        if (p.size() != 4) throw ArgumentError("--gaussian takes m1,s1,m2,s2");
        std::cout << detail::format_double(wasserstein_gaussian(p[0], p[1], p[2], p[3])) << '\n';
        return 0;
    }
    if (a.a.empty() || a.b.empty()) throw ArgumentError("give --gaussian or both --a and --b");
    const auto x = read_ensemble_column(a.a, a.step);
    const auto y = read_ensemble_column(a.b, a.step);
    std::cout << detail::format_double(wasserstein_empirical(x, y)) << '\n';
    return 0;
}

// ---------------------------------------------------------------- flag

struct FlagArgs {
    std::string percentiles;
    double time = 0.0;
    double value = 0.0;
};

int cmd_flag(const FlagArgs& a) {
    std::ifstream in(a.percentiles);
    if (!in) throw Error("cannot open '" + a.percentiles + "'");
    const auto curves = read_percentiles_csv(in);
    std::cout << to_string(flag_observation(curves, a.time, a.value)) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reconstruct latent stochastic dynamics from functional snippets"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI file with per-command sections; flags override it");
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--threads", threads, "Worker cap (results do not depend on it)")->check(CLI::PositiveNumber);
    app.set_version_flag("--version", std::string(snipsde::version));

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic two-point snippets from a reference process");
    synth.proc.add_to(synth_cmd, true);
    synth_cmd->add_option("--n", synth.n, "Number of subjects")->required()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--delta", synth.delta, "Grid spacing; 1/delta must be an integer")->capture_default_str();
    synth_cmd->add_option("--noise", synth.noise, "Measurement noise SD")->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "Output CSV (a .meta.json sidecar is written next to it)")->required();

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit conditional mean and variance regressions");
    fit_cmd->add_option("--data", fit.data, "Snippet CSV")->required();
    fit_cmd->add_option("--col-id", fit.schema.id_column)->capture_default_str();
    fit_cmd->add_option("--col-time", fit.schema.time_column)->capture_default_str();
    fit_cmd->add_option("--col-value", fit.schema.value_column)->capture_default_str();
    fit_cmd->add_flag("--normalize", fit.normalize, "Map observation times affinely onto [0, 1]");
    fit_cmd->add_option("--method", fit.method)->check(CLI::IsMember({"ols", "loclin"}))->capture_default_str();
    auto* bw = fit_cmd->add_option("--bandwidth", fit.bandwidth, "Explicit local linear bandwidth, e.g. 20,0.5");
    fit_cmd->add_option("--cv-grid", fit.cv_grid, "LOOCV grid: 'default' or per-dimension lists, e.g. 5,10;0.25,0.5")
        ->excludes(bw);
    fit_cmd->add_option("--mode", fit.mode)->check(CLI::IsMember({"auto", "regular", "irregular"}))->capture_default_str();
    fit_cmd->add_option("--out", fit.out, "Model file (JSON)")->required();

    ReconstructArgs rec;
    auto* rec_cmd = app.add_subcommand("reconstruct", "Simulate paths from a fitted model and emit percentile bands");
    rec_cmd->add_option("--model", rec.model)->required();
    rec_cmd->add_option("--x0", rec.x0, "Starting value")->required();
    rec_cmd->add_option("--t0", rec.t0, "Starting time (data units)");
    rec_cmd->add_option("--delta", rec.delta, "Step (data units); defaults to the training spacing");
    rec_cmd->add_option("--steps", rec.steps)->required()->check(CLI::PositiveNumber);
    rec_cmd->add_option("--paths", rec.paths)->check(CLI::PositiveNumber)->capture_default_str();
    rec_cmd->add_option("--percentiles", rec.percentiles, "Percent levels")->capture_default_str();
    rec_cmd->add_option("--seed", rec.seed)->capture_default_str();
    rec_cmd->add_option("--out-prefix", rec.out_prefix)->required();

    EvaluateArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "Coupled RMSE/ARMSE simulation study");
    ev.proc.add_to(ev_cmd, true);
    ev_cmd->add_option("--n-list", ev.n_list)->capture_default_str();
    ev_cmd->add_option("--noise-list", ev.noise_list)->capture_default_str();
    ev_cmd->add_option("--reps", ev.reps, "Repetitions Q per cell")->check(CLI::PositiveNumber)->capture_default_str();
    ev_cmd->add_option("--paths", ev.paths, "Replicates M per repetition")->check(CLI::PositiveNumber)->capture_default_str();
    ev_cmd->add_option("--delta", ev.delta)->capture_default_str();
    ev_cmd->add_option("--method", ev.method)->check(CLI::IsMember({"ols", "loclin"}))->capture_default_str();
    ev_cmd->add_option("--bandwidth", ev.bandwidth, "Explicit local linear bandwidth (default: LOOCV)");
    ev_cmd->add_option("--seed", ev.seed)->capture_default_str();
    ev_cmd->add_option("--out-prefix", ev.out_prefix)->required();

    WassersteinArgs ws;
    auto* ws_cmd = app.add_subcommand("wasserstein", "2-Wasserstein distance between Gaussians or ensemble columns");
    auto* g_opt = ws_cmd->add_option("--gaussian", ws.gaussian, "m1,s1,m2,s2");
    ws_cmd->add_option("--a", ws.a, "Ensemble CSV")->excludes(g_opt);
    ws_cmd->add_option("--b", ws.b, "Ensemble CSV")->excludes(g_opt);
    ws_cmd->add_option("--step", ws.step, "Grid step to compare (default: last)");

    FlagArgs fl;
    auto* fl_cmd = app.add_subcommand("flag", "Classify an observation against percentile bands");
    fl_cmd->add_option("--percentiles", fl.percentiles, "Percentile CSV from reconstruct")->required();
    fl_cmd->add_option("--time", fl.time)->required();
    fl_cmd->add_option("--value", fl.value)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }

    const std::string prov = provenance_line(argc, argv);
    try {
        if (*synth_cmd) return cmd_synth(synth, threads, prov);
        if (*fit_cmd) return cmd_fit(fit, threads, prov);
        if (*rec_cmd) return cmd_reconstruct(rec, threads, prov);
        if (*ev_cmd) return cmd_evaluate(ev, threads, prov);
        if (*ws_cmd) return cmd_wasserstein(ws);
        if (*fl_cmd) return cmd_flag(fl);
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
