// Acceptance suite: one [PASS]/[FAIL] line per criterion.
//
// Usage: snipsde_acceptance [--criterion N]...   (default: all)
// Exit status is nonzero if any selected criterion fails.

#include "snipsde/snipsde.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <vector>

using namespace snipsde;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and oracle values.
constexpr double kOuVarAtOne = 0.43233235838169365;   // (1 - exp(-2)) / 2
constexpr double kExpMinus005 = 0.951229424500714;    // exp(-0.05)
constexpr double kSqrt2 = 1.4142135623730951;
constexpr std::uint64_t kSeed = 1;

struct Check {
    bool ok = true;
    std::vector<std::string> lines;

    void expect(bool cond, const std::string& what) {
        ok = ok && cond;
        lines.push_back(std::string(cond ? "ok   " : "MISS ") + what);
    }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string in_range(double v, double lo, double hi) { return fmt("%.4f in [%.2f, %.2f]", v, lo, hi); }

/// OU/OLS study shared by criteria 1, 3 and 4.
const StudyResult& ou_study() {
    static const StudyResult result = [] {
        StudyConfig cfg;
        cfg.spec = GaussianProcessSpec::ou(1.0, 1.0);
        cfg.n_list = {100, 200, 500, 1000, 2000};
        cfg.noise_list = {0.0, 0.01, 0.1};
        cfg.repetitions = 100;
        cfg.replicates = 1000;
        cfg.delta = 0.05;
        cfg.method = RegressionMethod::ols;
        cfg.seed = kSeed;
        cfg.threads = std::max(1u, std::thread::hardware_concurrency());
        return run_study(cfg);
    }();
    return result;
}

Check criterion_1() {
    Check c;
    const auto& r = ou_study();
    const struct {
        std::size_t n;
        double nu, lo, hi;
    } cells[] = {{100, 0.0, 1.05, 1.55}, {1000, 0.0, 0.31, 0.43}, {1000, 0.1, 0.31, 0.46}};
    for (const auto& e : cells) {
        const auto& cell = r.cell(e.n, e.nu);
        c.expect(!cell.invalid && cell.armse >= e.lo && cell.armse <= e.hi,
                 fmt("OU n=%zu nu=%g ARMSE ", e.n, e.nu) + in_range(cell.armse, e.lo, e.hi));
    }
    return c;
}

Check criterion_2() {
    Check c;
    StudyConfig cfg;
    cfg.spec = GaussianProcessSpec::ho_lee(1.0, Drift::named("cos"));
    cfg.n_list = {100, 1000};
    cfg.noise_list = {0.0};
    cfg.repetitions = 100;
    cfg.replicates = 1000;
    cfg.seed = kSeed;
    cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    const auto r = run_study(cfg);
    const double a1000 = r.cell(1000, 0.0).armse;
    const double a100 = r.cell(100, 0.0).armse;
    c.expect(a1000 >= 0.13 && a1000 <= 0.21, "Ho-Lee n=1000 nu=0 ARMSE " + in_range(a1000, 0.13, 0.21));
    c.expect(a100 >= 0.45 && a100 <= 0.70, "Ho-Lee n=100 nu=0 ARMSE " + in_range(a100, 0.45, 0.70));
    return c;
}

Check criterion_3() {
    Check c;
    const auto& r = ou_study();
    for (double nu : r.config.noise_list) {
        const double a = r.cell(100, nu).armse, b = r.cell(500, nu).armse, d = r.cell(2000, nu).armse;
        c.expect(a > b && b > d, fmt("OU nu=%g ARMSE %.4f > %.4f > %.4f (n = 100, 500, 2000)", nu, a, b, d));
    }
    return c;
}

Check criterion_4() {
    Check c;
    const auto& r = ou_study();
    std::vector<double> n, armse;
    for (std::size_t size : r.config.n_list) {
        n.push_back(static_cast<double>(size));
        armse.push_back(r.cell(size, 0.0).armse);
    }
    const double slope = loglog_slope(n, armse);
    c.expect(slope >= -0.65 && slope <= -0.35, "OU nu=0 log-log slope " + in_range(slope, -0.65, -0.35));
    return c;
}

Check criterion_5() {
    Check c;
    const std::size_t M = 50000;
    const ReferenceLaw law{GaussianProcessSpec::ou(1.0, 1.0), 0.05, 2};
    const auto ens = simulate_paths(law, TimeGrid{0.0, 0.05, 20}, 0.0, M, kSeed);
    const Eigen::VectorXd xt = ens.terminal();
    const double mean = xt.mean();
    const double var = (xt.array() - mean).square().sum() / static_cast<double>(M - 1);
    const double se = std::sqrt(var / static_cast<double>(M));
    c.expect(std::abs(mean) <= 3.0 * se, fmt("terminal mean %.5f within 3 SE (%.5f) of 0", mean, 3.0 * se));
    const double rel = std::abs(var - kOuVarAtOne) / kOuVarAtOne;
    c.expect(rel <= 0.02, fmt("terminal variance %.5f vs %.5f, relative error %.4f <= 0.02", var, kOuVarAtOne, rel));
    return c;
}

Check criterion_6() {
    Check c;
    std::mt19937_64 gen(kSeed);
    std::uniform_real_distribution<double> u(0.0, 1.0), ux(-3.0, 3.0);
    const std::vector<GaussianProcessSpec> specs{GaussianProcessSpec::brownian(), GaussianProcessSpec::ho_lee(1.0),
                                                 GaussianProcessSpec::ou(1.0, 1.0)};
    for (const auto& spec : specs) {
        double worst = 0.0;
        int done = 0;
        while (done < 1000) {
            double t = u(gen), s = u(gen);
            if (s < t) std::swap(s, t);
            if (t <= 0.0 || s - t < 1e-6) continue;
            const double x = ux(gen);
            Eigen::Matrix2d cov;
            cov << cov_fn(spec, s, s), cov_fn(spec, s, t), cov_fn(spec, t, s), cov_fn(spec, t, t);
            const Eigen::Matrix2d prec = cov.inverse();
            const double o_mean = mean_fn(spec, s) - prec(0, 1) / prec(0, 0) * (x - mean_fn(spec, t));
            const double o_var = 1.0 / prec(0, 0);
            const auto m = conditional_moments(spec, t, s, x);
            worst = std::max({worst, std::abs(m.mean - o_mean), std::abs(m.var - o_var)});
            ++done;
        }
        c.expect(worst <= 1e-12, fmt("%s: max deviation %.2e <= 1e-12 over 1000 triples", to_string(spec.kind), worst));
    }
    return c;
}

Check criterion_7() {
    Check c;
    const TimeGrid grid{0.0, 0.05, 20};
    const double bm = lipschitz_constant(GaussianProcessSpec::brownian(), grid, 0.05);
    const double hl = lipschitz_constant(GaussianProcessSpec::ho_lee(1.0), grid, 0.05);
    const double ou = lipschitz_constant(GaussianProcessSpec::ou(1.0, 1.0), grid, 0.05);
    c.expect(bm == 1.0, fmt("brownian L = %.17g == 1", bm));
    c.expect(hl == 1.0, fmt("ho_lee L = %.17g == 1", hl));
    c.expect(std::abs(ou - kExpMinus005) <= 1e-12, fmt("ou L = %.15f vs exp(-0.05), |diff| %.1e <= 1e-12", ou, std::abs(ou - kExpMinus005)));
    return c;
}

Check criterion_8() {
    Check c;
    const std::size_t M = 100000;
    std::mt19937_64 gen(kSeed);
    auto sample = [&](double m, double s) {
        std::normal_distribution<double> d(m, s);
        std::vector<double> v(M);
        for (auto& x : v) x = d(gen);
        return v;
    };
    const double pairs[3][4] = {{1, 2, 0, 1}, {0, 1, 0, 1}, {-0.5, 0.5, 2, 3}};
    for (const auto& p : pairs) {
        const double closed = wasserstein_gaussian(p[0], p[1], p[2], p[3]);
        const double emp = wasserstein_empirical(sample(p[0], p[1]), sample(p[2], p[3]));
        c.expect(std::abs(closed - emp) <= 0.03,
                 fmt("N(%g,%g^2) vs N(%g,%g^2): closed %.4f, empirical %.4f, |diff| <= 0.03", p[0], p[1], p[2], p[3], closed, emp));
    }
    c.expect(std::abs(wasserstein_gaussian(1, 2, 0, 1) - kSqrt2) <= 1e-15, "closed form (1,2) vs (0,1) equals sqrt(2)");

    std::uniform_real_distribution<double> um(-5, 5), us(0, 3);
    double worst_slack = std::numeric_limits<double>::infinity();
    bool symmetric = true, nonneg = true;
    for (int i = 0; i < 100; ++i) {
        double m[3], s[3];
        for (int k = 0; k < 3; ++k) {
            m[k] = um(gen);
            s[k] = us(gen);
        }
        const double ab = wasserstein_gaussian(m[0], s[0], m[1], s[1]);
        const double ba = wasserstein_gaussian(m[1], s[1], m[0], s[0]);
        const double bc = wasserstein_gaussian(m[1], s[1], m[2], s[2]);
        const double ac = wasserstein_gaussian(m[0], s[0], m[2], s[2]);
        symmetric = symmetric && ab == ba;
        nonneg = nonneg && ab >= 0.0 && bc >= 0.0 && ac >= 0.0;
        worst_slack = std::min(worst_slack, ab + bc - ac);
    }
    c.expect(symmetric, "symmetry exact on 100 random triples");
    c.expect(nonneg, "non-negativity on 100 random triples");
    c.expect(worst_slack >= -1e-12, fmt("triangle inequality: min slack %.3e >= -1e-12", worst_slack));
    return c;
}

Check criterion_9() {
    Check c;
    std::mt19937_64 gen(kSeed);
    std::uniform_real_distribution<double> ux(-2, 2), ut(0, 0.95);
    auto affine = [](double x, double t) { return 1.0 + 2.0 * x + 3.0 * t; };
    std::vector<TrainingPair> pairs;
    for (int i = 0; i < 300; ++i) {
        const double x = ux(gen), t = ut(gen);
        pairs.push_back({Predictor::regular(x, t), affine(x, t), "S" + std::to_string(i)});
    }
    const auto ols = fit_ols(pairs);
    const Eigen::Vector3d truth(1, 2, 3);
    const double coef_err = (ols.mean_coefficients() - truth).cwiseAbs().maxCoeff();
    c.expect(coef_err <= 1e-10, fmt("OLS noiseless coefficients max error %.2e <= 1e-10", coef_err));

    const auto ll = fit_local_linear(pairs, {0.5, 0.2});
    double ll_err = 0.0;
    std::uniform_real_distribution<double> qx(-1.8, 1.8), qt(0.05, 0.9);
    for (int i = 0; i < 1000; ++i) {
        const double x = qx(gen), t = qt(gen);
        ll_err = std::max(ll_err, std::abs(ll.predict_mean(Predictor::regular(x, t)) - affine(x, t)));
    }
    c.expect(ll_err <= 1e-6, fmt("local linear affine reproduction max error %.2e <= 1e-6", ll_err));

    const auto ou_pairs = make_training_pairs(synth_snippets(GaussianProcessSpec::ou(1.0, 1.0), 1000, 0.05, 0.1, kSeed),
                                              PairMode::regular);
    const auto ou_ols = fit_ols(ou_pairs);
    const auto ou_ll = fit_local_linear(ou_pairs, BandwidthGrid::scaled_default(ou_pairs));
    std::uniform_real_distribution<double> zx(-5, 5), zt(-0.5, 1.5);
    double min_var = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10000; ++i) {
        const auto z = Predictor::regular(zx(gen), zt(gen));
        min_var = std::min({min_var, ou_ols.predict_var(z), ou_ll.predict_var(z)});
    }
    c.expect(min_var >= 0.0, fmt("variance prediction >= 0 on 10^4 random queries (min %.3e)", min_var));
    return c;
}

// ---------------------------------------------------------------- criterion 10

struct Run {
    int code = -1;
    std::string out;
};

Run run_cli(const std::string& args) {
    const std::string cmd = std::string(SNIPSDE_CLI_PATH) + " " + args + " 2>&1";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Check criterion_10() {
    Check c;
    const fs::path dir = fs::temp_directory_path() / "snipsde_acceptance_c10";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto p = [&](const std::string& name) { return "'" + (dir / name).string() + "'"; };

    // Fixed inputs for the downstream commands.
    run_cli("synth --process ou --n 400 --seed 3 --out " + p("base.csv"));
    run_cli("fit --data " + p("base.csv") + " --out " + p("base_model.json"));
    run_cli("reconstruct --model " + p("base_model.json") + " --x0 0 --steps 20 --paths 300 --seed 2 --out-prefix " + p("base"));
    {
        std::ofstream irr(dir / "irregular.csv");
        irr << "subject_id,time,value\n";
        std::mt19937_64 gen(kSeed);
        std::uniform_real_distribution<double> start(0, 40), gap(3, 5);
        std::normal_distribution<double> z(0, 1);
        for (int i = 0; i < 150; ++i) {
            double t = start(gen), v = 60 + 0.5 * t + 3 * z(gen);
            for (int k = 0; k < 3; ++k) {
                irr << "C" << i << ',' << detail::format_double(t) << ',' << detail::format_double(v) << '\n';
                const double g = gap(gen);
                t += g;
                v += 0.5 * g + 0.5 * z(gen);
            }
        }
    }

    struct Cmd {
        std::string name;
        std::string args;
        std::vector<std::string> files;
    };
    const std::vector<Cmd> cmds{
        {"synth", "synth --process ho_lee --n 500 --noise 0.1 --seed 7 --out " + p("s.csv"), {"s.csv", "s.csv.meta.json"}},
        {"fit ols", "fit --data " + p("base.csv") + " --method ols --out " + p("m_ols.json"), {"m_ols.json"}},
        {"fit loclin cv", "fit --data " + p("irregular.csv") + " --method loclin --out " + p("m_ll.json"), {"m_ll.json"}},
        {"reconstruct",
         "reconstruct --model " + p("m_ll.json") + " --x0 65 --t0 12 --delta 4 --steps 8 --paths 300 --seed 5 --out-prefix " + p("r"),
         {"r_paths.csv", "r_percentiles.csv"}},
        {"evaluate",
         "evaluate --process ou --reps 4 --paths 200 --n-list 100,300 --noise-list 0,0.1 --seed 9 --out-prefix " + p("e"),
         {"e_armse.csv", "e_rmse.csv"}},
        {"wasserstein", "wasserstein --a " + p("base_paths.csv") + " --b " + p("r_paths.csv") + " --step 3", {}},
        {"flag", "flag --percentiles " + p("base_percentiles.csv") + " --time 0.5 --value 0.1", {}},
    };

    for (const auto& cmd : cmds) {
        std::vector<std::string> outputs;
        bool all_ok = true;
        for (const char* threads : {"--threads 1", "--threads 1", "--threads 4"}) {
            const auto r = run_cli(std::string(threads) + " " + cmd.args);
            all_ok = all_ok && r.code == 0;
            std::string blob = r.out;
            for (const auto& f : cmd.files) blob += "\n--- " + f + "\n" + slurp(dir / f);
            outputs.push_back(blob);
        }
        const bool same = outputs[0] == outputs[1] && outputs[0] == outputs[2];
        c.expect(all_ok && same, cmd.name + ": " + (all_ok ? "" : "nonzero exit; ") +
                                     (same ? "byte-identical across reruns and --threads 1/4" : "outputs differ"));
    }
    return c;
}

const std::map<int, std::pair<std::string, std::function<Check()>>>& criteria() {
    static const std::map<int, std::pair<std::string, std::function<Check()>>> table{
        {1, {"OU desk-scale ARMSE", criterion_1}},
        {2, {"Ho-Lee desk-scale ARMSE", criterion_2}},
        {3, {"monotone convergence in n", criterion_3}},
        {4, {"log-log rate slope", criterion_4}},
        {5, {"exact recursion from true OU moments", criterion_5}},
        {6, {"conditional moments vs bivariate conditioning", criterion_6}},
        {7, {"Lipschitz constants", criterion_7}},
        {8, {"Wasserstein distances and metric axioms", criterion_8}},
        {9, {"regression correctness", criterion_9}},
        {10, {"CLI determinism", criterion_10}},
    };
    return table;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--criterion" && i + 1 < argc) {
            selected.insert(std::atoi(argv[++i]));
        } else {
            std::cerr << "usage: " << argv[0] << " [--criterion N]...\n";
            return 2;
        }
    }
    if (selected.empty())
        for (const auto& [id, _] : criteria()) selected.insert(id);

    bool all = true;
    for (int id : selected) {
        const auto it = criteria().find(id);
        if (it == criteria().end()) {
            std::cerr << "no criterion " << id << '\n';
            return 2;
        }
        Check c;
        try {
            c = it->second.second();
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        std::cout << (c.ok ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << it->second.first << '\n';
        for (const auto& l : c.lines) std::cout << "       " << l << '\n';
        std::cout.flush();
        all = all && c.ok;
    }
    return all ? 0 : 1;
}
