#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maxplus/decay.hpp"
#include "maxplus/mgf.hpp"
#include "maxplus/model.hpp"
#include "maxplus/models.hpp"
#include "maxplus/recursion.hpp"
#include "maxplus/structure.hpp"
#include "maxplus/tail.hpp"

using namespace maxplus;
using ojson = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// JSON has no infinities; extended reals travel as strings.
ojson jreal(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? ojson("inf") : ojson("-inf");
}

/// Shortest round-trip decimal form, shared by CSV and JSON output.
std::string csv_num(double v) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : "-inf";
    return nlohmann::json(v).dump();
}

double pick(double flag_value, double dflt) { return std::isnan(flag_value) ? dflt : flag_value; }

int default_threads() {
    if (const char* env = std::getenv("MAXPLUS_TAILS_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

struct Opts {
    std::string positional;
    std::string model_path;
    std::string builtin;
    double mu = kNaN, mu1 = kNaN, mu2 = kNaN, mu3 = kNaN, lambda = kNaN, p = kNaN;

    uint64_t seed = 42;
    int threads = default_threads();
    long replicas = 100000;
    long horizon = 0;  // meaning is per subcommand; 0 picks the default
    int points = 32;
    int levels = 16;
    double theta_max = 0.0;
    double margin = 0.0;
    std::string window = "0.95,0.999";
    std::string method = "auto";
    std::string block = "S";
    std::string kind = "dater";
    std::string out;
};

struct ModelSource {
    NetworkModel model;
    ojson descriptor;
};

ModelSource builtin_model(const std::string& name, const Opts& o) {
    ModelSource src;
    ojson d;
    auto rate = [](double v, const char* what) {
        if (!(v > 0)) throw std::invalid_argument(std::string(what) + " must be positive");
        return v;
    };
    if (name == "mm1" || name == "single_server") {
        const double mu = rate(pick(o.mu, 1.0), "--mu");
        const double lam = rate(pick(o.lambda, 0.5), "--lambda");
        src.model = make_single_server(Exponential{mu}, Exponential{lam});
        d = {{"builtin", "single_server"}, {"mu", mu}, {"lambda", lam}};
    } else if (name == "tandem") {
        const double mu1 = rate(pick(o.mu1, 1.0), "--mu1");
        const double mu2 = rate(pick(o.mu2, 1.5), "--mu2");
        const double lam = rate(pick(o.lambda, 0.5), "--lambda");
        src.model = make_tandem(Exponential{mu1}, Exponential{mu2}, Exponential{lam});
        d = {{"builtin", "tandem"}, {"mu1", mu1}, {"mu2", mu2}, {"lambda", lam}};
    } else if (name == "tandem_identical") {
        const double mu = rate(pick(o.mu, 1.0), "--mu");
        const double lam = rate(pick(o.lambda, 0.2), "--lambda");
        src.model = make_tandem_identical(Exponential{mu}, Exponential{lam});
        d = {{"builtin", "tandem_identical"}, {"mu", mu}, {"lambda", lam}};
    } else if (name == "fork_join") {
        const double mu1 = rate(pick(o.mu1, 1.0), "--mu1");
        const double mu2 = rate(pick(o.mu2, 0.8), "--mu2");
        const double mu3 = rate(pick(o.mu3, 1.2), "--mu3");
        const double lam = rate(pick(o.lambda, 0.5), "--lambda");
        src.model = make_fork_join(Exponential{mu1}, Exponential{mu2}, Exponential{mu3},
                                   Exponential{lam});
        d = {{"builtin", "fork_join"}, {"mu1", mu1}, {"mu2", mu2}, {"mu3", mu3}, {"lambda", lam}};
    } else if (name == "resequencing") {
        const double mu2 = rate(pick(o.mu2, 1.2), "--mu2");
        const double mu3 = rate(pick(o.mu3, 0.8), "--mu3");
        const double lam = rate(pick(o.lambda, 1.0), "--lambda");
        const double p = pick(o.p, 0.7);
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("--p must be in [0,1]");
        src.model = make_resequencing(Exponential{mu2}, Exponential{mu3}, p, Exponential{lam});
        d = {{"builtin", "resequencing"}, {"mu2", mu2}, {"mu3", mu3}, {"lambda", lam}, {"p", p}};
    } else {
        throw std::invalid_argument("unknown builtin '" + name + "'");
    }
    src.descriptor = std::move(d);
    src.descriptor["definition"] = model_to_json(src.model);
    return src;
}

ModelSource resolve_model(const Opts& o) {
    const std::string path = !o.positional.empty() ? o.positional : o.model_path;
    if (!path.empty() && !o.builtin.empty())
        throw std::invalid_argument("give either a model file or --builtin, not both");
    if (path.empty() && o.builtin.empty())
        throw std::invalid_argument("a model is required: --model FILE or --builtin NAME");
    if (!path.empty()) {
        std::ifstream f(path);
        if (!f) throw ConfigError({path + ": cannot open"});
        std::stringstream ss;
        ss << f.rdbuf();
        ModelSource src;
        src.model = parse_model(ss.str());
        src.descriptor["source"] = path;
        src.descriptor["definition"] = model_to_json(src.model);
        return src;
    }
    return builtin_model(o.builtin, o);
}

/// Manifest embedded in every JSON output. Wall time deliberately goes to
/// stderr instead: identical manifests must mean byte-identical output.
ojson make_manifest(const std::string& cmd, const ojson& model, uint64_t seed,
                    const ojson& params) {
    ojson man;
    man["tool"] = "maxplus_tails";
    man["version"] = MAXPLUS_TAILS_VERSION;
    man["subcommand"] = cmd;
    man["model"] = model;
    man["seed"] = seed;
    man["params"] = params;
    return man;
}

void emit(const ojson& out) { std::cout << out.dump(2) << "\n"; }

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << header << "\n";
    for (const auto& r : rows) f << r << "\n";
}

ojson assumptions_to_json(const AssumptionReport& a) {
    ojson j;
    j["st"] = {{"ok", a.st_ok}, {"witness", a.st_witness}};
    j["sp"] = {{"ok", a.sp_ok}, {"symbolic", a.sp_symbolic}, {"witness", a.sp_witness}};
    j["lt"] = {{"ok", a.lt_ok}, {"eta", jreal(a.eta)}};
    j["ok"] = a.ok();
    return j;
}

ojson degree_to_json(const DegreeReport& d) {
    return ojson{{"ok", d.ok}, {"violations", d.violations}};
}

ojson decay_to_json(const DecayReport& r) {
    ojson j;
    j["eta"] = jreal(r.eta);
    j["unit_max_degree"] = {{"ok", r.umd_ok}, {"violations", r.umd_violations}};
    j["classes"] = ojson::array();
    for (const auto& c : r.classes) {
        ojson cj;
        cj["class"] = c.cls + 1;
        cj["coords"] = c.coords;
        cj["method"] = c.method;
        cj["theta"] = jreal(c.theta);
        cj["lo"] = jreal(c.lo);
        cj["hi"] = jreal(c.hi);
        cj["capped"] = c.capped;
        j["classes"].push_back(cj);
    }
    j["theta_star"] = jreal(r.theta_star);
    j["theta_lo"] = jreal(r.theta_lo);
    j["theta_hi"] = jreal(r.theta_hi);
    j["binding"] = r.binding;
    j["method"] = r.method;
    return j;
}

ojson fit_to_json(const TailFit& f) {
    ojson j;
    j["replicas"] = f.replicas;
    j["kept"] = f.kept;
    j["censored"] = f.censored;
    j["q_lo"] = f.q_lo;
    j["q_hi"] = f.q_hi;
    j["margin"] = f.margin;
    j["theta_hat"] = jreal(f.theta_hat);
    j["se"] = f.se;
    j["valid"] = f.valid;
    j["warning"] = f.warning;
    j["levels"] = ojson::array();
    for (size_t l = 0; l < f.level_x.size(); ++l)
        j["levels"].push_back(ojson{{"x", jreal(f.level_x[l])}, {"log_p", f.level_logp[l]}});
    return j;
}

std::pair<double, double> parse_window(const std::string& w) {
    double lo = 0.0, hi = 0.0;
    if (std::sscanf(w.c_str(), "%lf,%lf", &lo, &hi) != 2)
        throw std::invalid_argument("--quantile-window expects LO,HI");
    return {lo, hi};
}

// --- subcommands ---------------------------------------------------------------

int run_validate(const Opts& o) {
    ModelSource src;
    try {
        src = resolve_model(o);
    } catch (const ConfigError& e) {
        ojson out;
        const std::string path = !o.positional.empty() ? o.positional : o.model_path;
        out["manifest"] =
            make_manifest("validate", ojson{{"source", path}}, o.seed, ojson::object());
        out["valid"] = false;
        out["diagnostics"] = e.diagnostics;
        emit(out);
        return 1;
    }
    const auto assumptions = check_assumptions(src.model);
    const auto degree = check_unit_max_degree(src.model);
    ojson out;
    out["manifest"] = make_manifest("validate", src.descriptor, o.seed, ojson::object());
    out["valid"] = assumptions.ok();
    out["diagnostics"] = ojson::array();
    if (!assumptions.st_ok) out["diagnostics"].push_back("(ST) " + assumptions.st_witness);
    if (!assumptions.sp_ok) out["diagnostics"].push_back("(SP) " + assumptions.sp_witness);
    if (!assumptions.lt_ok) out["diagnostics"].push_back("(LT) eta is not positive");
    out["assumptions"] = assumptions_to_json(assumptions);
    out["unit_max_degree"] = degree_to_json(degree);
    emit(out);
    return assumptions.ok() ? 0 : 1;
}

int run_analyze(const Opts& o) {
    const ModelSource src = resolve_model(o);
    const auto rep = analyze_structure(src.model);
    const auto assumptions = check_assumptions(src.model);
    const auto degree = check_unit_max_degree(src.model);
    ojson out;
    out["manifest"] = make_manifest("analyze", src.descriptor, o.seed, ojson::object());
    out["s"] = src.model.s;
    out["classes"] = ojson::array();
    for (const auto& cls : rep.classes) {
        ojson c = ojson::array();
        for (int x : cls) c.push_back(x + 1);
        out["classes"].push_back(c);
    }
    out["permutation"] = ojson::array();
    for (int x : rep.permutation) out["permutation"].push_back(x + 1);
    out["order"] = ojson::array();
    for (const auto& row : rep.order) {
        ojson r = ojson::array();
        for (bool b : row) r.push_back(b);
        out["order"].push_back(r);
    }
    out["eta"] = jreal(eta_of(src.model));
    out["unit_max_degree"] = degree_to_json(degree);
    out["assumptions"] = assumptions_to_json(assumptions);
    emit(out);
    return 0;
}

int run_simulate(const Opts& o) {
    const ModelSource src = resolve_model(o);
    if (o.kind == "path") {
        const int n = o.horizon > 0 ? static_cast<int>(o.horizon) : 64;
        Stream rng = Stream::keyed(o.seed, 0, 8);
        const PathSample ps = simulate_S(src.model, n, rng);
        ojson out;
        out["manifest"] = make_manifest("simulate", src.descriptor, o.seed,
                                        ojson{{"kind", "path"}, {"horizon", n}});
        out["kind"] = "path";
        out["horizon"] = ps.horizon;
        out["S_final"] = jreal(ps.S.back());
        emit(out);
        if (!o.out.empty()) {
            std::vector<std::string> rows;
            for (size_t k = 0; k < ps.S.size(); ++k)
                rows.push_back(std::to_string(k) + "," + csv_num(ps.S[k]));
            write_csv(o.out, "n,S", rows);
        }
        return 0;
    }
    if (o.kind != "dater") throw std::invalid_argument("--kind must be dater or path");

    const long max_horizon = o.horizon > 0 ? o.horizon : 1000000;
    double margin = o.margin;
    if (!(margin > 0)) {
        const GammaEstimate g =
            estimate_gamma(src.model, 1024, 64, o.seed ^ 0x67616d6dULL, o.threads);
        margin = default_margin(g);
    }
    std::vector<double> z(o.replicas);
    std::vector<long> hz(o.replicas);
    std::vector<uint8_t> ok(o.replicas);
    parallel_for(o.replicas, o.threads, [&](long r) {
        Stream pair_rng = Stream::keyed(o.seed, static_cast<uint64_t>(r), 0);
        Stream tau_rng = Stream::keyed(o.seed, static_cast<uint64_t>(r), 1);
        CompiledModel cm(src.model);
        const DaterSample d =
            sample_Z(cm, src.model.arrivals, pair_rng, tau_rng, margin, max_horizon);
        z[r] = d.z;
        hz[r] = d.horizon;
        ok[r] = d.converged;
    });
    std::vector<double> kept;
    for (long r = 0; r < o.replicas; ++r)
        if (ok[r]) kept.push_back(z[r]);
    if (kept.empty()) throw EstimationError("all replicas censored; raise --horizon");
    std::sort(kept.begin(), kept.end());
    double mean = 0.0;
    for (double v : kept) mean += v;
    mean /= static_cast<double>(kept.size());

    ojson out;
    out["manifest"] = make_manifest(
        "simulate", src.descriptor, o.seed,
        ojson{{"kind", "dater"}, {"replicas", o.replicas}, {"max_horizon", max_horizon},
              {"margin", margin}});
    out["kind"] = "dater";
    out["replicas"] = o.replicas;
    out["censored"] = o.replicas - static_cast<long>(kept.size());
    out["margin"] = margin;
    out["z"] = ojson{{"mean", mean},
                     {"p50", detail::quantile_sorted(kept, 0.50)},
                     {"p90", detail::quantile_sorted(kept, 0.90)},
                     {"p99", detail::quantile_sorted(kept, 0.99)},
                     {"max", kept.back()}};
    emit(out);
    if (!o.out.empty()) {
        std::vector<std::string> rows;
        for (long r = 0; r < o.replicas; ++r)
            rows.push_back(std::to_string(r) + "," + csv_num(z[r]) + "," + std::to_string(hz[r]) +
                           "," + std::to_string(static_cast<int>(ok[r])));
        write_csv(o.out, "replica,z,horizon,converged", rows);
    }
    return 0;
}

std::vector<double> class_grid(const NetworkModel& m, const std::vector<int>& coords,
                               double user_cap, int points) {
    const double thr = block_mgf_threshold(m, coords);
    double top;
    if (user_cap > 0 && thr < kInf)
        top = std::min(0.95 * thr, user_cap);
    else if (thr < kInf)
        top = 0.95 * thr;
    else if (user_cap > 0)
        top = user_cap;
    else
        top = 8.0;
    std::vector<double> grid(points);
    for (int j = 1; j <= points; ++j) grid[j - 1] = top * j / points;
    return grid;
}

int run_mgf(const Opts& o) {
    const ModelSource src = resolve_model(o);
    const int n = o.horizon > 0 ? static_cast<int>(o.horizon) : 64;
    MGFCurve curve;
    ojson block;
    if (o.block == "S") {
        const auto grid = default_theta_grid(src.model, o.theta_max, o.points);
        curve = lambda_S_empirical(src.model, grid, n, o.replicas, o.seed, o.threads);
        block = "S";
    } else {
        char* end = nullptr;
        const long cls = std::strtol(o.block.c_str(), &end, 10);
        const auto rep = analyze_structure(src.model);
        if (end == o.block.c_str() || *end != '\0' || cls < 1 ||
            cls > static_cast<long>(rep.classes.size()))
            throw std::invalid_argument("--block must be S or a class index in 1.." +
                                        std::to_string(rep.classes.size()));
        const auto grid =
            class_grid(src.model, rep.classes[static_cast<size_t>(cls - 1)], o.theta_max,
                       o.points);
        curve = lambda_block_empirical(src.model, rep, static_cast<int>(cls - 1), grid, n,
                                       o.replicas, o.seed, o.threads);
        block = cls;
    }
    ojson out;
    out["manifest"] = make_manifest(
        "mgf", src.descriptor, o.seed,
        ojson{{"block", block}, {"n", n}, {"replicas", o.replicas}, {"points", o.points},
              {"theta_max", o.theta_max}});
    out["block"] = block;
    out["n"] = curve.n;
    out["replicas"] = curve.replicas;
    out["points"] = ojson::array();
    for (const auto& pt : curve.points)
        out["points"].push_back(ojson{{"theta", pt.theta},
                                      {"value", jreal(pt.value)},
                                      {"ci_half", jreal(pt.ci_half)},
                                      {"infinite", pt.infinite}});
    emit(out);
    if (!o.out.empty()) {
        std::vector<std::string> rows;
        for (const auto& pt : curve.points)
            rows.push_back(csv_num(pt.theta) + "," + csv_num(pt.value) + "," +
                           csv_num(pt.ci_half) + "," + std::to_string(pt.infinite ? 1 : 0));
        write_csv(o.out, "theta,value,ci_half,infinite", rows);
    }
    return 0;
}

SolveParams solve_params(const Opts& o) {
    SolveParams sp;
    sp.method = o.method;
    if (o.horizon > 0) sp.n = static_cast<int>(o.horizon);
    sp.replicas = o.replicas;
    sp.grid_points = o.points;
    sp.theta_cap = o.theta_max;
    sp.seed = o.seed;
    sp.threads = o.threads;
    if (sp.method != "auto" && sp.method != "analytic" && sp.method != "empirical")
        throw std::invalid_argument("--method must be auto, analytic, or empirical");
    return sp;
}

int run_theta(const Opts& o) {
    const ModelSource src = resolve_model(o);
    const SolveParams sp = solve_params(o);
    const DecayReport rep = solve(src.model, sp);
    ojson out;
    out["manifest"] = make_manifest(
        "theta", src.descriptor, o.seed,
        ojson{{"method", sp.method}, {"n", sp.n}, {"replicas", sp.replicas},
              {"points", sp.grid_points}, {"theta_max", sp.theta_cap}});
    out.update(decay_to_json(rep));
    emit(out);
    return 0;
}

TailParams tail_params(const Opts& o) {
    TailParams tp;
    tp.replicas = o.replicas;
    const auto [lo, hi] = parse_window(o.window);
    tp.q_lo = lo;
    tp.q_hi = hi;
    tp.levels = o.levels;
    tp.margin = o.margin;
    if (o.horizon > 0) tp.max_horizon = o.horizon;
    tp.seed = o.seed;
    tp.threads = o.threads;
    return tp;
}

int run_tailfit(const Opts& o) {
    const ModelSource src = resolve_model(o);
    const TailParams tp = tail_params(o);
    const TailFit fit = fit_tail(src.model, tp);
    ojson out;
    out["manifest"] = make_manifest(
        "tailfit", src.descriptor, o.seed,
        ojson{{"replicas", tp.replicas}, {"q_lo", tp.q_lo}, {"q_hi", tp.q_hi},
              {"levels", tp.levels}, {"margin", tp.margin}, {"max_horizon", tp.max_horizon}});
    out.update(fit_to_json(fit));
    emit(out);
    if (!o.out.empty()) {
        std::vector<std::string> rows;
        for (size_t l = 0; l < fit.level_x.size(); ++l) {
            const double q = fit.q_lo + (fit.q_hi - fit.q_lo) * l / (fit.level_x.size() - 1);
            rows.push_back(std::to_string(l) + "," + csv_num(q) + "," + csv_num(fit.level_x[l]) +
                           "," + csv_num(fit.level_logp[l]));
        }
        write_csv(o.out, "level,q,x,log_p", rows);
    }
    return fit.valid ? 0 : 2;
}

int run_crosscheck(const Opts& o) {
    const ModelSource src = resolve_model(o);
    Opts so = o;
    so.horizon = 0;  // --horizon steers the tail sampler; the solver keeps n = 64
    const SolveParams sp = solve_params(so);
    const TailParams tp = tail_params(o);
    const CrossCheck cc = cross_validate(src.model, sp, tp);
    ojson out;
    out["manifest"] = make_manifest(
        "crosscheck", src.descriptor, o.seed,
        ojson{{"method", sp.method}, {"replicas", tp.replicas}, {"q_lo", tp.q_lo},
              {"q_hi", tp.q_hi}, {"levels", tp.levels}, {"margin", tp.margin},
              {"max_horizon", tp.max_horizon}});
    out["solver"] = decay_to_json(cc.solver);
    out["fit"] = fit_to_json(cc.fit);
    out["discrepancy"] = jreal(cc.discrepancy);
    out["tolerance"] = jreal(cc.tolerance);
    out["pass"] = cc.pass;
    out["verdict"] = cc.pass ? "PASS" : "FAIL";
    emit(out);
    return 0;
}

int run_optimize(const Opts& o) {
    if (std::isnan(o.mu2) || std::isnan(o.mu3) || std::isnan(o.lambda))
        throw std::invalid_argument("optimize requires --mu2, --mu3, and --lambda");
    const RoutingOptimum opt = optimize_routing(o.mu2, o.mu3, o.lambda);
    const RoutingOptimum num = optimize_routing_numeric([&](double p) {
        return std::min(o.mu2 - o.lambda * p, o.mu3 - o.lambda * (1.0 - p));
    });
    ojson out;
    out["manifest"] = make_manifest(
        "optimize", nullptr, o.seed,
        ojson{{"mu2", o.mu2}, {"mu3", o.mu3}, {"lambda", o.lambda}});
    out["p_star"] = opt.p_star;
    out["theta_star"] = opt.theta_star;
    out["feasible"] = opt.feasible;
    out["closed_form"] = opt.closed_form;
    out["numeric"] = ojson{{"p_star", num.p_star}, {"theta_star", num.theta_star}};
    emit(out);
    return 0;
}

int run_selftest(const Opts& o) {
    struct Case {
        std::string name;
        NetworkModel model;
        ModelFacts facts;
    };
    const std::vector<Case> cases = {
        {"single_server", make_single_server(Exponential{1.0}, Exponential{0.5}),
         facts_single_server(1.0, 0.5)},
        {"tandem", make_tandem(Exponential{1.0}, Exponential{1.5}, Exponential{0.5}),
         facts_tandem(1.0, 1.5, 0.5)},
        {"tandem_identical", make_tandem_identical(Exponential{1.0}, Exponential{0.2}),
         facts_tandem_identical(1.0, 0.2)},
        {"fork_join",
         make_fork_join(Exponential{1.0}, Exponential{0.8}, Exponential{1.2}, Exponential{0.5}),
         facts_fork_join(1.0, 0.8, 1.2, 0.5)},
        {"resequencing",
         make_resequencing(Exponential{1.2}, Exponential{0.8}, 0.7, Exponential{1.0}),
         facts_resequencing(1.2, 0.8, 1.0, 0.7)},
    };
    const long R = o.replicas;
    const int n = o.horizon > 0 ? static_cast<int>(o.horizon) : 32;

    ojson out;
    out["manifest"] = make_manifest("selftest", nullptr, o.seed,
                                    ojson{{"replicas", R}, {"n", n}});
    out["models"] = ojson::array();
    bool all_ok = true;
    for (const auto& c : cases) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto assumptions = check_assumptions(c.model);

        SolveParams ap;
        ap.seed = o.seed;
        ap.threads = o.threads;
        const DecayReport analytic = solve(c.model, ap);
        const bool ok_analytic =
            std::abs(analytic.theta_star - c.facts.theta_star) <= 1e-9 &&
            (analytic.binding == "eta") == (c.facts.binding == "eta");

        SolveParams ep = ap;
        ep.method = "empirical";
        ep.n = n;
        ep.replicas = R;
        ep.grid_points = 16;
        const DecayReport empirical = solve(c.model, ep);
        const bool ok_empirical =
            std::abs(empirical.theta_star - analytic.theta_star) <=
            0.2 * analytic.theta_star + 0.02;

        TailParams tp;
        tp.replicas = R;
        tp.q_hi = 1.0 - std::max(100.0 / static_cast<double>(R), 0.001);
        tp.seed = o.seed;
        tp.threads = o.threads;
        const TailFit fit = fit_tail(c.model, tp);
        const bool ok_tail =
            fit.valid && std::abs(fit.theta_hat - analytic.theta_star) <=
                             std::max(3.0 * fit.se, 0.2 * analytic.theta_star);

        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::fprintf(stderr, "# selftest %-16s analytic %.6f empirical %.6f tail %.6f (%.1f s)\n",
                     c.name.c_str(), analytic.theta_star, empirical.theta_star, fit.theta_hat,
                     secs);

        ojson mj;
        mj["name"] = c.name;
        mj["facts"] = ojson{{"eta", jreal(c.facts.eta)},
                            {"theta_star", c.facts.theta_star},
                            {"binding", c.facts.binding}};
        mj["assumptions_ok"] = assumptions.ok();
        mj["analytic"] = ojson{{"theta_star", jreal(analytic.theta_star)},
                               {"binding", analytic.binding},
                               {"ok", ok_analytic}};
        mj["empirical"] = ojson{{"theta_star", jreal(empirical.theta_star)},
                                {"lo", jreal(empirical.theta_lo)},
                                {"hi", jreal(empirical.theta_hi)},
                                {"ok", ok_empirical}};
        mj["tail"] = ojson{{"theta_hat", jreal(fit.theta_hat)},
                           {"se", fit.se},
                           {"valid", fit.valid},
                           {"ok", ok_tail}};
        const bool ok = assumptions.ok() && ok_analytic && ok_empirical && ok_tail;
        mj["ok"] = ok;
        all_ok = all_ok && ok;
        out["models"].push_back(mj);
    }
    out["all_ok"] = all_ok;
    emit(out);
    return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic (max,plus)-linear network tail decay toolkit"};
    app.require_subcommand(1);

    Opts o_validate, o_analyze, o_simulate, o_mgf, o_theta, o_tailfit, o_cross, o_opt, o_self;
    o_simulate.replicas = 1000;
    o_self.replicas = 20000;

    auto add_model = [](CLI::App* c, Opts& o) {
        c->add_option("--model", o.model_path, "model description JSON file");
        c->add_option("--builtin", o.builtin,
                      "bundled model: mm1|single_server|tandem|tandem_identical|fork_join|"
                      "resequencing");
        c->add_option("--mu", o.mu, "service rate (single server / identical tandem)");
        c->add_option("--mu1", o.mu1, "first service rate");
        c->add_option("--mu2", o.mu2, "second service rate");
        c->add_option("--mu3", o.mu3, "third service rate");
        c->add_option("--lambda", o.lambda, "arrival rate");
        c->add_option("--p", o.p, "routing probability (resequencing)");
    };
    auto add_seed_threads = [](CLI::App* c, Opts& o) {
        c->add_option("--seed", o.seed, "master seed")->capture_default_str();
        c->add_option("--threads", o.threads,
                      "worker threads (env MAXPLUS_TAILS_THREADS is the fallback)")
            ->capture_default_str();
    };

    auto* c_validate =
        app.add_subcommand("validate", "parse a model and check its standing assumptions");
    c_validate->add_option("path", o_validate.positional, "model description JSON file");
    add_model(c_validate, o_validate);
    add_seed_threads(c_validate, o_validate);

    auto* c_analyze =
        app.add_subcommand("analyze", "communication classes, ordering, eta, degree check");
    add_model(c_analyze, o_analyze);
    add_seed_threads(c_analyze, o_analyze);

    auto* c_simulate = app.add_subcommand("simulate", "sample stationary daters or one path");
    add_model(c_simulate, o_simulate);
    add_seed_threads(c_simulate, o_simulate);
    c_simulate->add_option("--kind", o_simulate.kind, "dater|path")->capture_default_str();
    c_simulate->add_option("--replicas", o_simulate.replicas, "dater replicas")
        ->capture_default_str();
    c_simulate->add_option("--horizon", o_simulate.horizon,
                           "path length, or dater truncation horizon (0 = default)");
    c_simulate->add_option("--margin", o_simulate.margin,
                           "dater stopping margin (0 = derive from gamma)");
    c_simulate->add_option("--out", o_simulate.out, "CSV output path");

    auto* c_mgf = app.add_subcommand("mgf", "empirical normalized log-MGF curve");
    add_model(c_mgf, o_mgf);
    add_seed_threads(c_mgf, o_mgf);
    c_mgf->add_option("--block", o_mgf.block, "S for the network functional, or a class index")
        ->capture_default_str();
    c_mgf->add_option("--horizon", o_mgf.horizon, "product length n (0 = 64)");
    c_mgf->add_option("--replicas", o_mgf.replicas, "sample size")->capture_default_str();
    c_mgf->add_option("--points", o_mgf.points, "grid points")->capture_default_str();
    c_mgf->add_option("--theta-max", o_mgf.theta_max, "grid cap (0 = auto)");
    c_mgf->add_option("--out", o_mgf.out, "CSV output path");

    auto* c_theta = app.add_subcommand("theta", "tail decay rate of the stationary dater");
    add_model(c_theta, o_theta);
    add_seed_threads(c_theta, o_theta);
    c_theta->add_option("--method", o_theta.method, "auto|analytic|empirical")
        ->capture_default_str();
    c_theta->add_option("--horizon", o_theta.horizon, "empirical product length n (0 = 64)");
    c_theta->add_option("--replicas", o_theta.replicas, "empirical sample size")
        ->capture_default_str();
    c_theta->add_option("--points", o_theta.points, "empirical grid points")
        ->capture_default_str();
    c_theta->add_option("--theta-max", o_theta.theta_max, "empirical grid cap (0 = auto)");

    auto* c_tailfit = app.add_subcommand("tailfit", "Monte Carlo tail slope of the dater");
    add_model(c_tailfit, o_tailfit);
    add_seed_threads(c_tailfit, o_tailfit);
    c_tailfit->add_option("--replicas", o_tailfit.replicas, "dater replicas")
        ->capture_default_str();
    c_tailfit->add_option("--quantile-window", o_tailfit.window, "fit window LO,HI")
        ->capture_default_str();
    c_tailfit->add_option("--levels", o_tailfit.levels, "quantile levels")
        ->capture_default_str();
    c_tailfit->add_option("--margin", o_tailfit.margin,
                          "stopping margin (0 = derive from gamma)");
    c_tailfit->add_option("--horizon", o_tailfit.horizon, "truncation horizon (0 = 1e6)");
    c_tailfit->add_option("--out", o_tailfit.out, "levels CSV output path");

    auto* c_cross =
        app.add_subcommand("crosscheck", "solver theta* against the fitted tail slope");
    add_model(c_cross, o_cross);
    add_seed_threads(c_cross, o_cross);
    c_cross->add_option("--method", o_cross.method, "solver method auto|analytic|empirical")
        ->capture_default_str();
    c_cross->add_option("--replicas", o_cross.replicas, "dater and curve replicas")
        ->capture_default_str();
    c_cross->add_option("--quantile-window", o_cross.window, "fit window LO,HI")
        ->capture_default_str();
    c_cross->add_option("--levels", o_cross.levels, "quantile levels")->capture_default_str();
    c_cross->add_option("--margin", o_cross.margin, "stopping margin (0 = derive from gamma)");
    c_cross->add_option("--horizon", o_cross.horizon, "truncation horizon (0 = 1e6)");
    c_cross->add_option("--points", o_cross.points, "solver grid points")
        ->capture_default_str();
    c_cross->add_option("--theta-max", o_cross.theta_max, "solver grid cap (0 = auto)");

    auto* c_opt = app.add_subcommand("optimize", "two-branch routing split maximizing theta*");
    c_opt->add_option("--mu2", o_opt.mu2, "rate of branch 2")->required();
    c_opt->add_option("--mu3", o_opt.mu3, "rate of branch 3")->required();
    c_opt->add_option("--lambda", o_opt.lambda, "arrival rate")->required();
    add_seed_threads(c_opt, o_opt);

    auto* c_self = app.add_subcommand("selftest", "run every bundled model down every path");
    add_seed_threads(c_self, o_self);
    c_self->add_option("--replicas", o_self.replicas, "per-model sample size")
        ->capture_default_str();
    c_self->add_option("--horizon", o_self.horizon, "empirical product length n (0 = 32)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 64;
    }

    const auto t0 = std::chrono::steady_clock::now();
    int rc = 0;
    std::string cmd;
    try {
        if (app.got_subcommand(c_validate)) {
            cmd = "validate";
            rc = run_validate(o_validate);
        } else if (app.got_subcommand(c_analyze)) {
            cmd = "analyze";
            rc = run_analyze(o_analyze);
        } else if (app.got_subcommand(c_simulate)) {
            cmd = "simulate";
            rc = run_simulate(o_simulate);
        } else if (app.got_subcommand(c_mgf)) {
            cmd = "mgf";
            rc = run_mgf(o_mgf);
        } else if (app.got_subcommand(c_theta)) {
            cmd = "theta";
            rc = run_theta(o_theta);
        } else if (app.got_subcommand(c_tailfit)) {
            cmd = "tailfit";
            rc = run_tailfit(o_tailfit);
        } else if (app.got_subcommand(c_cross)) {
            cmd = "crosscheck";
            rc = run_crosscheck(o_cross);
        } else if (app.got_subcommand(c_opt)) {
            cmd = "optimize";
            rc = run_optimize(o_opt);
        } else if (app.got_subcommand(c_self)) {
            cmd = "selftest";
            rc = run_selftest(o_self);
        }
    } catch (const ConfigError& e) {
        for (const auto& d : e.diagnostics) std::fprintf(stderr, "error: %s\n", d.c_str());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 64;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "# %s finished in %.2f s\n", cmd.c_str(), secs);
    return rc;
}
