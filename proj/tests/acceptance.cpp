// Acceptance gate: drives the command line tool and the library through the
// documented scenarios, printing one verdict line per criterion. Exits 0 only
// if every criterion holds.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxplus/decay.hpp"
#include "maxplus/mgf.hpp"
#include "maxplus/model.hpp"
#include "maxplus/models.hpp"
#include "maxplus/moments.hpp"
#include "maxplus/recursion.hpp"
#include "maxplus/structure.hpp"
#include "maxplus/tail.hpp"

using nlohmann::json;
using namespace maxplus;

namespace {

std::string g_cli;
int g_fail = 0;

struct CliRun {
    int rc = -1;
    std::string out;
    double secs = 0.0;
};

CliRun run_cli(const std::string& args) {
    CliRun r;
    const auto t0 = std::chrono::steady_clock::now();
    const std::string cmd = "'" + g_cli + "' " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    size_t k = 0;
    while ((k = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, k);
    const int st = pclose(p);
    if (WIFEXITED(st)) r.rc = WEXITSTATUS(st);
    r.secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

void verdict(int idx, bool ok, const std::string& what, double secs) {
    std::printf("[%s] %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", idx, what.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++g_fail;
}

constexpr double kNaNv = std::numeric_limits<double>::quiet_NaN();

json jparse(const std::string& s) {
    json j = json::parse(s, nullptr, false);
    return j.is_discarded() ? json::object() : j;
}

double jget(const json& j, const char* key) {
    const auto it = j.find(key);
    return it != j.end() && it->is_number() ? it->get<double>() : kNaNv;
}

// ---- 1: identical tandem phase transition over the analytic path -------------

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    char note[128] = "";
    const std::vector<std::pair<double, double>> table = {
        {0.2, 0.5}, {0.4, 0.5}, {0.5, 0.5}, {0.6, 0.4}, {0.8, 0.2}};
    for (const auto& [lam, want] : table) {
        char args[160];
        std::snprintf(args, sizeof args, "theta --builtin tandem_identical --mu 1 --lambda %.1f",
                      lam);
        const CliRun r = run_cli(args);
        double got = kNaNv;
        if (r.rc == 0) got = jget(jparse(r.out), "theta_star");
        if (!(std::abs(got - want) <= 1e-9)) {
            ok = false;
            std::snprintf(note, sizeof note, " [lambda %.1f gave %.12f, want %.1f]", lam, got,
                          want);
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && secs < 1.0;
    verdict(1, ok, std::string("identical tandem phase transition to 1e-9") + note, secs);
}

// ---- 2 and 4: Monte Carlo tail slope against the solver -----------------------

double crosscheck_slope(const std::string& args, int* rc) {
    const CliRun r = run_cli("crosscheck " + args + " --replicas 100000");
    if (rc) *rc = r.rc;
    if (r.rc != 0) return kNaNv;
    const json j = jparse(r.out);
    const auto fit = j.find("fit");
    return fit != j.end() ? jget(*fit, "theta_hat") : kNaNv;
}

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    char note[160] = "";
    const std::vector<std::pair<double, double>> table = {{0.3, 0.5}, {0.7, 0.3}};
    for (const auto& [lam, want] : table) {
        const auto c0 = std::chrono::steady_clock::now();
        char args[160];
        std::snprintf(args, sizeof args, "--builtin tandem_identical --mu 1 --lambda %.1f", lam);
        int rc = -1;
        const double slope = crosscheck_slope(args, &rc);
        const double one =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
        const double rel = std::abs(slope - want) / want;
        if (!(rc == 0 && rel <= 0.10 && one < 120.0)) {
            ok = false;
            std::snprintf(note, sizeof note, " [lambda %.1f: slope %.4f vs %.1f, off %.1f%%]",
                          lam, slope, want, 100.0 * rel);
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    verdict(2, ok, std::string("identical tandem tail slope within 10% at 1e5 replicas") + note,
            secs);
}

void criterion_4() {
    const auto t0 = std::chrono::steady_clock::now();
    int rc = -1;
    const double slope =
        crosscheck_slope("--builtin resequencing --mu2 1.2 --mu3 0.8 --lambda 1.0 --p 0.7", &rc);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double rel = std::abs(slope - 0.5) / 0.5;
    char note[96];
    std::snprintf(note, sizeof note, " [slope %.4f, off %.1f%%]", slope, 100.0 * rel);
    verdict(4, rc == 0 && rel <= 0.10 && secs < 180.0,
            std::string("resequencing tail slope within 10% of 0.5") + note, secs);
}

// ---- 3: routing optimum --------------------------------------------------------

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    const CliRun a = run_cli("optimize --mu2 1.2 --mu3 0.8 --lambda 1.0");
    const CliRun b = run_cli("optimize --mu2 1.0 --mu3 1.0 --lambda 0.6");
    bool ok = a.rc == 0 && b.rc == 0;
    if (ok) {
        const json ja = jparse(a.out);
        const json jb = jparse(b.out);
        ok = std::abs(jget(ja, "p_star") - 0.7) <= 1e-9 &&
             std::abs(jget(ja, "theta_star") - 0.5) <= 1e-9 &&
             std::abs(jget(jb, "p_star") - 0.5) <= 1e-9;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    verdict(3, ok && secs < 1.0, "routing optimum (0.7, 0.5) and symmetric 0.5 to 1e-9", secs);
}

// ---- 5: singleton exponential block fidelity ----------------------------------

void criterion_5() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = make_single_server(Exponential{1.0}, Exponential{0.5});
    const auto rep = analyze_structure(m);
    std::vector<double> grid;
    for (int k = 1; k <= 7; ++k) grid.push_back(0.1 * k);
    const auto curve = lambda_block_empirical(m, rep, 0, grid, 64, 100000, 42, 1);
    bool cover = true, tight = true;
    char note[160] = "";
    for (size_t j = 0; j < grid.size(); ++j) {
        const double truth = std::log(1.0 / (1.0 - grid[j]));
        const auto& pt = curve.points[j];
        if (pt.infinite || std::abs(pt.value - truth) > pt.ci_half) {
            cover = false;
            std::snprintf(note, sizeof note, " [theta %.1f: %.4f +/- %.4f vs %.4f]", grid[j],
                          pt.value, pt.ci_half, truth);
        }
        if (j == 4 && !(pt.ci_half < 0.02)) tight = false;  // theta = 0.5
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    verdict(5, cover && tight,
            std::string("singleton block curve covers log(1/(1-theta)) at 95%, tight at 0.5") +
                note,
            secs);
}

// ---- 6: network curve equals the sup over block curves -------------------------

void criterion_6() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto m =
        make_fork_join(Exponential{1.0}, Exponential{0.8}, Exponential{1.2}, Exponential{0.5});
    const auto rep = analyze_structure(m);
    const auto grid = default_theta_grid(m);
    const auto s_curve = lambda_S_empirical(m, grid, 64, 100000, 42, 1);
    std::vector<MGFCurve> blocks;
    for (int cls = 0; cls < static_cast<int>(rep.classes.size()); ++cls)
        blocks.push_back(lambda_block_empirical(m, rep, cls, grid, 64, 100000, 42, 1));
    bool ok = true;
    char note[160] = "";
    for (size_t j = 0; j < grid.size(); ++j) {
        if (s_curve.points[j].infinite) continue;
        double best = -kInf, best_ci = 0.0;
        bool any = false;
        for (const auto& b : blocks) {
            if (b.points[j].infinite) continue;
            any = true;
            if (b.points[j].value > best) {
                best = b.points[j].value;
                best_ci = b.points[j].ci_half;
            }
        }
        if (!any) continue;
        const double gap = std::abs(s_curve.points[j].value - best);
        const double joint = s_curve.points[j].ci_half + best_ci;
        if (gap > joint) {
            ok = false;
            std::snprintf(note, sizeof note, " [theta %.3f: gap %.4f vs joint CI %.4f]", grid[j],
                          gap, joint);
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    verdict(6, ok, std::string("fork-join network curve matches sup of block curves") + note,
            secs);
}

// ---- 7: property suites ---------------------------------------------------------

int semiring_axiom_violations() {
    Stream rng(777);
    auto draw = [&]() {
        const double u = rng.next_unit();
        if (u < 0.15) return MaxPlusValue::bottom();
        return MaxPlusValue::of(std::floor(200.0 * rng.next_unit()) - 100.0);
    };
    int bad = 0;
    for (int it = 0; it < 10000; ++it) {
        const MaxPlusValue a = draw(), b = draw(), c = draw();
        if (oplus(oplus(a, b), c) != oplus(a, oplus(b, c))) ++bad;
        if (otimes(otimes(a, b), c) != otimes(a, otimes(b, c))) ++bad;
        if (oplus(a, b) != oplus(b, a)) ++bad;
        if (otimes(a, b) != otimes(b, a)) ++bad;
        if (oplus(a, a) != a) ++bad;
        if (otimes(a, oplus(b, c)) != oplus(otimes(a, b), otimes(a, c))) ++bad;
        if (oplus(a, MaxPlusValue::bottom()) != a) ++bad;
        if (otimes(a, MaxPlusValue::one()) != a) ++bad;
        if (otimes(a, MaxPlusValue::bottom()) != MaxPlusValue::bottom()) ++bad;
    }
    return bad;
}

int path_violations() {
    const std::vector<NetworkModel> models = {
        make_tandem_identical(Exponential{1.0}, Exponential{0.2}),
        make_fork_join(Exponential{1.0}, Exponential{0.8}, Exponential{1.2}, Exponential{0.5}),
    };
    const int horizon = 64;
    int violations = 0;
    for (size_t which = 0; which < models.size(); ++which) {
        const auto& m = models[which];
        const int paths = which == 0 ? 800 : 200;
        for (int p = 0; p < paths; ++p) {
            Stream rng = Stream::keyed(31337, static_cast<uint64_t>(p), which);
            const auto path = simulate_S(m, horizon, rng, true);
            for (int k = 1; k <= horizon; ++k)
                if (path.S[k] < path.S[k - 1] - 1e-12) ++violations;
            for (int k = 0; k < horizon; ++k) {
                MaxPlusMatrix v = path.steps[static_cast<size_t>(k) + 1].B;
                for (int j = k + 2; j <= horizon; ++j)
                    v = oplus(otimes(path.steps[static_cast<size_t>(j)].A, v),
                              path.steps[static_cast<size_t>(j)].B);
                double top = -1e300;
                for (int i = 0; i < m.s; ++i)
                    if (v.at(i, 0).is_finite()) top = std::max(top, v.at(i, 0).value());
                if (path.S[horizon] > path.S[k] + top + 1e-9) ++violations;
            }
        }
    }
    return violations;
}

double entry_mgf_sum(const NetworkModel& m, const EntryExpression& e, double theta) {
    if (e.kind == EntryKind::neg_inf) return 0.0;
    if (e.kind == EntryKind::zero) return 1.0;
    double s = 0.0;
    for (const auto& t : e.terms) s += std::exp(term_log_mgf(m, t, theta));
    return s;
}

int envelope_violations() {
    const int n = 32;
    const std::vector<double> grid = {0.2, 0.4, 0.6};
    int bad = 0;
    const auto check_one = [&](const NetworkModel& m, uint64_t seed) {
        const auto rep = analyze_structure(m);
        const auto s_curve = lambda_S_empirical(m, grid, n, 4000, seed, 1);
        for (size_t j = 0; j < grid.size(); ++j) {
            double sa = 0.0, sb = 0.0;
            for (const auto& row : m.A)
                for (const auto& e : row) sa += entry_mgf_sum(m, e, grid[j]);
            for (const auto& e : m.B) sb += entry_mgf_sum(m, e, grid[j]);
            const double bound = std::log(sa) + (std::log(n + 1.0) + std::log(sb)) / n;
            if (s_curve.points[j].value > bound + 3.0 * s_curve.points[j].ci_half + 0.01) ++bad;
        }
        for (int cls = 0; cls < static_cast<int>(rep.classes.size()); ++cls) {
            const auto c = lambda_block_empirical(m, rep, cls, grid, n, 4000, seed, 1);
            for (size_t j = 0; j < grid.size(); ++j) {
                const double slack =
                    3.0 * (s_curve.points[j].ci_half + c.points[j].ci_half) + 0.005;
                if (s_curve.points[j].value < c.points[j].value - slack) ++bad;
            }
        }
    };
    check_one(make_tandem(Exponential{1.0}, Exponential{1.5}, Exponential{0.5}), 21);
    check_one(make_resequencing(Exponential{1.2}, Exponential{0.8}, 0.7, Exponential{1.0}), 22);
    return bad;
}

NetworkModel random_structure(Stream& rng, int s, double density) {
    NetworkModel m;
    m.s = s;
    m.components = {{Exponential{1.0}, std::nullopt}};
    m.arrivals = Exponential{0.5};
    m.A.assign(s, std::vector<EntryExpression>(s, EntryExpression::bottom()));
    m.B.assign(s, EntryExpression::poly({{0}}));
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
            if (i == j || rng.next_unit() < density) m.A[i][j] = EntryExpression::poly({{0}});
    return m;
}

int scc_violations() {
    Stream rng(20260814);
    int bad = 0;
    for (int it = 0; it < 200; ++it) {
        const int s = 2 + static_cast<int>(rng.next_u64() % 6);
        const double density = 0.15 + 0.5 * rng.next_unit();
        const auto m = random_structure(rng, s, density);
        const auto rep = analyze_structure(m);

        std::vector<std::vector<bool>> reach = rep.graph.edge;
        for (int i = 0; i < s; ++i) reach[i][i] = true;
        for (int k = 0; k < s; ++k)
            for (int i = 0; i < s; ++i)
                if (reach[i][k])
                    for (int j = 0; j < s; ++j)
                        if (reach[k][j]) reach[i][j] = true;
        std::set<std::set<int>> expect;
        for (int i = 0; i < s; ++i) {
            std::set<int> cls;
            for (int j = 0; j < s; ++j)
                if (reach[i][j] && reach[j][i]) cls.insert(j);
            expect.insert(cls);
        }
        std::set<std::set<int>> got;
        for (const auto& cls : rep.classes) got.insert(std::set<int>(cls.begin(), cls.end()));
        if (got != expect) ++bad;
    }
    return bad;
}

int convexity_violations() {
    const std::vector<NetworkModel> models = {
        make_single_server(Exponential{1.0}, Exponential{0.5}),
        make_tandem(Exponential{1.0}, Exponential{1.5}, Exponential{0.5}),
        make_tandem_identical(Exponential{1.0}, Exponential{0.2}),
        make_fork_join(Exponential{1.0}, Exponential{0.8}, Exponential{1.2}, Exponential{0.5}),
        make_resequencing(Exponential{1.2}, Exponential{0.8}, 0.7, Exponential{1.0}),
    };
    int bad = 0;
    const auto check_curve = [&](const MGFCurve& c) {
        // equally spaced grid: the midpoint value may not exceed the chord
        for (size_t j = 1; j + 1 < c.points.size(); ++j) {
            const auto& a = c.points[j - 1];
            const auto& b = c.points[j];
            const auto& d = c.points[j + 1];
            if (a.infinite || b.infinite || d.infinite) break;
            if (b.value > 0.5 * (a.value + d.value) + 1e-9) ++bad;
        }
    };
    uint64_t seed = 50;
    for (const auto& m : models) {
        const auto grid = default_theta_grid(m, 0.0, 8);
        check_curve(lambda_S_empirical(m, grid, 16, 10000, seed++, 1));
        const auto rep = analyze_structure(m);
        for (int cls = 0; cls < static_cast<int>(rep.classes.size()); ++cls) {
            std::vector<double> g;
            const double thr = block_mgf_threshold(m, rep.classes[static_cast<size_t>(cls)]);
            const double top = thr < kInf ? 0.95 * thr : 8.0;
            for (int k = 1; k <= 8; ++k) g.push_back(top * k / 8);
            check_curve(lambda_block_empirical(m, rep, cls, g, 16, 10000, seed++, 1));
        }
    }
    return bad;
}

int determinism_violations() {
    int bad = 0;
    const std::vector<std::string> cmds = {
        "mgf --builtin fork_join --replicas 4000 --horizon 16 --points 8 --seed 9",
        "theta --builtin tandem --method empirical --replicas 3000 --horizon 16 --points 8",
        "tailfit --builtin mm1 --replicas 3000 --quantile-window 0.9,0.97 --seed 5",
    };
    for (const auto& c : cmds) {
        const CliRun one = run_cli(c + " --threads 1");
        const CliRun four = run_cli(c + " --threads 4");
        const CliRun again = run_cli(c + " --threads 4");
        if (one.rc != 0 || one.out != four.out || four.out != again.out) ++bad;
    }
    return bad;
}

void criterion_7() {
    const auto t0 = std::chrono::steady_clock::now();
    const int ax = semiring_axiom_violations();
    const int pv = path_violations();
    const int ev = envelope_violations();
    const int sv = scc_violations();
    const int cv = convexity_violations();
    const int dv = determinism_violations();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char note[160];
    std::snprintf(note, sizeof note,
                  " [axioms %d, paths %d, envelope %d, scc %d, convexity %d, determinism %d]",
                  ax, pv, ev, sv, cv, dv);
    verdict(7, ax + pv + ev + sv + cv + dv == 0,
            std::string("property suites with zero violations") + note, secs);
}

// ---- 8: Legendre duality --------------------------------------------------------

void criterion_8() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    char note[128] = "";

    const auto mm1 = make_single_server(Exponential{1.0}, Exponential{0.5});
    const double th1 = solve(mm1).theta_star;
    const auto lam1 = [](double th) { return th < 1.0 ? std::log(1.0 / (1.0 - th)) : kInf; };
    const auto r1 = legendre_cross_check(lam1, Exponential{0.5}, th1);
    if (!(r1.applicable && r1.agrees && std::abs(r1.inf_ratio - th1) <= 1e-3)) {
        ok = false;
        std::snprintf(note, sizeof note, " [mm1: inf ratio %.6f vs %.6f]", r1.inf_ratio, th1);
    }

    const auto td = make_tandem(Exponential{1.0}, Exponential{1.5}, Exponential{0.5});
    const double th2 = solve(td).theta_star;
    const auto lam2 = [](double th) {
        if (th >= 1.0) return kInf;
        return std::max(std::log(1.0 / (1.0 - th)), std::log(1.5 / (1.5 - th)));
    };
    const auto r2 = legendre_cross_check(lam2, Exponential{0.5}, th2);
    if (!(r2.applicable && r2.agrees && std::abs(r2.inf_ratio - th2) <= 1e-3)) {
        ok = false;
        std::snprintf(note, sizeof note, " [tandem: inf ratio %.6f vs %.6f]", r2.inf_ratio, th2);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    verdict(8, ok, std::string("Legendre dual rate matches bisection to 1e-3") + note, secs);
}

// ---- 9: self test ----------------------------------------------------------------

void criterion_9() {
    const CliRun r = run_cli("selftest");
    bool all_ok = false;
    if (r.rc == 0) all_ok = jparse(r.out).value("all_ok", false);
    verdict(9, r.rc == 0 && all_ok && r.secs < 900.0, "selftest covers the full model matrix",
            r.secs);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <maxplus_tails binary>\n");
        return 64;
    }
    g_cli = argv[1];

    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();

    std::printf("%d/9 criteria passed\n", 9 - g_fail);
    return g_fail == 0 ? 0 : 1;
}
