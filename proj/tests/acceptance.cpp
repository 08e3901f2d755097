// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "nlfem/harness.hpp"
#include "support/oracles.hpp"

using namespace nlfem;

namespace {

constexpr double kRateTol = 0.3;
constexpr double kErrorFactor = 2.0;
constexpr double kFractionalCgSeconds = 600.0;
constexpr double kSymmetryTol = 1e-12;
constexpr double kNullSpaceTol = 1e-12;
constexpr double kSingularTol = 1e-5;
constexpr double kGeometrySlope = 1.8;
constexpr double kRule7Tol = 1e-15;
constexpr double kGaussTol = 1e-14;
constexpr double kEfficiency = 0.7;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string list(const std::vector<double>& v, const char* f = "%.2f") {
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(f, v[i]);
    return s + "}";
}

int threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<ConvergenceRow> study(StudyConfig c) {
    c.threads = threads();
    auto rows = run_study(c, [](const ConvergenceRow& r) {
        std::printf("      n_div=%-3d h=%.2e delta=%.2e dof=%-6d err=%.3e rate=%.2f  (%.1fs asm, %d it)\n",
                    r.n_div, r.h, r.delta, r.dof, r.l2_error, r.rate, r.assembly_seconds, r.iterations);
        std::fflush(stdout);
    });
    return rows;
}

std::vector<double> rates(const std::vector<ConvergenceRow>& rows) {
    std::vector<double> r;
    for (std::size_t i = 1; i < rows.size(); ++i) r.push_back(rows[i].rate);
    return r;
}

bool rates_match(const std::vector<double>& got, const std::vector<double>& want) {
    if (got.size() != want.size()) return false;
    for (std::size_t i = 0; i < got.size(); ++i)
        if (!(std::fabs(got[i] - want[i]) <= kRateTol)) return false;
    return true;
}

template <class F>
void guarded(const std::string& name, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        report(false, name, std::string("raised: ") + e.what());
    }
}

StudyConfig refine(const std::string& kernel, double s, double delta, AnsatzKind kind, std::vector<int> levels) {
    StudyConfig c;
    c.kernel = kernel;
    c.s = s;
    c.delta = delta;
    c.ansatz = kind;
    c.levels = std::move(levels);
    return c;
}

void fractional_cg() {
    auto t0 = std::chrono::steady_clock::now();
    auto rows = study(refine("fractional", 0.5, 0.2, AnsatzKind::CG, {5, 10, 20, 40}));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::vector<double> want_rates{2.13, 2.01, 2.01};
    const std::vector<double> want_err{1.65e-04, 4.09e-05, 1.01e-05};
    std::vector<double> err, ratio;
    bool err_ok = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        err.push_back(rows[i].l2_error);
        double q = rows[i].l2_error / want_err[i - 1];
        ratio.push_back(q);
        err_ok &= q <= kErrorFactor && q >= 1.0 / kErrorFactor;
    }
    auto r = rates(rows);
    report(rates_match(r, want_rates) && err_ok && secs < kFractionalCgSeconds, "fractional-cg-convergence",
           "rates " + list(r) + " vs " + list(want_rates) + " +-0.3; errors " + list(err, "%.2e") + " ratio " +
               list(ratio) + " (factor 2); " + fmt("%.0fs", secs) + " (< 600s)");
}

void fractional_dg() {
    auto rows = study(refine("fractional", 0.5, 0.2, AnsatzKind::DG, {5, 10, 20, 40}));
    const std::vector<double> want{2.24, 1.98, 2.01};
    auto r = rates(rows);
    report(rates_match(r, want), "fractional-dg-convergence", "rates " + list(r) + " vs " + list(want) + " +-0.3");
}

void peridynamic() {
    auto cg = study(refine("peridynamic", 0.0, 0.1, AnsatzKind::CG, {5, 10, 20, 40}));
    const std::vector<double> want_cg{2.04, 1.99, 2.04};
    auto rc = rates(cg);
    bool ok_cg = rates_match(rc, want_cg);
    auto dg = study(refine("peridynamic", 0.0, 0.1, AnsatzKind::DG, {5, 10, 20, 40}));
    const std::vector<double> want_dg{1.84, 1.90, 1.99};
    auto rd = rates(dg);
    bool ok_dg = rates_match(rd, want_dg);
    report(ok_cg && ok_dg, "peridynamic-convergence",
           "CG rates " + list(rc) + " vs " + list(want_cg) + "; DG rates " + list(rd) + " vs " + list(want_dg) +
               " +-0.3");
}

void infinity_ball() {
    StudyConfig shrink;
    shrink.kernel = "constant-infinity";
    shrink.mode = StudyMode::ShrinkDelta;
    shrink.levels = {80};
    shrink.deltas = {0.2, 0.1, 0.05, 0.025, 0.0125};
    auto a = rates(study(shrink));
    const std::vector<double> want_a{2.35, 2.18, 2.08, 2.01};
    StudyConfig both;
    both.kernel = "constant-infinity";
    both.mode = StudyMode::RefineBoth;
    both.levels = {5, 10, 20, 40, 80};
    auto b = rates(study(both));
    const std::vector<double> want_b{2.32, 2.18, 2.07, 2.03};
    report(rates_match(a, want_a) && rates_match(b, want_b), "infinity-ball-convergence",
           "fixed h (n_div=80) " + list(a) + " vs " + list(want_a) + "; coupled " + list(b) + " vs " +
               list(want_b) + " +-0.3");
}

void symmetry() {
    double worst = 0.0;
    int cases = 0;
    std::vector<Mesh> meshes{generate_structured_mesh(0.5, 0.1, 5), oracle::perturbed_mesh(0.5, 0.1, 5, 0.3, 17),
                             generate_structured_mesh(0.5, 0.2, 10), oracle::perturbed_mesh(0.5, 0.2, 10, 0.3, 29)};
    for (const auto& m : meshes) {
        auto adj = build_adjacency_graph(m);
        for (const auto& base : {fractional_kernel(0.5, m.delta), peridynamic_kernel(m.delta),
                                 constant_kernel_infinity(m.delta)})
            for (auto ball : {BallType::NoCaps, BallType::ApproxCaps, BallType::Infinity}) {
                KernelSpec k = base;
                k.ball = ball;
                AssemblyOptions o;
                o.rows = RowScope::AllRows;
                o.n_threads = threads();
                CsrMatrix A = bfs_assemble(m, adj, k, make_ansatz(m, AnsatzKind::CG, k.n), o).system.A;
                worst = std::max(worst, A.asymmetry() / A.max_abs());
                ++cases;
            }
    }
    report(worst <= kSymmetryTol, "symmetry",
           fmt("max |A-A^T|/max|A| = %.2e", worst) + " over " + std::to_string(cases) + " kernel/ball/mesh cases (<= 1e-12)");
}

void null_space() {
    double worst = 0.0;
    for (const auto& base : {generate_structured_mesh(0.5, 0.1, 5), oracle::perturbed_mesh(0.5, 0.1, 5, 0.3, 5)}) {
        Mesh m = base;
        for (auto& e : m.elements) e.label = ElementLabel::Domain;
        auto adj = build_adjacency_graph(m);
        for (auto ball : {BallType::NoCaps, BallType::ApproxCaps, BallType::Infinity}) {
            AnsatzSpace an = make_ansatz(m, AnsatzKind::CG, 1);
            CsrMatrix A = bfs_assemble(m, adj, constant_kernel(1.0, 0.1, ball), an).system.A;
            std::vector<double> one(A.cols, 1.0);
            double defect = 0.0;
            for (double v : A.multiply(one)) defect = std::max(defect, std::fabs(v));
            worst = std::max(worst, defect / (A.max_abs() * A.rows));
        }
    }
    report(worst <= kNullSpaceTol, "neumann-null-space", fmt("||A 1||_inf / (max|A| J) = %.2e (<= 1e-12)", worst));
}

void oracle_equivalence() {
    bool bitwise = true;
    int meshes = 0;
    {
        struct Case {
            Mesh mesh;
            KernelSpec kernel;
            AnsatzKind kind;
        };
        std::vector<Case> cases{
            {generate_structured_mesh(0.5, 0.2, 5), fractional_kernel(0.5, 0.2), AnsatzKind::CG},
            {oracle::perturbed_mesh(0.5, 0.1, 5, 0.3, 3), peridynamic_kernel(0.1), AnsatzKind::DG},
            {oracle::perturbed_mesh(0.5, 0.25, 6, 0.3, 8), constant_kernel_infinity(0.25), AnsatzKind::CG}};
        for (auto& c : cases) {
            if (c.mesh.element_count() > 400) continue;
            AnsatzSpace an = make_ansatz(c.mesh, c.kind, c.kernel.n);
            AssemblyOptions o;
            CsrMatrix bfs = bfs_assemble(c.mesh, build_adjacency_graph(c.mesh), c.kernel, an, o).system.A;
            bitwise &= bfs == oracle::brute_force_assemble(c.mesh, c.kernel, an, o);
            ++meshes;
        }
    }
    Mesh m = generate_structured_mesh(0.5, 0.2, 5);
    KernelSpec k = fractional_kernel(0.5, 0.2);
    AnsatzSpace an = make_ansatz(m, AnsatzKind::CG, 1);
    Assembler as(m, k, an);
    auto radial = [c = k.scale](double r) { return c / (r * r * r); };
    auto adj = build_adjacency_graph(m);
    double worst = 0.0;
    int pairs = 0;
    for (int root : {80, 0, 44}) {
        std::vector<int> others{root};
        others.insert(others.end(), adj.begin(root), adj.end(root));
        for (int l : others) {
            auto ref = oracle::touching_pair_entries(m, an, root, l, radial);
            auto got = oracle::assembler_pair_entries(as, root, l);
            double scale = 0.0, err = 0.0;
            if (ref.size() != got.size()) {
                err = INFINITY;
            } else {
                for (std::size_t i = 0; i < ref.size(); ++i) {
                    scale = std::max(scale, std::fabs(ref[i].value));
                    if (ref[i].i != got[i].i || ref[i].j != got[i].j) err = INFINITY;
                    err = std::max(err, std::fabs(ref[i].value - got[i].value));
                }
            }
            if (scale > 0.0) worst = std::max(worst, err / scale);
            ++pairs;
        }
    }
    report(bitwise && worst <= kSingularTol, "oracle-equivalence",
           std::string("bfs == brute force ") + (bitwise ? "bitwise" : "DIFFERS") + " on " + std::to_string(meshes) +
               " meshes; singular blocks max rel err " + fmt("%.2e", worst) + " over " + std::to_string(pairs) +
               " touching pairs (<= 1e-5)");
}

void geometry() {
    const Vec2 x{0.2137, 0.2519};
    const double delta = 0.2;
    std::vector<double> hs, errs;
    bool caps_ok = true;
    int sampled = 0;
    for (int n : {5, 10, 20, 40, 80}) {
        Mesh m = generate_structured_mesh(0.5, delta, n);
        double err = 0.0;
        for (int k = 0; k < m.element_count(); ++k) {
            Triangle t = m.corners(k);
            double exact = oracle::disk_triangle_area(t, x, delta);
            if (exact == 0.0) continue;
            double en = exact - intersect_nocaps(t, x, delta).area();
            double ea = exact - intersect_approxcaps(t, x, delta).area();
            caps_ok &= ea <= en + 1e-15 && ea >= -1e-15;
            ++sampled;
            err += en;
        }
        hs.push_back(m.h);
        errs.push_back(err);
    }
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0), rad(0.05, 1.0);
    for (int i = 0; i < 2000; ++i) {
        Triangle t{{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}}};
        double a2 = signed_area2(t[0], t[1], t[2]);
        if (std::fabs(a2) < 1e-3) continue;
        if (a2 < 0) std::swap(t[1], t[2]);
        Vec2 c{u(rng), u(rng)};
        double d = rad(rng);
        double exact = oracle::disk_triangle_area(t, c, d);
        double en = exact - intersect_nocaps(t, c, d).area();
        double ea = exact - intersect_approxcaps(t, c, d).area();
        caps_ok &= ea <= en + 1e-15 && ea >= -1e-14;
        ++sampled;
    }
    double slope = oracle::loglog_slope(hs, errs);
    report(slope >= kGeometrySlope && caps_ok, "geometry-convergence",
           "nocaps area defect slope " + fmt("%.2f", slope) + " (>= 1.8), errors " + list(errs, "%.2e") +
               "; approxcaps <= nocaps on " + std::to_string(sampled) + " configurations: " + (caps_ok ? "yes" : "NO"));
}

void quadrature() {
    TriangleRule r = rule_7point();
    double worst7 = 0.0;
    auto fact = [](int n) {
        double f = 1.0;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    for (int a = 0; a <= 3; ++a)
        for (int b = 0; a + b <= 3; ++b) {
            double s = 0.0;
            for (int q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.points[q].x, a) * std::pow(r.points[q].y, b);
            worst7 = std::max(worst7, std::fabs(s - fact(a) * fact(b) / fact(a + b + 2)));
        }
    GaussRule g = gauss_legendre(5);
    double t9 = 0.0;
    for (int i = 0; i < 5; ++i) t9 += g.weights[i] * std::pow(g.nodes[i], 9);
    double eg = std::fabs(t9 - 0.1);
    report(worst7 <= kRule7Tol && eg <= kGaussTol, "quadrature-exactness",
           fmt("7-point max error on degree <= 3 monomials %.1e (<= 1e-15)", worst7) +
               fmt("; 5-point Gauss t^9 error %.1e (<= 1e-14)", eg));
}

void scaling() {
    StudyConfig c;
    c.kernel = "fractional";
    c.s = 0.5;
    c.delta = 0.05;
    c.levels = {80};
    auto res = run_scaling(c, {1, 2, 4});
    std::string detail = std::to_string(res.dof) + " dofs, nnz " + std::to_string(res.nnz) + "; ";
    for (const auto& row : res.rows)
        detail += std::to_string(row.threads) + " threads " + fmt("%.1fs", row.seconds) + fmt(" eff %.2f; ", row.efficiency);
    detail += std::string("matrices ") + (res.identical ? "bitwise identical" : "DIFFER");
    detail += "; hardware threads " + std::to_string(threads());
    report(res.identical && res.dof >= 6000 && res.rows.back().efficiency >= kEfficiency, "determinism-scaling",
           detail + " (efficiency at 4 threads >= 0.7)");
}

}  // namespace

int main() {
    std::printf("acceptance run, %d hardware threads\n", threads());
    guarded("quadrature-exactness", quadrature);
    guarded("geometry-convergence", geometry);
    guarded("symmetry", symmetry);
    guarded("neumann-null-space", null_space);
    guarded("oracle-equivalence", oracle_equivalence);
    guarded("fractional-cg-convergence", fractional_cg);
    guarded("fractional-dg-convergence", fractional_dg);
    guarded("peridynamic-convergence", peridynamic);
    guarded("infinity-ball-convergence", infinity_ball);
    guarded("determinism-scaling", scaling);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
