#include "nlfem/harness.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace nlfem {

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<double> interpolate(const Mesh& mesh, const AnsatzSpace& ansatz, const VectorField& u) {
    std::vector<double> c(ansatz.dof_count, 0.0);
    for (int k = 0; k < mesh.element_count(); ++k) {
        const auto& e = mesh.elements[k];
        for (int a = 0; a < 3; ++a) {
            const auto v = u(mesh.vertices[e.vertices[a]]);
            for (int i = 0; i < ansatz.n; ++i) c[ansatz.dof(k, a, i)] = v[i];
        }
    }
    return c;
}

std::vector<double> conjugate_gradient(const CsrMatrix& A, const std::vector<double>& b, double rtol,
                                       int max_iterations, SolveReport* report) {
    const int n = A.rows;
    std::vector<double> x(n, 0.0), r = b, p = b, q(n);
    const double bnorm = norm2(b);
    SolveReport rep;
    if (bnorm == 0.0) {
        if (report) *report = rep;
        return x;
    }
    double rr = 0.0;
    for (double v : r) rr += v * v;
    int it = 0;
    while (std::sqrt(rr) > rtol * bnorm) {
        if (it == max_iterations)
            throw NumericalError("conjugate gradients did not converge in " + std::to_string(it) +
                                 " iterations, relative residual " + std::to_string(std::sqrt(rr) / bnorm));
        A.multiply(p.data(), q.data());
        double pq = 0.0;
        for (int i = 0; i < n; ++i) pq += p[i] * q[i];
        if (!(pq > 0.0)) throw NumericalError("conjugate gradients broke down: matrix is not positive definite");
        const double alpha = rr / pq;
        double rr_new = 0.0;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            rr_new += r[i] * r[i];
        }
        const double beta = rr_new / rr;
        for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rr = rr_new;
        ++it;
    }
    // Report the true residual, not the recursively updated one.
    A.multiply(x.data(), q.data());
    double res = 0.0;
    for (int i = 0; i < n; ++i) res += (b[i] - q[i]) * (b[i] - q[i]);
    rep.iterations = it;
    rep.residual = std::sqrt(res) / bnorm;
    if (report) *report = rep;
    return x;
}

std::vector<double> dense_solve(const CsrMatrix& A, const std::vector<double>& b) {
    if (A.rows != A.cols) throw ConfigError("dense solve needs a square matrix");
    if (A.rows > kDenseLimit)
        throw ConfigError("dense solve limited to " + std::to_string(kDenseLimit) + " unknowns");
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i)
        for (auto p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) M(i, A.col_idx[p]) = A.values[p];
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) throw NumericalError("dense factorization failed");
    Eigen::VectorXd x = ldlt.solve(rhs);
    if (!x.allFinite()) throw NumericalError("dense solve produced non-finite values");
    return {x.data(), x.data() + x.size()};
}

std::vector<double> solve_dirichlet(const SparseSystem& system, const std::vector<double>& load,
                                    const std::vector<double>& g, const SolveOptions& options,
                                    SolveReport* report) {
    const int J = system.A.rows;
    if (static_cast<int>(load.size()) != J || static_cast<int>(g.size()) != J)
        throw ConfigError("load and Dirichlet data must have one entry per dof");
    const CsrMatrix Aff = system.free_block();
    const CsrMatrix Afc = system.coupling_block();
    if (Aff.asymmetry() > 1e-10 * Aff.max_abs())
        throw ConfigError("the free block is not symmetric; the solver needs a symmetric kernel");

    std::vector<double> gc(system.constrained_dofs.size());
    for (std::size_t i = 0; i < gc.size(); ++i) gc[i] = g[system.constrained_dofs[i]];
    std::vector<double> b(system.free_dofs.size());
    std::vector<double> lift = Afc.multiply(gc);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = load[system.free_dofs[i]] - lift[i];

    SolveReport rep;
    std::vector<double> uf;
    if (options.dense) {
        uf = dense_solve(Aff, b);
        rep.dense = true;
        std::vector<double> r = Aff.multiply(uf);
        double res = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) res += (b[i] - r[i]) * (b[i] - r[i]);
        const double bn = norm2(b);
        rep.residual = bn > 0.0 ? std::sqrt(res) / bn : std::sqrt(res);
    } else {
        const int max_it = options.max_iterations > 0 ? options.max_iterations : 10 * J;
        uf = conjugate_gradient(Aff, b, options.rtol, max_it, &rep);
    }
    if (report) *report = rep;

    std::vector<double> u = g;
    for (std::size_t i = 0; i < uf.size(); ++i) u[system.free_dofs[i]] = uf[i];
    return u;
}

ErrorRegion parse_error_region(const std::string& name) {
    if (name == "full") return ErrorRegion::Full;
    if (name == "domain") return ErrorRegion::Domain;
    throw ConfigError("unknown error region '" + name + "' (expected full or domain)");
}

double l2_error(const Mesh& mesh, const AnsatzSpace& ansatz, const std::vector<double>& coeffs,
                const VectorField& u_exact, ErrorRegion region) {
    const TriangleRule rule = rule_7point();
    double sum = 0.0;
    for (int k = 0; k < mesh.element_count(); ++k) {
        const ElementLabel label = mesh.elements[k].label;
        if (label == ElementLabel::Inactive) continue;
        if (region == ErrorRegion::Domain && label != ElementLabel::Domain) continue;
        const auto t = mesh.corners(k);
        const Vec2 e1 = t[1] - t[0], e2 = t[2] - t[0];
        const double det = std::fabs(cross(e1, e2));
        for (int q = 0; q < rule.size(); ++q) {
            const Vec2& r = rule.points[q];
            const double phi[3] = {1.0 - r.x - r.y, r.x, r.y};
            const auto ue = u_exact(t[0] + r.x * e1 + r.y * e2);
            for (int i = 0; i < ansatz.n; ++i) {
                double uh = 0.0;
                for (int a = 0; a < 3; ++a) uh += phi[a] * coeffs[ansatz.dof(k, a, i)];
                sum += rule.weights[q] * det * (uh - ue[i]) * (uh - ue[i]);
            }
        }
    }
    return std::sqrt(sum);
}

StudyMode parse_study_mode(const std::string& name) {
    if (name == "refine-h") return StudyMode::RefineH;
    if (name == "refine-both") return StudyMode::RefineBoth;
    if (name == "shrink-delta") return StudyMode::ShrinkDelta;
    throw ConfigError("unknown study mode '" + name + "' (expected refine-h, refine-both or shrink-delta)");
}

std::string to_string(StudyMode mode) {
    switch (mode) {
        case StudyMode::RefineH: return "refine-h";
        case StudyMode::RefineBoth: return "refine-both";
        case StudyMode::ShrinkDelta: return "shrink-delta";
    }
    return "?";
}

void validate_study(const StudyConfig& c) {
    if (c.levels.empty()) throw ConfigError("no levels given");
    for (std::size_t i = 0; i < c.levels.size(); ++i) {
        if (c.levels[i] < 2) throw ConfigError("n_div must be at least 2");
        if (i > 0 && c.levels[i] <= c.levels[i - 1]) throw ConfigError("levels must be strictly increasing");
    }
    if (c.mode == StudyMode::ShrinkDelta) {
        if (c.levels.size() != 1) throw ConfigError("shrink-delta mode takes exactly one level");
        if (c.deltas.empty()) throw ConfigError("shrink-delta mode needs a list of deltas");
        for (std::size_t i = 0; i < c.deltas.size(); ++i) {
            if (!(c.deltas[i] > 0.0)) throw ConfigError("deltas must be positive");
            if (i > 0 && !(c.deltas[i] < c.deltas[i - 1])) throw ConfigError("deltas must be strictly decreasing");
        }
    } else if (c.mode == StudyMode::RefineH && !(c.delta > 0.0)) {
        throw ConfigError("delta must be positive");
    }
    if (c.threads < 1) throw ConfigError("thread count must be positive");
    if (!(c.side > 0.0)) throw ConfigError("domain side must be positive");
    // Fails early on bad kernel parameters.
    KernelSpec k = kernel_by_name(c.kernel, c.s, c.mode == StudyMode::ShrinkDelta ? c.deltas[0] : 1.0);
    if (c.ansatz == AnsatzKind::DG && k.s > 0.5) throw ConfigError("discontinuous ansatz requires s <= 0.5");
}

namespace {

template <class E>
[[noreturn]] void rethrow_tagged(const E& e, int n_div, double delta) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "level n_div=%d delta=%g: ", n_div, delta);
    if constexpr (std::is_same_v<E, ParseError>)
        throw ParseError(buf + std::string(e.what()), 0);
    else
        throw E(buf + std::string(e.what()));
}

ConvergenceRow run_level(const StudyConfig& c, const ManufacturedProblem& problem, int n_div, double delta) {
    ConvergenceRow row;
    row.n_div = n_div;
    row.delta = delta;
    KernelSpec kernel = kernel_by_name(c.kernel, c.s, delta);
    if (c.ball) kernel.ball = *c.ball;
    Mesh mesh = generate_structured_mesh(c.side, delta, n_div);
    row.h = mesh.h;
    AdjacencyGraph adj = build_adjacency_graph(mesh);
    AnsatzSpace ansatz = make_ansatz(mesh, c.ansatz, kernel.n);
    row.dof = ansatz.free_count();

    AssemblyOptions opt;
    opt.quad = c.quad;
    opt.n_threads = c.threads;
    AssemblyResult res = bfs_assemble(mesh, adj, kernel, ansatz, opt);
    row.assembly_seconds = res.stats.seconds;
    row.nnz = res.system.A.nnz();
    row.warnings = res.warnings;

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> load = assemble_load(mesh, ansatz, problem.f, c.quad.outer);
    std::vector<double> g = interpolate(mesh, ansatz, problem.g);
    SolveReport rep;
    std::vector<double> u = solve_dirichlet(res.system, load, g, c.solve, &rep);
    row.solve_seconds = seconds_since(t0);
    row.iterations = rep.iterations;
    row.residual = rep.residual;
    row.l2_error = l2_error(mesh, ansatz, u, problem.u_exact, c.region);
    return row;
}

}  // namespace

std::vector<ConvergenceRow> run_study(const StudyConfig& c, const StudyProgress& progress) {
    validate_study(c);
    const ManufacturedProblem problem = problem_for_kernel(c.kernel);
    std::vector<std::pair<int, double>> plan;
    if (c.mode == StudyMode::ShrinkDelta) {
        for (double d : c.deltas) plan.emplace_back(c.levels[0], d);
    } else {
        for (int n : c.levels) plan.emplace_back(n, c.mode == StudyMode::RefineBoth ? 2.0 * c.side / n : c.delta);
    }
    std::vector<ConvergenceRow> rows;
    for (const auto& [n_div, delta] : plan) {
        ConvergenceRow row;
        try {
            row = run_level(c, problem, n_div, delta);
        } catch (const ConfigError& e) {
            rethrow_tagged(e, n_div, delta);
        } catch (const NumericalError& e) {
            rethrow_tagged(e, n_div, delta);
        }
        row.rate = rows.empty() ? 0.0 : std::log2(rows.back().l2_error / row.l2_error);
        rows.push_back(row);
        if (progress) progress(row);
    }
    return rows;
}

std::string format_rows_csv(const std::vector<ConvergenceRow>& rows) {
    std::string out = "h,delta,dof,l2_error,rate\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.2e,%.2e,%d,%.2e,%.2e\n", r.h, r.delta, r.dof, r.l2_error, r.rate);
        out += buf;
    }
    return out;
}

void write_rows_csv(const std::vector<ConvergenceRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << format_rows_csv(rows);
}

ScalingResult run_scaling(const StudyConfig& c, const std::vector<int>& thread_counts, int repeats) {
    if (c.levels.empty()) throw ConfigError("scaling needs a level");
    if (thread_counts.empty()) throw ConfigError("scaling needs thread counts");
    if (repeats < 1) throw ConfigError("repeats must be positive");
    for (int p : thread_counts)
        if (p < 1) throw ConfigError("thread count must be positive");
    const double delta = c.mode == StudyMode::RefineBoth ? 2.0 * c.side / c.levels[0] : c.delta;
    KernelSpec kernel = kernel_by_name(c.kernel, c.s, delta);
    if (c.ball) kernel.ball = *c.ball;
    Mesh mesh = generate_structured_mesh(c.side, delta, c.levels[0]);
    AdjacencyGraph adj = build_adjacency_graph(mesh);
    AnsatzSpace ansatz = make_ansatz(mesh, c.ansatz, kernel.n);

    ScalingResult result;
    result.dof = ansatz.free_count();
    // Untimed warm-up, so that first-touch allocation is not charged to the first count.
    AssemblyOptions warm;
    warm.quad = c.quad;
    warm.n_threads = thread_counts.front();
    const CsrMatrix reference = bfs_assemble(mesh, adj, kernel, ansatz, warm).system.A;
    result.nnz = reference.nnz();
    double base = 0.0;
    for (int p : thread_counts) {
        AssemblyOptions opt;
        opt.quad = c.quad;
        opt.n_threads = p;
        double best = INFINITY;
        for (int r = 0; r < repeats; ++r) {
            AssemblyResult res = bfs_assemble(mesh, adj, kernel, ansatz, opt);
            best = std::min(best, res.stats.seconds);
            if (!(res.system.A == reference)) result.identical = false;
        }
        ScalingRow row;
        row.threads = p;
        row.seconds = best;
        if (result.rows.empty()) base = best * p;
        row.efficiency = base / (p * best);
        result.rows.push_back(row);
    }
    return result;
}

}  // namespace nlfem
