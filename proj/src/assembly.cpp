#include "nlfem/assembly.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace nlfem {

namespace {

std::array<double, 3> ref_basis(const Vec2& p) { return {1.0 - p.x - p.y, p.x, p.y}; }

bool active(ElementLabel l) { return l != ElementLabel::Inactive; }

}  // namespace

AnsatzKind parse_ansatz(const std::string& name) {
    if (name == "cg" || name == "CG") return AnsatzKind::CG;
    if (name == "dg" || name == "DG") return AnsatzKind::DG;
    throw ConfigError("unknown ansatz '" + name + "' (expected cg or dg)");
}

std::string to_string(AnsatzKind kind) { return kind == AnsatzKind::CG ? "cg" : "dg"; }

int AnsatzSpace::free_count() const {
    return static_cast<int>(std::count(free_mask.begin(), free_mask.end(), 1));
}

AnsatzSpace make_ansatz(const Mesh& mesh, AnsatzKind kind, int n) {
    if (n != 1 && n != 2) throw ConfigError("output dimension must be 1 or 2");
    AnsatzSpace s;
    s.kind = kind;
    s.n = n;
    const int ne = mesh.element_count();
    s.nodes.resize(3 * static_cast<std::size_t>(ne));
    if (kind == AnsatzKind::CG) {
        s.dof_count = n * mesh.vertex_count();
        std::vector<char> touches_domain(mesh.vertex_count(), 0), touches_dirichlet(mesh.vertex_count(), 0);
        for (int k = 0; k < ne; ++k) {
            const auto& e = mesh.elements[k];
            for (int a = 0; a < 3; ++a) {
                s.nodes[3 * k + a] = e.vertices[a];
                if (e.label == ElementLabel::Domain) touches_domain[e.vertices[a]] = 1;
                if (e.label == ElementLabel::Dirichlet) touches_dirichlet[e.vertices[a]] = 1;
            }
        }
        s.free_mask.assign(s.dof_count, 0);
        for (int v = 0; v < mesh.vertex_count(); ++v)
            if (touches_domain[v] && !touches_dirichlet[v])
                for (int c = 0; c < n; ++c) s.free_mask[n * v + c] = 1;
    } else {
        s.dof_count = 3 * n * ne;
        s.free_mask.assign(s.dof_count, 0);
        for (int k = 0; k < ne; ++k)
            for (int a = 0; a < 3; ++a) {
                s.nodes[3 * k + a] = 3 * k + a;
                if (mesh.elements[k].label == ElementLabel::Domain)
                    for (int c = 0; c < n; ++c) s.free_mask[n * (3 * k + a) + c] = 1;
            }
    }
    return s;
}

void check_assembly_inputs(const KernelSpec& kernel, const AnsatzSpace& ansatz) {
    if (!kernel.value) throw ConfigError("kernel has no value function");
    if (!(kernel.delta > 0.0)) throw ConfigError("kernel horizon must be positive");
    if (!(kernel.s < 1.0)) throw ConfigError("singularity exponent s must be below 1");
    if (kernel.n != 1 && kernel.n != 2) throw ConfigError("kernel output dimension must be 1 or 2");
    if (kernel.n != ansatz.n) throw ConfigError("kernel and ansatz output dimensions differ");
    if (ansatz.kind == AnsatzKind::DG && kernel.s > 0.5)
        throw ConfigError("discontinuous ansatz requires s <= 0.5");
}

Assembler::Assembler(const Mesh& mesh, const KernelSpec& kernel, const AnsatzSpace& ansatz,
                     const AssemblyOptions& options)
    : mesh_(mesh), kernel_(kernel), ansatz_(ansatz), options_(options) {
    check_assembly_inputs(kernel, ansatz);
    if (options.quad.outer.size() == 0 || options.quad.inner.size() == 0)
        throw ConfigError("empty quadrature rule");
    if (options.quad.gauss_points_1d < 1) throw ConfigError("gauss1d must be at least 1");
    if (static_cast<int>(ansatz.nodes.size()) != 3 * mesh.element_count())
        throw ConfigError("ansatz space does not match the mesh");

    geom_.resize(mesh.element_count());
    for (int k = 0; k < mesh.element_count(); ++k) {
        auto& g = geom_[k];
        g.tri = mesh.corners(k);
        g.e1 = g.tri[1] - g.tri[0];
        g.e2 = g.tri[2] - g.tri[0];
        g.det = cross(g.e1, g.e2);
        if (!(g.det > 0.0)) throw ConfigError("element " + std::to_string(k) + " is not counterclockwise");
        g.inv = {g.e2.y / g.det, -g.e2.x / g.det, -g.e1.y / g.det, g.e1.x / g.det};
        g.lo = {std::min({g.tri[0].x, g.tri[1].x, g.tri[2].x}), std::min({g.tri[0].y, g.tri[1].y, g.tri[2].y})};
        g.hi = {std::max({g.tri[0].x, g.tri[1].x, g.tri[2].x}), std::max({g.tri[0].y, g.tri[1].y, g.tri[2].y})};
        g.label = mesh.elements[k].label;
    }
    for (const auto& p : options.quad.inner.points) inner_basis_.push_back(ref_basis(p));
    for (const auto& p : options.quad.outer.points) outer_basis_.push_back(ref_basis(p));
    if (kernel.s > -1.0) {
        singular_[0] = singular_rule(TouchingCase::Identical, options.quad.gauss_points_1d);
        singular_[1] = singular_rule(TouchingCase::EdgeTouching, options.quad.gauss_points_1d);
        singular_[2] = singular_rule(TouchingCase::VertexTouching, options.quad.gauss_points_1d);
    }
    min_subtriangle_area_ = 1e-14 * mesh.h * mesh.h;
    diagonal_tol2_ = (1e-13 * mesh.h) * (1e-13 * mesh.h);
}

bool Assembler::owns_rows(int k) const {
    ElementLabel l = mesh_.elements[k].label;
    return l == ElementLabel::Domain || (l == ElementLabel::Dirichlet && options_.rows == RowScope::AllRows);
}

double Assembler::bbox_gap(int k, int l) const {
    const auto& a = geom_[k];
    const auto& b = geom_[l];
    return std::max({b.lo.x - a.hi.x, a.lo.x - b.hi.x, b.lo.y - a.hi.y, a.lo.y - b.hi.y, 0.0});
}

bool Assembler::fully_contained(int k, int l) const {
    for (const auto& x : geom_[k].tri)
        for (const auto& y : geom_[l].tri)
            if (!inside_ball(y, x, kernel_.delta, kernel_.ball)) return false;
    return true;
}

bool Assembler::pair_interacts(int k, int l) const {
    if (shared_vertex_count(mesh_.elements[k], mesh_.elements[l]) > 0) return true;
    if (bbox_gap(k, l) > kernel_.delta * (1.0 + kBallTolerance)) return false;
    for (int side = 0; side < 2; ++side) {
        const auto& P = geom_[side == 0 ? k : l];
        const auto& Q = geom_[side == 0 ? l : k];
        for (const auto& o : options_.quad.outer.points) {
            Vec2 x = P.tri[0] + o.x * P.e1 + o.y * P.e2;
            if (ball_meets_triangle(x, Q.tri, kernel_.delta, kernel_.ball)) return true;
        }
    }
    return false;
}

template <int N>
void Assembler::one_sided(int p, int q, bool want_12, bool want_34, bool skip_diagonal,
                          FourTerms& t) const {
    constexpr int NN = N * N;
    constexpr int S = 3 * N;  // row stride of the term arrays
    const auto& P = geom_[p];
    const auto& Q = geom_[q];
    const auto& outer = options_.quad.outer;
    const auto& inner = options_.quad.inner;
    const double delta = kernel_.delta;
    const double reach = delta * (1.0 + kBallTolerance);
    const bool symmetric = kernel_.symmetric;
    const KernelFunction& psi = kernel_.value;

    for (int op = 0; op < outer.size(); ++op) {
        const Vec2& ro = outer.points[op];
        const Vec2 x = P.tri[0] + ro.x * P.e1 + ro.y * P.e2;
        const double wx = outer.weights[op] * P.det;
        const auto& px = outer_basis_[op];

        double gap = std::max({Q.lo.x - x.x, x.x - Q.hi.x, Q.lo.y - x.y, x.y - Q.hi.y, 0.0});
        if (gap > reach) continue;

        double I1[NN] = {}, I2[3][NN] = {}, I3[3][3][NN] = {}, I4[3][NN] = {};
        bool any = false;
        auto accumulate = [&](const Vec2& y, double wy, const std::array<double, 3>& py) {
            Vec2 d = x - y;
            if (skip_diagonal && dot(d, d) < diagonal_tol2_) return;
            KernelMatrix kxy = psi(x, y, P.label, Q.label);
            KernelMatrix kyx;
            if (symmetric) {
                kyx = {kxy[0], kxy[2], kxy[1], kxy[3]};
            } else {
                kyx = psi(y, x, Q.label, P.label);
            }
            if constexpr (N == 1) kyx[0] = symmetric ? kxy[0] : kyx[0];
            if (want_12) {
                for (int ij = 0; ij < NN; ++ij) I1[ij] += wy * kxy[N == 1 ? 0 : ij];
                for (int b = 0; b < 3; ++b)
                    for (int ij = 0; ij < NN; ++ij) I2[b][ij] += wy * py[b] * kyx[N == 1 ? 0 : ij];
            }
            if (want_34) {
                for (int a = 0; a < 3; ++a) {
                    for (int b = a; b < 3; ++b) {
                        double w = wy * py[a] * py[b];
                        for (int ij = 0; ij < NN; ++ij) I3[a][b][ij] += w * kyx[N == 1 ? 0 : ij];
                    }
                    for (int ij = 0; ij < NN; ++ij) I4[a][ij] += wy * py[a] * kxy[N == 1 ? 0 : ij];
                }
            }
        };

        bool full = true;
        for (const auto& v : Q.tri) full = full && inside_ball(v, x, delta, kernel_.ball);
        if (full) {
            for (int iq = 0; iq < inner.size(); ++iq) {
                const Vec2& ri = inner.points[iq];
                accumulate(Q.tri[0] + ri.x * Q.e1 + ri.y * Q.e2, inner.weights[iq] * Q.det,
                           inner_basis_[iq]);
            }
            any = true;
        } else {
            ConvexPolygon poly = intersect_ball(Q.tri, x, delta, kernel_.ball);
            Retriangulation rt = fan_triangulate(poly, min_subtriangle_area_);
            if (rt.size == 0) {
                if (!t.interacts && ball_meets_triangle(x, Q.tri, delta, kernel_.ball)) t.interacts = true;
                continue;
            }
            any = true;
            for (int s = 0; s < rt.size; ++s) {
                const Triangle& st = rt.triangles[s];
                Vec2 f1 = st[1] - st[0];
                Vec2 f2 = st[2] - st[0];
                double det = cross(f1, f2);
                for (int iq = 0; iq < inner.size(); ++iq) {
                    const Vec2& ri = inner.points[iq];
                    Vec2 y = st[0] + ri.x * f1 + ri.y * f2;
                    Vec2 r = y - Q.tri[0];
                    Vec2 yr{Q.inv[0] * r.x + Q.inv[1] * r.y, Q.inv[2] * r.x + Q.inv[3] * r.y};
                    accumulate(y, inner.weights[iq] * det, ref_basis(yr));
                }
            }
        }
        if (!any) continue;
        t.nonempty = true;
        t.interacts = true;
        if (want_34)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < a; ++b)
                    for (int ij = 0; ij < NN; ++ij) I3[a][b][ij] = I3[b][a][ij];

        for (int a = 0; a < 3; ++a)
            for (int i = 0; i < N; ++i)
                for (int b = 0; b < 3; ++b)
                    for (int j = 0; j < N; ++j) {
                        const int idx = (a * N + i) * S + b * N + j;
                        const int ij = i * N + j;
                        if (want_12) {
                            t.local[idx] += wx * px[a] * px[b] * I1[ij];
                            t.nonlocal[idx] -= wx * px[a] * I2[b][ij];
                        }
                        if (want_34) {
                            t.local_prime[idx] += wx * I3[a][b][ij];
                            t.nonlocal_prime[idx] -= wx * I4[a][ij] * px[b];
                        }
                    }
    }
}

FourTerms Assembler::four_terms(int k, int l) const {
    FourTerms t;
    t.n = kernel_.n;
    const bool skip = classify_pair(mesh_, k, l) != PairClass::Disjoint;
    if (kernel_.n == 1)
        one_sided<1>(k, l, true, true, skip, t);
    else
        one_sided<2>(k, l, true, true, skip, t);
    return t;
}

template <int N>
void Assembler::singular_block_impl(int k, int l, double* out) const {
    constexpr int E = 6 * N;  // extended local size and row stride
    const auto& ek = mesh_.elements[k];
    const auto& el = mesh_.elements[l];
    // Shared vertices first, in the same order in both elements.
    std::array<int, 3> pk{}, pl{};
    int shared = 0;
    std::array<bool, 3> used_k{}, used_l{};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (ek.vertices[a] == el.vertices[b]) {
                pk[shared] = a;
                pl[shared] = b;
                used_k[a] = used_l[b] = true;
                ++shared;
            }
    int ik = shared, il = shared;
    for (int a = 0; a < 3; ++a) {
        if (!used_k[a]) pk[ik++] = a;
        if (!used_l[a]) pl[il++] = a;
    }
    const TensorizedSingularRule* rule = nullptr;
    if (shared == 3) rule = &singular_[0];
    else if (shared == 2) rule = &singular_[1];
    else if (shared == 1) rule = &singular_[2];
    else throw ConfigError("regularizing rule requested for a disjoint pair");
    if (rule->points.empty()) throw ConfigError("regularizing rule not prepared for this kernel");

    const auto& Gk = geom_[k];
    const auto& Gl = geom_[l];
    const Vec2 k0 = Gk.tri[pk[0]], k1 = Gk.tri[pk[1]] - k0, k2 = Gk.tri[pk[2]] - k0;
    const Vec2 l0 = Gl.tri[pl[0]], l1 = Gl.tri[pl[1]] - l0, l2 = Gl.tri[pl[2]] - l0;
    const double jac = Gk.det * Gl.det;
    const bool symmetric = kernel_.symmetric;

    std::fill(out, out + E * E, 0.0);
    for (const auto& sp : rule->points) {
        const Vec2 x = k0 + sp.x.x * k1 + sp.x.y * k2;
        const Vec2 y = l0 + sp.y.x * l1 + sp.y.y * l2;
        const auto bx = ref_basis(sp.x);
        const auto by = ref_basis(sp.y);
        // Extended test values: phi(x) on k, -phi(y) on l, in original local numbering.
        double tv[6];
        for (int c = 0; c < 3; ++c) {
            tv[pk[c]] = bx[c];
            tv[3 + pl[c]] = -by[c];
        }
        KernelMatrix kxy = kernel_.value(x, y, Gk.label, Gl.label);
        KernelMatrix kyx = symmetric ? KernelMatrix{kxy[0], kxy[2], kxy[1], kxy[3]}
                                     : kernel_.value(y, x, Gl.label, Gk.label);
        const double w = sp.weight * jac;
        for (int a = 0; a < 6; ++a) {
            const double ta = w * tv[a];
            if (ta == 0.0) continue;
            for (int b = 0; b < 6; ++b) {
                const KernelMatrix& K = b < 3 ? kxy : kyx;
                const double sb = ta * tv[b];
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < N; ++j)
                        out[(a * N + i) * E + b * N + j] += sb * K[N == 1 ? 0 : i * N + j];
            }
        }
    }
}

std::array<double, 4 * kMaxLocal * kMaxLocal> Assembler::singular_block(int k, int l) const {
    std::array<double, 4 * kMaxLocal * kMaxLocal> m{};
    if (kernel_.n == 1)
        singular_block_impl<1>(k, l, m.data());
    else
        singular_block_impl<2>(k, l, m.data());
    return m;
}

LocalBlock Assembler::local_contribution(int r, int m) const {
    const int N = kernel_.n;
    const int R = 3 * N;
    const int C = 6 * N;
    LocalBlock B;
    B.k = r;
    B.l = m;
    B.n = N;
    B.pair = classify_pair(mesh_, r, m);
    if (!active(mesh_.elements[r].label) || !active(mesh_.elements[m].label)) {
        B.interacts = pair_interacts(r, m);
        return B;
    }
    B.rule = dispatch(kernel_.s, B.pair, options_.quad.weak);

    if (B.rule == RuleKind::Regularizing) {
        const int a = std::min(r, m), b = std::max(r, m);
        const auto M = singular_block(a, b);
        const int E = 6 * N;
        const bool r_first = (r == a);
        const auto& er = mesh_.elements[r];
        const auto& em = mesh_.elements[m];
        for (int alpha = 0; alpha < 3; ++alpha) {
            // Partner row of the same global basis function in the other element.
            int partner = -1;
            if (r == m) {
                partner = alpha;
            } else if (ansatz_.kind == AnsatzKind::CG) {
                for (int beta = 0; beta < 3; ++beta)
                    if (em.vertices[beta] == er.vertices[alpha]) partner = beta;
            }
            const double factor = (partner >= 0) ? 1.0 : 2.0;
            for (int i = 0; i < N; ++i) {
                const int row_self = (r_first ? 0 : 3 * N) + alpha * N + i;
                const int row_other = partner < 0 ? -1 : (r_first ? 3 * N : 0) + partner * N + i;
                for (int c = 0; c < E; ++c) {
                    double v = M[row_self * E + c];
                    if (row_other >= 0) v += M[row_other * E + c];
                    // Columns of the first element belong to r when r comes first.
                    const bool col_in_first = c < 3 * N;
                    const int local = col_in_first ? c : c - 3 * N;
                    const bool own = (r == m) ? col_in_first : (col_in_first == r_first);
                    B.values[(alpha * N + i) * C + (own ? 0 : 3 * N) + local] = factor * v;
                }
            }
        }
        B.nonzero = B.interacts = true;
    } else {
        if (bbox_gap(r, m) > kernel_.delta * (1.0 + kBallTolerance)) return B;
        const bool skip = B.rule == RuleKind::AvoidDiagonal;
        auto run = [&](int p, int q, bool w12, bool w34, FourTerms& t) {
            t.n = N;
            if (N == 1)
                one_sided<1>(p, q, w12, w34, skip, t);
            else
                one_sided<2>(p, q, w12, w34, skip, t);
        };
        const int S = 3 * N;
        if (fully_contained(r, m)) {
            FourTerms t;
            run(r, m, true, false, t);
            for (int i = 0; i < R; ++i)
                for (int j = 0; j < S; ++j) {
                    B.values[i * C + j] = 2.0 * t.local[i * S + j];
                    B.values[i * C + S + j] = 2.0 * t.nonlocal[i * S + j];
                }
            B.nonzero = B.interacts = true;
        } else if (r == m) {
            FourTerms t;
            run(r, r, true, true, t);
            for (int i = 0; i < R; ++i)
                for (int j = 0; j < S; ++j) {
                    B.values[i * C + j] = t.local[i * S + j] + t.local_prime[i * S + j];
                    B.values[i * C + S + j] = t.nonlocal[i * S + j] + t.nonlocal_prime[i * S + j];
                }
            B.nonzero = t.nonempty;
            B.interacts = t.interacts;
        } else {
            FourTerms ta, tb;
            run(r, m, true, false, ta);
            run(m, r, false, true, tb);
            for (int i = 0; i < R; ++i)
                for (int j = 0; j < S; ++j) {
                    B.values[i * C + j] = ta.local[i * S + j] + tb.local_prime[i * S + j];
                    B.values[i * C + S + j] = ta.nonlocal[i * S + j] + tb.nonlocal_prime[i * S + j];
                }
            B.nonzero = ta.nonempty || tb.nonempty;
            B.interacts = ta.interacts || tb.interacts;
        }
    }
    for (int i = 0; i < R * C; ++i)
        if (!std::isfinite(B.values[i]))
            throw NumericalError("non-finite local contribution for pair (" + std::to_string(r) + ", " +
                                 std::to_string(m) + ")");
    return B;
}

void Assembler::compact_root(int root, const std::vector<LocalBlock>& blocks, Fragment& out,
                             Scratch& scratch) const {
    const int N = kernel_.n;
    const int R = 3 * N;
    const int C = 6 * N;
    const int J = ansatz_.dof_count;
    if (scratch.acc.size() < static_cast<std::size_t>(R) * J) scratch.acc.assign(static_cast<std::size_t>(R) * J, 0.0);
    if (scratch.mark.size() < static_cast<std::size_t>(J)) scratch.mark.assign(J, 0);
    scratch.touched.clear();
    out.clear();
    out.origin = root;

    int col_dof[2 * kMaxLocal];
    for (const auto& B : blocks) {
        for (int c = 0; c < C; ++c) {
            const int e = c < R ? root : B.l;
            const int lc = c < R ? c : c - R;
            col_dof[c] = ansatz_.dof(e, lc / N, lc % N);
            if (!scratch.mark[col_dof[c]]) {
                scratch.mark[col_dof[c]] = 1;
                scratch.touched.push_back(col_dof[c]);
            }
        }
        for (int i = 0; i < R; ++i) {
            double* row = scratch.acc.data() + static_cast<std::size_t>(i) * J;
            for (int c = 0; c < C; ++c) row[col_dof[c]] += B.values[i * C + c];
        }
    }
    std::sort(scratch.touched.begin(), scratch.touched.end());
    const bool all_rows = options_.rows == RowScope::AllRows;
    for (int i = 0; i < R; ++i) {
        const int dof = ansatz_.dof(root, i / N, i % N);
        double* row = scratch.acc.data() + static_cast<std::size_t>(i) * J;
        if (all_rows || ansatz_.free_mask[dof]) {
            out.rows.push_back(dof);
            for (int c : scratch.touched) {
                out.cols.push_back(c);
                out.values.push_back(row[c]);
            }
            out.offsets.push_back(static_cast<std::int64_t>(out.cols.size()));
        }
        for (int c : scratch.touched) row[c] = 0.0;
    }
    for (int c : scratch.touched) scratch.mark[c] = 0;
    if (scratch.touched.empty()) out.clear(), out.origin = root;
}

CsrMatrix SparseSystem::free_block() const {
    std::vector<int> map(A.cols, -1);
    for (std::size_t i = 0; i < free_dofs.size(); ++i) map[free_dofs[i]] = static_cast<int>(i);
    CsrMatrix B;
    B.rows = B.cols = static_cast<int>(free_dofs.size());
    B.row_ptr.assign(1, 0);
    for (int d : free_dofs) {
        for (auto p = A.row_ptr[d]; p < A.row_ptr[d + 1]; ++p)
            if (map[A.col_idx[p]] >= 0) {
                B.col_idx.push_back(map[A.col_idx[p]]);
                B.values.push_back(A.values[p]);
            }
        B.row_ptr.push_back(static_cast<std::int64_t>(B.col_idx.size()));
    }
    return B;
}

CsrMatrix SparseSystem::coupling_block() const {
    std::vector<int> map(A.cols, -1);
    for (std::size_t i = 0; i < constrained_dofs.size(); ++i) map[constrained_dofs[i]] = static_cast<int>(i);
    CsrMatrix B;
    B.rows = static_cast<int>(free_dofs.size());
    B.cols = static_cast<int>(constrained_dofs.size());
    B.row_ptr.assign(1, 0);
    for (int d : free_dofs) {
        for (auto p = A.row_ptr[d]; p < A.row_ptr[d + 1]; ++p)
            if (map[A.col_idx[p]] >= 0) {
                B.col_idx.push_back(map[A.col_idx[p]]);
                B.values.push_back(A.values[p]);
            }
        B.row_ptr.push_back(static_cast<std::int64_t>(B.col_idx.size()));
    }
    return B;
}

SparseSystem make_system(CsrMatrix A, const AnsatzSpace& ansatz, RowScope scope) {
    SparseSystem s;
    s.A = std::move(A);
    s.scope = scope;
    s.free_mask = ansatz.free_mask;
    for (int d = 0; d < ansatz.dof_count; ++d)
        (ansatz.free_mask[d] ? s.free_dofs : s.constrained_dofs).push_back(d);
    return s;
}

namespace {

// Uniform bucket grid over element bounding boxes, for the connectivity cross-check.
class BucketGrid {
public:
    BucketGrid(const Assembler& as, double cell) : as_(as), cell_(cell) {
        const int ne = as.mesh().element_count();
        lo_ = {INFINITY, INFINITY};
        Vec2 hi{-INFINITY, -INFINITY};
        for (int k = 0; k < ne; ++k) {
            const auto& g = as.geometry(k);
            lo_ = {std::min(lo_.x, g.lo.x), std::min(lo_.y, g.lo.y)};
            hi = {std::max(hi.x, g.hi.x), std::max(hi.y, g.hi.y)};
        }
        nx_ = std::max(1, static_cast<int>(std::ceil((hi.x - lo_.x) / cell_)) + 1);
        ny_ = std::max(1, static_cast<int>(std::ceil((hi.y - lo_.y) / cell_)) + 1);
        cells_.resize(static_cast<std::size_t>(nx_) * ny_);
        for (int k = 0; k < ne; ++k) {
            const auto& g = as.geometry(k);
            for (int j = iy(g.lo.y); j <= iy(g.hi.y); ++j)
                for (int i = ix(g.lo.x); i <= ix(g.hi.x); ++i) cells_[j * nx_ + i].push_back(k);
        }
    }

    template <class F>
    void query(const Vec2& lo, const Vec2& hi, F&& f) const {
        for (int j = iy(lo.y); j <= iy(hi.y); ++j)
            for (int i = ix(lo.x); i <= ix(hi.x); ++i)
                for (int k : cells_[j * nx_ + i]) f(k);
    }

private:
    int ix(double x) const { return std::clamp(static_cast<int>((x - lo_.x) / cell_), 0, nx_ - 1); }
    int iy(double y) const { return std::clamp(static_cast<int>((y - lo_.y) / cell_), 0, ny_ - 1); }
    const Assembler& as_;
    double cell_;
    Vec2 lo_;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> cells_;
};

struct Worker {
    std::vector<int> stamp;
    std::vector<int> depth;
    std::vector<int> queue;
    std::vector<LocalBlock> blocks;
    Assembler::Scratch scratch;
    AssemblyStats stats;
    std::vector<std::string> warnings;
    std::vector<int> seen;
};

void run_root(const Assembler& as, const AdjacencyGraph& adj, const BucketGrid* grid, int root,
              Worker& w, Fragment& out) {
    const Mesh& mesh = as.mesh();
    const int tag = root + 1;
    w.blocks.clear();
    w.queue.clear();
    ++w.stats.roots;

    w.stamp[root] = tag;
    w.depth[root] = 0;
    LocalBlock self = as.local_contribution(root, root);
    ++w.stats.pairs_evaluated;
    if (self.nonzero) w.blocks.push_back(self);
    w.queue.push_back(root);
    for (std::size_t head = 0; head < w.queue.size(); ++head) {
        const int from = w.queue[head];
        for (const int* it = adj.begin(from); it != adj.end(from); ++it) {
            const int m = *it;
            if (w.stamp[m] == tag) continue;
            w.stamp[m] = tag;
            w.depth[m] = w.depth[from] + 1;
            bool enqueue;
            if (mesh.elements[m].label == ElementLabel::Inactive) {
                enqueue = as.pair_interacts(root, m);
            } else {
                LocalBlock b = as.local_contribution(root, m);
                ++w.stats.pairs_evaluated;
                if (b.pair != PairClass::Disjoint && w.depth[m] != 1) ++w.stats.touching_beyond_first_layer;
                if (b.rule == RuleKind::Regularizing) ++w.stats.singular_pairs;
                enqueue = b.interacts;
                if (b.nonzero) w.blocks.push_back(b);
            }
            if (enqueue)
                w.queue.push_back(m);
            else
                w.stamp[m] = -tag;  // visited, not interacting
        }
    }
    // Elements reached with a zero block keep -tag; queued ones keep tag.
    std::sort(w.blocks.begin(), w.blocks.end(),
              [](const LocalBlock& a, const LocalBlock& b) { return a.l < b.l; });
    w.stats.nonzero_blocks += static_cast<std::int64_t>(w.blocks.size());
    as.compact_root(root, w.blocks, out, w.scratch);

    if (grid) {
        const auto& g = as.geometry(root);
        const double d = as.kernel().delta * (1.0 + kBallTolerance);
        int misses = 0;
        grid->query({g.lo.x - d, g.lo.y - d}, {g.hi.x + d, g.hi.y + d}, [&](int m) {
            if (w.seen[m] == tag) return;
            w.seen[m] = tag;
            if (w.stamp[m] == tag) return;
            if (as.pair_interacts(root, m)) ++misses;
        });
        if (misses > 0) {
            w.stats.connectivity_misses += misses;
            if (w.warnings.size() < 20)
                w.warnings.push_back("element " + std::to_string(root) + ": " + std::to_string(misses) +
                                     " interacting elements are not reachable through interacting "
                                     "neighbors; the interaction neighborhood is not connected");
        }
    }
}

}  // namespace

AssemblyResult bfs_assemble(const Mesh& mesh, const AdjacencyGraph& adjacency, const KernelSpec& kernel,
                            const AnsatzSpace& ansatz, const AssemblyOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    if (adjacency.size() != mesh.element_count()) throw ConfigError("adjacency graph does not match the mesh");
    if (options.n_threads < 1) throw ConfigError("thread count must be positive");
    Assembler as(mesh, kernel, ansatz, options);

    std::vector<int> roots;
    for (int k = 0; k < mesh.element_count(); ++k)
        if (as.owns_rows(k)) roots.push_back(k);

    std::unique_ptr<BucketGrid> grid;
    if (options.check_connectivity)
        grid = std::make_unique<BucketGrid>(as, std::max(kernel.delta, mesh.h));

    const int threads = options.n_threads;
    std::vector<Worker> workers(threads);
    for (auto& w : workers) {
        w.stamp.assign(mesh.element_count(), 0);
        w.depth.assign(mesh.element_count(), 0);
        if (grid) w.seen.assign(mesh.element_count(), 0);
    }

    RowAccumulator acc(ansatz.dof_count, ansatz.dof_count);
    const std::size_t wave = static_cast<std::size_t>(std::max(1, options.wave_size)) * threads;
    std::vector<Fragment> fragments;
    for (std::size_t start = 0; start < roots.size(); start += wave) {
        const std::size_t stop = std::min(roots.size(), start + wave);
        const std::size_t count = stop - start;
        fragments.resize(count);
        auto work = [&](int t) {
            // Contiguous slice of this wave.
            const std::size_t a = start + count * t / threads;
            const std::size_t b = start + count * (t + 1) / threads;
            for (std::size_t i = a; i < b; ++i)
                run_root(as, adjacency, grid.get(), roots[i], workers[t], fragments[i - start]);
        };
        if (threads == 1) {
            work(0);
        } else {
            std::vector<std::exception_ptr> errors(threads);
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t)
                pool.emplace_back([&, t] {
                    try {
                        work(t);
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
            for (auto& th : pool) th.join();
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
        }
        for (const auto& f : fragments) acc.add(f);
    }

    AssemblyResult result;
    result.system = make_system(acc.finish(), ansatz, options.rows);
    for (const auto& w : workers) {
        result.stats.roots += w.stats.roots;
        result.stats.pairs_evaluated += w.stats.pairs_evaluated;
        result.stats.nonzero_blocks += w.stats.nonzero_blocks;
        result.stats.singular_pairs += w.stats.singular_pairs;
        result.stats.touching_beyond_first_layer += w.stats.touching_beyond_first_layer;
        result.stats.connectivity_misses += w.stats.connectivity_misses;
        result.warnings.insert(result.warnings.end(), w.warnings.begin(), w.warnings.end());
    }
    if (result.stats.connectivity_misses > 0)
        result.warnings.push_back("connectivity assumption violated: " +
                                  std::to_string(result.stats.connectivity_misses) +
                                  " interacting pairs missed by the traversal; add inactive elements "
                                  "to connect the mesh");
    result.stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::vector<double> assemble_load(const Mesh& mesh, const AnsatzSpace& ansatz, const VectorField& f,
                                  const TriangleRule& rule) {
    std::vector<double> b(ansatz.dof_count, 0.0);
    const int n = ansatz.n;
    for (int k = 0; k < mesh.element_count(); ++k) {
        if (!active(mesh.elements[k].label)) continue;
        auto t = mesh.corners(k);
        const Vec2 e1 = t[1] - t[0], e2 = t[2] - t[0];
        const double det = std::fabs(cross(e1, e2));
        for (int q = 0; q < rule.size(); ++q) {
            const Vec2& r = rule.points[q];
            const auto fx = f(t[0] + r.x * e1 + r.y * e2);
            const auto phi = ref_basis(r);
            const double w = rule.weights[q] * det;
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < n; ++c) b[ansatz.dof(k, a, c)] += w * phi[a] * fx[c];
        }
    }
    return b;
}

CsrMatrix assemble_mass(const Mesh& mesh, const AnsatzSpace& ansatz) {
    const TriangleRule rule = rule_7point();
    const int n = ansatz.n;
    RowAccumulator acc(ansatz.dof_count, ansatz.dof_count);
    for (int k = 0; k < mesh.element_count(); ++k) {
        if (!active(mesh.elements[k].label)) continue;
        const double det = 2.0 * mesh.area(k);
        double m[3][3] = {};
        for (int q = 0; q < rule.size(); ++q) {
            const auto phi = ref_basis(rule.points[q]);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) m[a][b] += rule.weights[q] * det * (phi[a] * phi[b]);
        }
        std::vector<std::tuple<int, int, double>> trip;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < n; ++c) trip.emplace_back(ansatz.dof(k, a, c), ansatz.dof(k, b, c), m[a][b]);
        acc.add(fragment_from_triplets(k, std::move(trip)));
    }
    return acc.finish();
}

}  // namespace nlfem
