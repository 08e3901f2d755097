#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nlfem/geometry.hpp"
#include "nlfem/kernel.hpp"
#include "nlfem/mesh.hpp"
#include "nlfem/quadrature.hpp"
#include "nlfem/sparse.hpp"

namespace nlfem {

enum class AnsatzKind { CG, DG };

AnsatzKind parse_ansatz(const std::string& name);
std::string to_string(AnsatzKind kind);

struct AnsatzSpace {
    AnsatzKind kind = AnsatzKind::CG;
    int n = 1;
    int dof_count = 0;
    std::vector<int> nodes;       // 3 per element: vertex id (CG) or 3k + a (DG)
    std::vector<char> free_mask;  // per dof

    int dof(int k, int a, int comp) const { return n * nodes[3 * k + a] + comp; }
    int free_count() const;
};

// CG: a node is constrained iff it touches a Dirichlet element, or touches no Domain element.
// DG: a dof is free iff its element is Domain.
AnsatzSpace make_ansatz(const Mesh& mesh, AnsatzKind kind, int n);

// Which outer elements own rows: Domain elements only, or Domain and Dirichlet elements.
// With AllRows the whole matrix over the active elements is assembled.
enum class RowScope { FreeRows, AllRows };

struct AssemblyOptions {
    QuadratureConfig quad;
    int n_threads = 1;
    RowScope rows = RowScope::FreeRows;
    bool check_connectivity = false;
    int wave_size = 256;  // roots per worker and merge round
};

inline constexpr int kMaxLocal = 6;  // 3 basis functions times n <= 2

// Terms of one ordered pair (k, l): outer integral on k, inner on l truncated by the ball
// around each outer point. Signs are included. Rows/cols are (a, i) -> a * n + i.
struct FourTerms {
    int n = 1;
    std::array<double, kMaxLocal * kMaxLocal> local{};           // rows k, cols k
    std::array<double, kMaxLocal * kMaxLocal> nonlocal{};        // rows k, cols l
    std::array<double, kMaxLocal * kMaxLocal> local_prime{};     // rows l, cols l
    std::array<double, kMaxLocal * kMaxLocal> nonlocal_prime{};  // rows l, cols k
    bool nonempty = false;
    bool interacts = false;
};

// Contribution of the pair (k, l) to the rows of element k. Columns are the local dofs of k
// followed by those of l.
struct LocalBlock {
    int k = 0;
    int l = 0;
    int n = 1;
    PairClass pair = PairClass::Disjoint;
    RuleKind rule = RuleKind::Standard;
    bool nonzero = false;    // some inner region was nonempty
    bool interacts = false;  // the exact ball meets the other element
    std::array<double, kMaxLocal * 2 * kMaxLocal> values{};

    int rows() const { return 3 * n; }
    int cols() const { return 6 * n; }
    double at(int r, int c) const { return values[r * 6 * n + c]; }
};

struct SparseSystem {
    CsrMatrix A;  // J x J
    RowScope scope = RowScope::FreeRows;
    std::vector<char> free_mask;
    std::vector<int> free_dofs;
    std::vector<int> constrained_dofs;

    CsrMatrix free_block() const;      // free x free
    CsrMatrix coupling_block() const;  // free x constrained
};

struct AssemblyStats {
    std::int64_t roots = 0;
    std::int64_t pairs_evaluated = 0;
    std::int64_t nonzero_blocks = 0;
    std::int64_t singular_pairs = 0;
    std::int64_t touching_beyond_first_layer = 0;
    std::int64_t connectivity_misses = 0;
    double seconds = 0.0;
};

struct AssemblyResult {
    SparseSystem system;
    AssemblyStats stats;
    std::vector<std::string> warnings;
};

class Assembler {
public:
    Assembler(const Mesh& mesh, const KernelSpec& kernel, const AnsatzSpace& ansatz,
              const AssemblyOptions& options = {});

    FourTerms four_terms(int k, int l) const;
    LocalBlock local_contribution(int k, int l) const;
    // Whether the exact ball around some outer point of k meets l or vice versa.
    bool pair_interacts(int k, int l) const;
    // Full integrand block over the 6n extended dofs (k first, then l) with the regularizing rule.
    std::array<double, 4 * kMaxLocal * kMaxLocal> singular_block(int k, int l) const;

    struct Scratch {
        std::vector<double> acc;  // 3n rows of length J
        std::vector<char> mark;
        std::vector<int> touched;
    };
    // Sums the blocks of one root, ordered by l, into a fragment holding the rows the root owns.
    void compact_root(int root, const std::vector<LocalBlock>& blocks, Fragment& out,
                      Scratch& scratch) const;

    bool owns_rows(int k) const;
    const Mesh& mesh() const { return mesh_; }
    const AnsatzSpace& ansatz() const { return ansatz_; }
    const KernelSpec& kernel() const { return kernel_; }
    const AssemblyOptions& options() const { return options_; }

    struct ElementGeometry {
        Triangle tri;
        Vec2 e1, e2;                 // edge vectors from vertex 0
        double det = 0.0;            // positive
        std::array<double, 4> inv{};  // inverse of [e1 e2]
        Vec2 lo, hi;                 // bounding box
        ElementLabel label = ElementLabel::Domain;
    };
    const ElementGeometry& geometry(int k) const { return geom_[k]; }

private:
    template <int N>
    void one_sided(int p, int q, bool want_12, bool want_34, bool skip_diagonal, FourTerms& t) const;
    template <int N>
    void singular_block_impl(int k, int l, double* out) const;
    bool fully_contained(int k, int l) const;
    double bbox_gap(int k, int l) const;

    const Mesh& mesh_;
    KernelSpec kernel_;
    const AnsatzSpace& ansatz_;
    AssemblyOptions options_;
    std::vector<ElementGeometry> geom_;
    std::vector<std::array<double, 3>> inner_basis_;
    std::vector<std::array<double, 3>> outer_basis_;
    std::array<TensorizedSingularRule, 3> singular_;
    double min_subtriangle_area_ = 0.0;
    double diagonal_tol2_ = 0.0;
};

void check_assembly_inputs(const KernelSpec& kernel, const AnsatzSpace& ansatz);

AssemblyResult bfs_assemble(const Mesh& mesh, const AdjacencyGraph& adjacency,
                            const KernelSpec& kernel, const AnsatzSpace& ansatz,
                            const AssemblyOptions& options = {});

SparseSystem make_system(CsrMatrix A, const AnsatzSpace& ansatz, RowScope scope);

// b_i = sum over active elements of the outer rule applied to phi_i^T f. Length J.
std::vector<double> assemble_load(const Mesh& mesh, const AnsatzSpace& ansatz, const VectorField& f,
                                  const TriangleRule& rule = rule_7point());

// M_ij = integral of phi_i^T phi_j over active elements.
CsrMatrix assemble_mass(const Mesh& mesh, const AnsatzSpace& ansatz);

}  // namespace nlfem
