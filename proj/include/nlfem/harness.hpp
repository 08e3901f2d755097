#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nlfem/assembly.hpp"

namespace nlfem {

// Nodal interpolant: vertex values for CG, per-element vertex values for DG.
std::vector<double> interpolate(const Mesh& mesh, const AnsatzSpace& ansatz, const VectorField& u);

struct SolveOptions {
    double rtol = 1e-12;
    int max_iterations = 0;  // 0 means 10 * J
    bool dense = false;      // direct solve, only for J <= kDenseLimit
};

inline constexpr int kDenseLimit = 2000;

struct SolveReport {
    int iterations = 0;
    double residual = 0.0;  // ||b - A x|| / ||b|| on the free block
    bool dense = false;
};

// Conjugate gradients on a symmetric positive definite matrix, starting from zero.
std::vector<double> conjugate_gradient(const CsrMatrix& A, const std::vector<double>& b, double rtol,
                                       int max_iterations, SolveReport* report = nullptr);
std::vector<double> dense_solve(const CsrMatrix& A, const std::vector<double>& b);

// Solves A_ff u_f = b_f - A_fc g_c. `load` and `g` have length J; the returned vector holds g on
// the constrained dofs.
std::vector<double> solve_dirichlet(const SparseSystem& system, const std::vector<double>& load,
                                    const std::vector<double>& g, const SolveOptions& options = {},
                                    SolveReport* report = nullptr);

enum class ErrorRegion { Full, Domain };

ErrorRegion parse_error_region(const std::string& name);

// sqrt of the integral of |u_h - u|^2 over the active elements (Full) or the Domain elements,
// 7-point rule per element.
double l2_error(const Mesh& mesh, const AnsatzSpace& ansatz, const std::vector<double>& coeffs,
                const VectorField& u_exact, ErrorRegion region = ErrorRegion::Full);

enum class StudyMode { RefineH, RefineBoth, ShrinkDelta };

StudyMode parse_study_mode(const std::string& name);
std::string to_string(StudyMode mode);

struct StudyConfig {
    std::string kernel = "fractional";
    double s = 0.5;
    double delta = 0.2;
    std::optional<BallType> ball;  // kernel default when empty
    AnsatzKind ansatz = AnsatzKind::CG;
    std::vector<int> levels;       // n_div per level; one entry in ShrinkDelta mode
    std::vector<double> deltas;    // ShrinkDelta only
    StudyMode mode = StudyMode::RefineH;
    QuadratureConfig quad;
    int threads = 1;
    ErrorRegion region = ErrorRegion::Full;
    SolveOptions solve;
    double side = 0.5;
};

struct ConvergenceRow {
    double h = 0.0;
    double delta = 0.0;
    int dof = 0;  // free dofs
    double l2_error = 0.0;
    double rate = 0.0;
    int n_div = 0;
    double assembly_seconds = 0.0;
    double solve_seconds = 0.0;
    int iterations = 0;
    double residual = 0.0;
    std::int64_t nnz = 0;
    std::vector<std::string> warnings;
};

void validate_study(const StudyConfig& config);

using StudyProgress = std::function<void(const ConvergenceRow&)>;

std::vector<ConvergenceRow> run_study(const StudyConfig& config, const StudyProgress& progress = {});

std::string format_rows_csv(const std::vector<ConvergenceRow>& rows);
void write_rows_csv(const std::vector<ConvergenceRow>& rows, const std::string& path);

struct ScalingRow {
    int threads = 1;
    double seconds = 0.0;
    double efficiency = 1.0;  // T_1 / (p T_p)
};

struct ScalingResult {
    std::vector<ScalingRow> rows;
    int dof = 0;
    std::int64_t nnz = 0;
    bool identical = true;  // all matrices bitwise equal
};

// Assembles the system of config.levels[0] once per thread count, best of `repeats` timings.
// The first count is the baseline for the efficiency.
ScalingResult run_scaling(const StudyConfig& config, const std::vector<int>& thread_counts, int repeats = 1);

}  // namespace nlfem
