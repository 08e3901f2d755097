#pragma once

#include <array>
#include <functional>
#include <string>

#include "nlfem/core.hpp"
#include "nlfem/mesh.hpp"

namespace nlfem {

enum class BallType { NoCaps, ApproxCaps, Infinity };

BallType parse_ball(const std::string& name);
std::string to_string(BallType ball);

// Row-major n x n block; only entry 0 is used for scalar kernels.
using KernelMatrix = std::array<double, 4>;

// Psi(x, y) without the ball indicator. Receives the labels of the host elements of x and y.
// Must be pure: the assembly calls it concurrently.
using KernelFunction =
    std::function<KernelMatrix(const Vec2& x, const Vec2& y, ElementLabel lx, ElementLabel ly)>;

struct KernelSpec {
    std::string name;
    double delta = 0.0;
    // Singularity exponent: |Psi(x,y)| |x-y|^(2+2s) is bounded. Values <= 0 mark weak or no singularity.
    double s = 0.0;
    int n = 1;
    bool symmetric = true;
    BallType ball = BallType::NoCaps;
    double scale = 0.0;  // leading constant, for diagnostics
    KernelFunction value;
};

KernelSpec fractional_kernel(double s, double delta);
KernelSpec peridynamic_kernel(double delta);
KernelSpec constant_kernel_infinity(double delta);
// Constant kernel with value c and a chosen ball, used for null space checks.
KernelSpec constant_kernel(double c, double delta, BallType ball);
// Builds one of the built-in kernels from its CLI name.
KernelSpec kernel_by_name(const std::string& name, double s, double delta);

using VectorValue = std::array<double, 2>;
using VectorField = std::function<VectorValue(const Vec2&)>;

struct ManufacturedProblem {
    std::string name;
    int n = 1;
    VectorField u_exact;
    VectorField f;
    VectorField g;
};

ManufacturedProblem problem_fractional();
ManufacturedProblem problem_peridynamic();
ManufacturedProblem problem_infinity();
ManufacturedProblem problem_for_kernel(const std::string& kernel_name);

}  // namespace nlfem
