#pragma once

#include <string>
#include <vector>

#include "nlfem/core.hpp"
#include "nlfem/geometry.hpp"

namespace nlfem {

// Rule on the reference triangle {x >= 0, y >= 0, x + y <= 1}; weights sum to 1/2.
struct TriangleRule {
    std::string name;
    std::vector<Vec2> points;
    std::vector<double> weights;
    int size() const { return static_cast<int>(points.size()); }
};

TriangleRule rule_7point();
TriangleRule triangle_rule_by_name(const std::string& name);

struct GaussRule {
    std::vector<double> nodes;  // in (0, 1)
    std::vector<double> weights;
};

GaussRule gauss_legendre(int n);

enum class TouchingCase { Identical, EdgeTouching, VertexTouching };

struct SingularPoint {
    Vec2 x;  // reference point in the first element
    Vec2 y;  // reference point in the second element
    double weight;
};

// Flat point list on Ê x Ê. Shared vertices are local vertices 0 (vertex case) or 0 and 1 (edge
// case) of both elements, listed in the same order.
struct TensorizedSingularRule {
    TouchingCase touching = TouchingCase::Identical;
    int n_1d = 0;
    std::vector<SingularPoint> points;
};

TensorizedSingularRule singular_rule(TouchingCase touching, int n_1d);

enum class RuleKind { Standard, AvoidDiagonal, Regularizing };
enum class WeakSingular { Avoid, Transform };

std::string to_string(RuleKind kind);
WeakSingular parse_weak_singular(const std::string& name);

RuleKind dispatch(double s, PairClass pair, WeakSingular weak = WeakSingular::Avoid);

struct QuadratureConfig {
    TriangleRule outer = rule_7point();
    TriangleRule inner = rule_7point();
    int gauss_points_1d = 5;
    WeakSingular weak = WeakSingular::Avoid;
};

}  // namespace nlfem
