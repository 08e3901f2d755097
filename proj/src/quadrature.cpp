#include "nlfem/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace nlfem {

TriangleRule rule_7point() {
    TriangleRule r;
    r.name = "7point";
    r.points = {{1.0 / 3.0, 1.0 / 3.0}, {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0},
                {0.5, 0.0},             {0.0, 0.5}, {0.5, 0.5}};
    r.weights = {27.0 / 120.0, 3.0 / 120.0, 3.0 / 120.0, 3.0 / 120.0,
                 8.0 / 120.0,  8.0 / 120.0, 8.0 / 120.0};
    return r;
}

TriangleRule triangle_rule_by_name(const std::string& name) {
    if (name == "7point") return rule_7point();
    throw ConfigError("unknown triangle rule '" + name + "' (expected 7point)");
}

GaussRule gauss_legendre(int n) {
    if (n < 1) throw ConfigError("Gauss rule needs at least one point");
    GaussRule g;
    g.nodes.resize(n);
    g.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int k = 1; k <= n; ++k) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * k - 1.0) * t * p2 - (k - 1.0) * p3) / k;
            }
            dp = n * (t * p1 - p2) / (t * t - 1.0);
            double step = p1 / dp;
            t -= step;
            if (std::fabs(step) < 1e-16) break;
        }
        double w = 2.0 / ((1.0 - t * t) * dp * dp);
        // Map from (-1, 1) to (0, 1); nodes ascending.
        g.nodes[i] = 0.5 * (1.0 - t);
        g.nodes[n - 1 - i] = 0.5 * (1.0 + t);
        g.weights[i] = g.weights[n - 1 - i] = 0.5 * w;
    }
    if (n % 2 == 1) g.nodes[n / 2] = 0.5;
    return g;
}

namespace {

// Regularizing maps from (0,1)^4 onto the simplex pair {0 <= z2 <= z1 <= 1}^2. Each returns
// (x1, x2, y1, y2) and the Jacobian.
using SimplexPair = std::array<double, 4>;
using Map = double (*)(double xi, double e1, double e2, double e3, SimplexPair& z);

double vertex0(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi, xi * e1, xi * e2, xi * e2 * e3};
    return xi * xi * xi * e2;
}
double vertex1(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi * e2, xi * e2 * e3, xi, xi * e1};
    return xi * xi * xi * e2;
}

double edge0(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi, xi * e1 * e3, xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)};
    return xi * xi * xi * e1 * e1;
}
double edge1(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi, xi * e1, xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)};
    return xi * xi * xi * e1 * e1 * e2;
}
double edge2(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2), xi, xi * e1 * e2 * e3};
    return xi * xi * xi * e1 * e1 * e2;
}
double edge3(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3), xi, xi * e1};
    return xi * xi * xi * e1 * e1 * e2;
}
double edge4(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3), xi, xi * e1 * e2};
    return xi * xi * xi * e1 * e1 * e2;
}

double ident0(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi, xi * (1.0 - e1 + e1 * e2), xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1)};
    return xi * xi * xi * e1 * e1 * e2;
}
double ident1(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1), xi, xi * (1.0 - e1 + e1 * e2)};
    return xi * xi * xi * e1 * e1 * e2;
}
double ident2(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi, xi * e1 * (1.0 - e2 + e2 * e3), xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)};
    return xi * xi * xi * e1 * e1 * e2;
}
double ident3(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2), xi, xi * e1 * (1.0 - e2 + e2 * e3)};
    return xi * xi * xi * e1 * e1 * e2;
}
double ident4(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3), xi, xi * e1 * (1.0 - e2)};
    return xi * xi * xi * e1 * e1 * e2;
}
double ident5(double xi, double e1, double e2, double e3, SimplexPair& z) {
    z = {xi, xi * e1 * (1.0 - e2), xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)};
    return xi * xi * xi * e1 * e1 * e2;
}

}  // namespace

TensorizedSingularRule singular_rule(TouchingCase touching, int n_1d) {
    static const Map vertex_maps[] = {vertex0, vertex1};
    static const Map edge_maps[] = {edge0, edge1, edge2, edge3, edge4};
    static const Map ident_maps[] = {ident0, ident1, ident2, ident3, ident4, ident5};
    const Map* maps = nullptr;
    int count = 0;
    switch (touching) {
        case TouchingCase::VertexTouching: maps = vertex_maps; count = 2; break;
        case TouchingCase::EdgeTouching: maps = edge_maps; count = 5; break;
        case TouchingCase::Identical: maps = ident_maps; count = 6; break;
        default: throw ConfigError("unknown touching case");
    }
    // The integrand still carries powers xi^(3-2s), e1^(2-2s), e2^(1-2s) (as far as the case
    // factors them out); t = u^2 turns these into integer powers for s in Z/4. Axis v holds
    // the Jacobian power 3 - v, so it gets at least 4 - v nodes to stay exact on it and keep
    // the measure for every n_1d.
    const int graded = touching == TouchingCase::VertexTouching ? 1 : touching == TouchingCase::EdgeTouching ? 2 : 3;
    const GaussRule g = gauss_legendre(n_1d);
    GaussRule sq[3];
    for (int v = 0; v < graded; ++v) {
        const GaussRule base = gauss_legendre(std::max(n_1d, 4 - v));
        sq[v] = base;
        for (std::size_t i = 0; i < base.nodes.size(); ++i) {
            sq[v].nodes[i] = base.nodes[i] * base.nodes[i];
            sq[v].weights[i] = 2.0 * base.nodes[i] * base.weights[i];
        }
    }
    // The remaining axes are smooth but see complex poles close to [0, 1] on skewed
    // elements; two panels keep them accurate at small n_1d.
    GaussRule split;
    split.nodes.resize(2 * n_1d);
    split.weights.resize(2 * n_1d);
    for (int i = 0; i < n_1d; ++i)
        for (int h = 0; h < 2; ++h) {
            split.nodes[h * n_1d + i] = 0.5 * (h + g.nodes[i]);
            split.weights[h * n_1d + i] = 0.5 * g.weights[i];
        }
    // The last vertex-case axis is mild enough for a single panel.
    const int split_end = touching == TouchingCase::VertexTouching ? 3 : 4;
    const GaussRule* axis[4];
    for (int v = 0; v < 4; ++v) axis[v] = v < graded ? &sq[v] : v < split_end ? &split : &g;
    TensorizedSingularRule rule;
    rule.touching = touching;
    rule.n_1d = n_1d;
    const int len[4] = {int(axis[0]->nodes.size()), int(axis[1]->nodes.size()), int(axis[2]->nodes.size()),
                        int(axis[3]->nodes.size())};
    for (int m = 0; m < count; ++m)
        for (int a = 0; a < len[0]; ++a)
            for (int b = 0; b < len[1]; ++b)
                for (int c = 0; c < len[2]; ++c)
                    for (int d = 0; d < len[3]; ++d) {
                        SimplexPair z;
                        double jac = maps[m](axis[0]->nodes[a], axis[1]->nodes[b], axis[2]->nodes[c],
                                             axis[3]->nodes[d], z);
                        double w = axis[0]->weights[a] * axis[1]->weights[b] * axis[2]->weights[c] *
                                   axis[3]->weights[d] * jac;
                        // {0 <= z2 <= z1 <= 1} to the reference triangle, unit Jacobian.
                        rule.points.push_back({{z[0] - z[1], z[1]}, {z[2] - z[3], z[3]}, w});
                    }
    return rule;
}

std::string to_string(RuleKind kind) {
    switch (kind) {
        case RuleKind::Standard: return "standard";
        case RuleKind::AvoidDiagonal: return "avoid-diagonal";
        case RuleKind::Regularizing: return "regularizing";
    }
    return "?";
}

WeakSingular parse_weak_singular(const std::string& name) {
    if (name == "avoid") return WeakSingular::Avoid;
    if (name == "transform") return WeakSingular::Transform;
    throw ConfigError("unknown weak-singular rule '" + name + "' (expected avoid or transform)");
}

RuleKind dispatch(double s, PairClass pair, WeakSingular weak) {
    if (!(s < 1.0)) throw ConfigError("singularity exponent s must be below 1");
    if (pair == PairClass::Disjoint || s <= -1.0) return RuleKind::Standard;
    if (s <= 0.0) return weak == WeakSingular::Avoid ? RuleKind::AvoidDiagonal : RuleKind::Regularizing;
    return RuleKind::Regularizing;
}

}  // namespace nlfem
