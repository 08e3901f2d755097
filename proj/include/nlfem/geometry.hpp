#pragma once

#include <array>

#include "nlfem/core.hpp"
#include "nlfem/kernel.hpp"
#include "nlfem/mesh.hpp"

namespace nlfem {

using Triangle = std::array<Vec2, 3>;

inline constexpr int kMaxPolygonVertices = 16;
inline constexpr double kBallTolerance = 1e-12;  // relative slack on the closed ball

// Counterclockwise convex polygon with inline storage. Fewer than 3 vertices means empty.
struct ConvexPolygon {
    std::array<Vec2, kMaxPolygonVertices> vertices{};
    int size = 0;

    bool empty() const { return size < 3; }
    void push(const Vec2& p) {
        if (size == kMaxPolygonVertices) throw NumericalError("polygon capacity exceeded");
        vertices[size++] = p;
    }
    const Vec2& operator[](int i) const { return vertices[i]; }
    double area() const;
};

ConvexPolygon polygon_from_triangle(const Triangle& t);

struct Retriangulation {
    std::array<Triangle, kMaxPolygonVertices - 2> triangles{};
    int size = 0;
};

bool inside_ball(const Vec2& p, const Vec2& center, double delta, BallType ball);

// conv(vertices inside the closed disk and edge/circle crossings).
ConvexPolygon intersect_nocaps(const Triangle& t, const Vec2& center, double delta);
ConvexPolygon intersect_nocaps(const ConvexPolygon& p, const Vec2& center, double delta);
// nocaps plus the arc midpoint of every circular cap.
ConvexPolygon intersect_approxcaps(const Triangle& t, const Vec2& center, double delta);
// Exact clip against the square [center - delta, center + delta]^2.
ConvexPolygon intersect_infinity(const Triangle& t, const Vec2& center, double delta);
ConvexPolygon intersect_ball(const Triangle& t, const Vec2& center, double delta, BallType ball);

// Fan (v0, vi, vi+1); triangles with area below min_area are dropped.
Retriangulation fan_triangulate(const ConvexPolygon& p, double min_area = 0.0);

double distance_to_triangle(const Vec2& p, const Triangle& t);
// Whether the exact closed ball around p meets the closed triangle.
bool ball_meets_triangle(const Vec2& p, const Triangle& t, double delta, BallType ball);

enum class PairClass { Identical, EdgeTouching, VertexTouching, Disjoint };

int shared_vertex_count(const Element& a, const Element& b);
PairClass classify_pair(const Mesh& mesh, int k, int l);

}  // namespace nlfem
