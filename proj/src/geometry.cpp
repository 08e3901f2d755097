#include "nlfem/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace nlfem {

double ConvexPolygon::area() const {
    if (empty()) return 0.0;
    double a2 = 0.0;
    for (int i = 1; i + 1 < size; ++i) a2 += signed_area2(vertices[0], vertices[i], vertices[i + 1]);
    return 0.5 * a2;
}

ConvexPolygon polygon_from_triangle(const Triangle& t) {
    ConvexPolygon p;
    for (const auto& v : t) p.push(v);
    return p;
}

namespace {

enum class PointKind : unsigned char { Corner, Entry, Exit };

struct TaggedPolygon {
    std::array<Vec2, kMaxPolygonVertices> v;
    std::array<PointKind, kMaxPolygonVertices> kind;
    int size = 0;
    void push(const Vec2& p, PointKind k) {
        if (size == kMaxPolygonVertices) throw NumericalError("polygon capacity exceeded");
        v[size] = p;
        kind[size] = k;
        ++size;
    }
};

double scale_of(const Vec2* v, int n, double delta) {
    double s = delta;
    for (int i = 1; i < n; ++i) s = std::max(s, norm_inf(v[i] - v[0]));
    return s;
}

void check_triangle(const Triangle& t) {
    if (!(std::fabs(signed_area2(t[0], t[1], t[2])) > 0.0))
        throw ConfigError("degenerate triangle in ball intersection");
}

// Walks the boundary and keeps inside corners and circle crossings in boundary order.
TaggedPolygon trace_disk(const Vec2* v, int n, const Vec2& c, double delta) {
    TaggedPolygon out;
    const double r2_in = delta * delta * (1.0 + kBallTolerance) * (1.0 + kBallTolerance);
    const double r2 = delta * delta;
    for (int i = 0; i < n; ++i) {
        const Vec2& p = v[i];
        const Vec2& q = v[(i + 1) % n];
        Vec2 f = p - c;
        const bool p_in = dot(f, f) <= r2_in;
        if (p_in) out.push(p, PointKind::Corner);
        Vec2 d = q - p;
        double a = dot(d, d);
        double b = dot(f, d);
        double cc = dot(f, f) - r2;
        double disc = b * b - a * cc;
        if (!(disc > 0.0)) continue;
        double sq = std::sqrt(disc);
        double t1 = (-b - sq) / a;
        double t2 = (-b + sq) / a;
        // An endpoint on the circle is its own crossing. Solving for it instead loses
        // digits like 1/|d| on short chords, which breaks idempotence. Such a corner takes
        // the kind of the root at its outgoing edge; the root at the incoming edge is dropped.
        Vec2 g = q - c;
        const double slack = r2_in - r2;
        const bool p_on = p_in && std::fabs(cc) <= slack;
        const bool q_on = dot(g, g) <= r2_in && std::fabs(dot(g, g) - r2) <= slack;
        if (p_on) (std::fabs(t1) < std::fabs(t2) ? t1 : t2) = 0.0;
        if (q_on) (std::fabs(t1 - 1.0) < std::fabs(t2 - 1.0) ? t1 : t2) = 1.0;
        auto crossing = [&](double t, PointKind k) {
            if (t > 0.0 && t < 1.0) out.push(p + t * d, k);
            else if (t == 0.0 && p_on) out.kind[out.size - 1] = k;  // p was pushed as a corner
        };
        crossing(t1, PointKind::Entry);
        crossing(t2, PointKind::Exit);
    }
    return out;
}

// Removes consecutive points closer than eps, cyclically. A corner lying on the circle takes over
// the crossing kind of the point merged into it.
template <class Poly>
void dedupe(Poly& p, double eps) {
    if (p.size < 2) return;
    int w = 0;
    for (int i = 0; i < p.size; ++i) {
        if (w > 0 && norm_inf(p.v[i] - p.v[w - 1]) <= eps) {
            if (p.kind[i] != PointKind::Corner) p.kind[w - 1] = p.kind[i];
            continue;
        }
        p.v[w] = p.v[i];
        p.kind[w] = p.kind[i];
        ++w;
    }
    while (w > 1 && norm_inf(p.v[w - 1] - p.v[0]) <= eps) {
        if (p.kind[0] == PointKind::Corner) p.kind[0] = p.kind[w - 1];
        --w;
    }
    p.size = w;
}

ConvexPolygon to_polygon(const TaggedPolygon& t) {
    ConvexPolygon p;
    if (t.size < 3) return p;
    for (int i = 0; i < t.size; ++i) p.push(t.v[i]);
    return p;
}

bool inside_triangle(const Vec2& p, const Triangle& t, double tol) {
    for (int i = 0; i < 3; ++i) {
        const Vec2& a = t[i];
        const Vec2& b = t[(i + 1) % 3];
        Vec2 e = b - a;
        if (cross(e, p - a) < -tol * norm(e)) return false;
    }
    return true;
}

double diameter(const Triangle& t) {
    return std::max({norm(t[1] - t[0]), norm(t[2] - t[1]), norm(t[0] - t[2])});
}

}  // namespace

bool inside_ball(const Vec2& p, const Vec2& center, double delta, BallType ball) {
    const double r = delta * (1.0 + kBallTolerance);
    Vec2 d = p - center;
    if (ball == BallType::Infinity) return norm_inf(d) <= r;
    return dot(d, d) <= r * r;
}

ConvexPolygon intersect_nocaps(const ConvexPolygon& poly, const Vec2& center, double delta) {
    TaggedPolygon t = trace_disk(poly.vertices.data(), poly.size, center, delta);
    dedupe(t, 1e-14 * scale_of(poly.vertices.data(), poly.size, delta));
    return to_polygon(t);
}

ConvexPolygon intersect_nocaps(const Triangle& tri, const Vec2& center, double delta) {
    check_triangle(tri);
    return intersect_nocaps(polygon_from_triangle(tri), center, delta);
}

ConvexPolygon intersect_approxcaps(const Triangle& tri, const Vec2& center, double delta) {
    check_triangle(tri);
    TaggedPolygon t = trace_disk(tri.data(), 3, center, delta);
    dedupe(t, 1e-14 * scale_of(tri.data(), 3, delta));
    const double tol = 1e-12 * diameter(tri);
    ConvexPolygon out;
    for (int i = 0; i < t.size; ++i) {
        out.push(t.v[i]);
        int j = (i + 1) % t.size;
        if (t.size < 2 || t.kind[i] != PointKind::Exit || t.kind[j] != PointKind::Entry) continue;
        Vec2 chord = t.v[j] - t.v[i];
        if (norm(chord) < 1e-10 * delta) continue;
        // The boundary follows the circle counterclockwise from the exit to the next entry.
        Vec2 ue = t.v[i] - center;
        Vec2 un = t.v[j] - center;
        ue = ue * (1.0 / norm(ue));
        un = un * (1.0 / norm(un));
        double cr = cross(ue, un);
        Vec2 dir;
        Vec2 sum = ue + un;
        double ls = norm(sum);
        if (ls > 1e-14) {
            dir = sum * ((cr >= 0.0 ? 1.0 : -1.0) / ls);
        } else {
            dir = Vec2{-ue.y, ue.x};
        }
        Vec2 mid = center + delta * dir;
        if (inside_triangle(mid, tri, tol)) out.push(mid);
    }
    if (out.size < 3) return ConvexPolygon{};
    return out;
}

ConvexPolygon intersect_infinity(const Triangle& tri, const Vec2& center, double delta) {
    check_triangle(tri);
    std::array<Vec2, kMaxPolygonVertices> a{}, b{};
    int na = 3;
    for (int i = 0; i < 3; ++i) a[i] = tri[i];
    // Half-planes sign * (coord - bound) <= 0 for x and y.
    const double bounds[4] = {center.x + delta, center.x - delta, center.y + delta, center.y - delta};
    const double signs[4] = {1.0, -1.0, 1.0, -1.0};
    for (int h = 0; h < 4 && na > 0; ++h) {
        const bool use_x = h < 2;
        auto value = [&](const Vec2& p) { return signs[h] * ((use_x ? p.x : p.y) - bounds[h]); };
        int nb = 0;
        for (int i = 0; i < na; ++i) {
            const Vec2& p = a[i];
            const Vec2& q = a[(i + 1) % na];
            double fp = value(p);
            double fq = value(q);
            if (fp <= 0.0) b[nb++] = p;
            if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) {
                double s = fp / (fp - fq);
                Vec2 x = p + s * (q - p);
                // Snap the clipped coordinate onto the box face.
                if (use_x) x.x = bounds[h]; else x.y = bounds[h];
                b[nb++] = x;
            }
            if (nb > kMaxPolygonVertices - 2) throw NumericalError("polygon capacity exceeded");
        }
        std::swap(a, b);
        na = nb;
    }
    struct Plain {
        std::array<Vec2, kMaxPolygonVertices> v;
        std::array<PointKind, kMaxPolygonVertices> kind;
        int size;
    } p{a, {}, na};
    dedupe(p, 1e-14 * scale_of(tri.data(), 3, delta));
    ConvexPolygon out;
    if (p.size < 3) return out;
    for (int i = 0; i < p.size; ++i) out.push(p.v[i]);
    return out;
}

ConvexPolygon intersect_ball(const Triangle& t, const Vec2& center, double delta, BallType ball) {
    switch (ball) {
        case BallType::NoCaps: return intersect_nocaps(t, center, delta);
        case BallType::ApproxCaps: return intersect_approxcaps(t, center, delta);
        case BallType::Infinity: return intersect_infinity(t, center, delta);
    }
    return {};
}

Retriangulation fan_triangulate(const ConvexPolygon& p, double min_area) {
    Retriangulation r;
    for (int i = 1; i + 1 < p.size; ++i) {
        double a = 0.5 * signed_area2(p[0], p[i], p[i + 1]);
        if (!(a > 0.0) || a < min_area) continue;
        r.triangles[r.size++] = {p[0], p[i], p[i + 1]};
    }
    return r;
}

double distance_to_triangle(const Vec2& p, const Triangle& t) {
    if (inside_triangle(p, t, 0.0)) return 0.0;
    double best = INFINITY;
    for (int i = 0; i < 3; ++i) {
        const Vec2& a = t[i];
        Vec2 e = t[(i + 1) % 3] - a;
        double s = std::clamp(dot(p - a, e) / dot(e, e), 0.0, 1.0);
        best = std::min(best, norm(p - (a + s * e)));
    }
    return best;
}

bool ball_meets_triangle(const Vec2& p, const Triangle& t, double delta, BallType ball) {
    const double r = delta * (1.0 + kBallTolerance);
    if (ball != BallType::Infinity) return distance_to_triangle(p, t) <= r;
    // Separating axes: the two box axes and the three edge normals.
    double lo_x = std::min({t[0].x, t[1].x, t[2].x}), hi_x = std::max({t[0].x, t[1].x, t[2].x});
    double lo_y = std::min({t[0].y, t[1].y, t[2].y}), hi_y = std::max({t[0].y, t[1].y, t[2].y});
    if (lo_x > p.x + r || hi_x < p.x - r || lo_y > p.y + r || hi_y < p.y - r) return false;
    for (int i = 0; i < 3; ++i) {
        Vec2 e = t[(i + 1) % 3] - t[i];
        Vec2 nrm{e.y, -e.x};  // outward for counterclockwise triangles
        double tri_min = dot(nrm, t[(i + 2) % 3]);
        double edge = dot(nrm, t[i]);
        double lo = std::min(tri_min, edge), hi = std::max(tri_min, edge);
        double reach = r * (std::fabs(nrm.x) + std::fabs(nrm.y));
        double cp = dot(nrm, p);
        if (cp - reach > hi || cp + reach < lo) return false;
    }
    return true;
}

int shared_vertex_count(const Element& a, const Element& b) {
    int n = 0;
    for (int u : a.vertices)
        for (int v : b.vertices) n += (u == v);
    return n;
}

PairClass classify_pair(const Mesh& mesh, int k, int l) {
    switch (shared_vertex_count(mesh.elements[k], mesh.elements[l])) {
        case 3: return PairClass::Identical;
        case 2: return PairClass::EdgeTouching;
        case 1: return PairClass::VertexTouching;
        default: return PairClass::Disjoint;
    }
}

}  // namespace nlfem
