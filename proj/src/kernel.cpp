#include "nlfem/kernel.hpp"

#include <cmath>
#include <numbers>

namespace nlfem {

BallType parse_ball(const std::string& name) {
    if (name == "nocaps") return BallType::NoCaps;
    if (name == "approxcaps") return BallType::ApproxCaps;
    if (name == "infinity") return BallType::Infinity;
    throw ConfigError("unknown ball '" + name + "' (expected nocaps, approxcaps or infinity)");
}

std::string to_string(BallType ball) {
    switch (ball) {
        case BallType::NoCaps: return "nocaps";
        case BallType::ApproxCaps: return "approxcaps";
        case BallType::Infinity: return "infinity";
    }
    return "?";
}

KernelSpec fractional_kernel(double s, double delta) {
    if (!(s > 0.0 && s < 1.0)) throw ConfigError("fractional kernel needs 0 < s < 1");
    if (!(delta > 0.0)) throw ConfigError("delta must be positive");
    KernelSpec k;
    k.name = "fractional";
    k.delta = delta;
    k.s = s;
    k.n = 1;
    k.symmetric = true;
    k.ball = BallType::NoCaps;
    const double c = (2.0 - 2.0 * s) / (std::numbers::pi * std::pow(delta, 2.0 - 2.0 * s));
    k.scale = c;
    if (s == 0.5) {
        k.value = [c](const Vec2& x, const Vec2& y, ElementLabel, ElementLabel) {
            Vec2 d = x - y;
            double r2 = dot(d, d);
            return KernelMatrix{c / (r2 * std::sqrt(r2)), 0.0, 0.0, 0.0};
        };
    } else {
        const double e = -(1.0 + s);
        k.value = [c, e](const Vec2& x, const Vec2& y, ElementLabel, ElementLabel) {
            Vec2 d = x - y;
            return KernelMatrix{c * std::pow(dot(d, d), e), 0.0, 0.0, 0.0};
        };
    }
    return k;
}

KernelSpec peridynamic_kernel(double delta) {
    if (!(delta > 0.0)) throw ConfigError("delta must be positive");
    KernelSpec k;
    k.name = "peridynamic";
    k.delta = delta;
    k.s = -0.5;
    k.n = 2;
    k.symmetric = true;
    k.ball = BallType::NoCaps;
    const double c = 3.0 / (delta * delta * delta);
    k.scale = c;
    k.value = [c](const Vec2& x, const Vec2& y, ElementLabel, ElementLabel) {
        Vec2 d = x - y;
        double r2 = dot(d, d);
        double f = c / (r2 * std::sqrt(r2));
        double off = f * d.x * d.y;
        return KernelMatrix{f * d.x * d.x, off, off, f * d.y * d.y};
    };
    return k;
}

KernelSpec constant_kernel(double c, double delta, BallType ball) {
    if (!(delta > 0.0)) throw ConfigError("delta must be positive");
    KernelSpec k;
    k.name = "constant";
    k.delta = delta;
    k.s = -1.0;
    k.n = 1;
    k.symmetric = true;
    k.ball = ball;
    k.scale = c;
    k.value = [c](const Vec2&, const Vec2&, ElementLabel, ElementLabel) {
        return KernelMatrix{c, 0.0, 0.0, 0.0};
    };
    return k;
}

KernelSpec constant_kernel_infinity(double delta) {
    if (!(delta > 0.0)) throw ConfigError("delta must be positive");
    KernelSpec k = constant_kernel(3.0 / (4.0 * std::pow(delta, 4)), delta, BallType::Infinity);
    k.name = "constant-infinity";
    return k;
}

KernelSpec kernel_by_name(const std::string& name, double s, double delta) {
    if (name == "fractional") return fractional_kernel(s, delta);
    if (name == "peridynamic") return peridynamic_kernel(delta);
    if (name == "constant-infinity") return constant_kernel_infinity(delta);
    throw ConfigError("unknown kernel '" + name +
                      "' (expected fractional, peridynamic or constant-infinity)");
}

ManufacturedProblem problem_fractional() {
    ManufacturedProblem p;
    p.name = "fractional";
    p.n = 1;
    p.u_exact = [](const Vec2& x) { return VectorValue{x.x * x.x * x.y + x.y * x.y, 0.0}; };
    p.f = [](const Vec2& x) { return VectorValue{-2.0 * (x.y + 1.0), 0.0}; };
    p.g = p.u_exact;
    return p;
}

ManufacturedProblem problem_peridynamic() {
    ManufacturedProblem p;
    p.name = "peridynamic";
    p.n = 2;
    p.u_exact = [](const Vec2& x) { return VectorValue{x.y * x.y, x.x * x.x * x.y}; };
    p.f = [](const Vec2& x) {
        constexpr double a = -0.5 * std::numbers::pi;
        return VectorValue{a * (1.0 + 2.0 * x.x), a * x.y};
    };
    p.g = p.u_exact;
    return p;
}

ManufacturedProblem problem_infinity() {
    ManufacturedProblem p;
    p.name = "infinity";
    p.n = 1;
    constexpr double w = 4.0 * std::numbers::pi;
    p.u_exact = [](const Vec2& x) {
        return VectorValue{std::sin(w * x.x) * std::sin(w * x.y), 0.0};
    };
    p.f = [](const Vec2& x) {
        constexpr double c = 32.0 * std::numbers::pi * std::numbers::pi;
        return VectorValue{c * std::sin(w * x.x) * std::sin(w * x.y), 0.0};
    };
    p.g = p.u_exact;
    return p;
}

ManufacturedProblem problem_for_kernel(const std::string& kernel_name) {
    if (kernel_name == "fractional") return problem_fractional();
    if (kernel_name == "peridynamic") return problem_peridynamic();
    if (kernel_name == "constant-infinity") return problem_infinity();
    throw ConfigError("no manufactured problem for kernel '" + kernel_name + "'");
}

}  // namespace nlfem
