#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nlfem/kernel.hpp"

using namespace nlfem;

namespace {

constexpr ElementLabel D = ElementLabel::Domain;

double max_abs(const KernelMatrix& m) {
    double r = 0.0;
    for (double v : m) r = std::max(r, std::fabs(v));
    return r;
}

// Random pairs with |x - y| spread log-uniformly over [1e-8, delta].
template <class F>
void for_random_pairs(double delta, int count, F&& f) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> pos(-0.3, 0.8), angle(0.0, 2.0 * std::numbers::pi),
        logr(std::log(1e-8), std::log(delta));
    for (int i = 0; i < count; ++i) {
        Vec2 x{pos(rng), pos(rng)};
        double r = std::exp(logr(rng)), t = angle(rng);
        f(x, x + Vec2{r * std::cos(t), r * std::sin(t)});
    }
}

// Second-order central differences of a field.
double d2(const VectorField& u, const Vec2& x, int comp, int i, int j, double h) {
    Vec2 ei = i == 0 ? Vec2{h, 0} : Vec2{0, h};
    Vec2 ej = j == 0 ? Vec2{h, 0} : Vec2{0, h};
    if (i == j) return (u(x + ei)[comp] - 2.0 * u(x)[comp] + u(x - ei)[comp]) / (h * h);
    return (u(x + ei + ej)[comp] - u(x + ei - ej)[comp] - u(x - ei + ej)[comp] + u(x - ei - ej)[comp]) /
           (4.0 * h * h);
}

}  // namespace

TEST_CASE("fractional kernel constant and symmetry") {
    KernelSpec k = fractional_kernel(0.5, 0.2);
    CHECK(k.scale == doctest::Approx(1.0 / (0.2 * std::numbers::pi)).epsilon(1e-14));
    CHECK(k.scale == doctest::Approx(1.59155).epsilon(1e-5));
    CHECK(k.s == 0.5);
    CHECK(k.n == 1);
    CHECK(k.symmetric);
    Vec2 x{0.1, 0.2}, y{0.1 + 0.2, 0.2};
    CHECK(k.value(x, y, D, D)[0] * std::pow(0.2, 3.0) == doctest::Approx(k.scale).epsilon(1e-13));
    CHECK_THROWS_AS(fractional_kernel(1.0, 0.2), ConfigError);
    CHECK_THROWS_AS(fractional_kernel(0.0, 0.2), ConfigError);
    CHECK_THROWS_AS(fractional_kernel(0.5, 0.0), ConfigError);
}

TEST_CASE("peridynamic kernel") {
    KernelSpec k = peridynamic_kernel(0.1);
    CHECK(k.scale == doctest::Approx(3000.0).epsilon(1e-13));
    CHECK(k.n == 2);
    CHECK(k.s == -0.5);
    double r = 0.03;
    KernelMatrix m = k.value({0.2 + r, 0.1}, {0.2, 0.1}, D, D);
    CHECK(m[0] == doctest::Approx(3000.0 / r).epsilon(1e-13));
    CHECK(m[1] == 0.0);
    CHECK(m[2] == 0.0);
    CHECK(m[3] == 0.0);
    for_random_pairs(0.1, 1000, [&](const Vec2& x, const Vec2& y) {
        KernelMatrix c = k.value(x, y, D, D);
        double dist = norm(x - y);
        double tr = c[0] + c[3];
        CHECK(tr / k.scale == doctest::Approx(1.0 / dist).epsilon(1e-12));
        // rank one: determinant vanishes relative to the trace squared
        CHECK(std::fabs(c[0] * c[3] - c[1] * c[2]) <= 1e-12 * tr * tr);
        CHECK(c[0] >= 0.0);
        CHECK(c[3] >= 0.0);
    });
    CHECK_THROWS_AS(peridynamic_kernel(-1.0), ConfigError);
}

TEST_CASE("constant infinity kernel") {
    CHECK(constant_kernel_infinity(0.1).scale == doctest::Approx(7500.0).epsilon(1e-13));
    CHECK(constant_kernel_infinity(0.2).scale == doctest::Approx(468.75).epsilon(1e-13));
    KernelSpec k = constant_kernel_infinity(0.2);
    CHECK(k.ball == BallType::Infinity);
    CHECK(k.s <= -1.0);
    CHECK(k.value({0, 0}, {0.1, 0.05}, D, D)[0] == k.value({0.4, 0.3}, {0.3, 0.2}, D, D)[0]);
    CHECK_THROWS_AS(constant_kernel_infinity(0.0), ConfigError);
}

TEST_CASE("boundedness and symmetry on random pairs") {
    for (const auto& k : {fractional_kernel(0.5, 0.2), fractional_kernel(0.25, 0.1), peridynamic_kernel(0.1),
                          constant_kernel_infinity(0.2)}) {
        CAPTURE(k.name);
        double sup = 0.0;
        for_random_pairs(k.delta, 10000, [&](const Vec2& x, const Vec2& y) {
            KernelMatrix a = k.value(x, y, D, D), b = k.value(y, x, D, D);
            double scale = max_abs(a);
            CHECK(std::fabs(a[0] - b[0]) <= 1e-13 * scale);
            CHECK(std::fabs(a[1] - b[2]) <= 1e-13 * scale);
            CHECK(std::fabs(a[2] - b[1]) <= 1e-13 * scale);
            CHECK(std::fabs(a[3] - b[3]) <= 1e-13 * scale);
            double weight = k.s > -1.0 ? std::pow(norm(x - y), 2.0 + 2.0 * k.s) : 1.0;
            sup = std::max(sup, scale * weight);
        });
        CHECK(std::isfinite(sup));
        CHECK(sup <= 1.01 * k.scale);
    }
}

TEST_CASE("value functions are pure") {
    KernelSpec k = fractional_kernel(0.5, 0.2);
    Vec2 x{0.1, 0.1}, y{0.15, 0.12};
    KernelMatrix first = k.value(x, y, D, D);
    for (int i = 0; i < 100; ++i) CHECK(k.value(x, y, D, D) == first);
}

TEST_CASE("kernels by name") {
    CHECK(kernel_by_name("fractional", 0.5, 0.2).name == "fractional");
    CHECK(kernel_by_name("peridynamic", 0.0, 0.1).n == 2);
    CHECK(kernel_by_name("constant-infinity", 0.0, 0.1).ball == BallType::Infinity);
    CHECK_THROWS_AS(kernel_by_name("gaussian", 0.5, 0.2), ConfigError);
    CHECK(parse_ball("approxcaps") == BallType::ApproxCaps);
    CHECK(to_string(BallType::NoCaps) == "nocaps");
    CHECK_THROWS_AS(parse_ball("manhattan"), ConfigError);
}

TEST_CASE("fractional manufactured problem") {
    auto p = problem_fractional();
    CHECK(p.u_exact({0, 0})[0] == 0.0);
    CHECK(p.f({0, 0})[0] == -2.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(-0.2, 0.7);
    for (int i = 0; i < 50; ++i) {
        Vec2 x{pos(rng), pos(rng)};
        double lap = d2(p.u_exact, x, 0, 0, 0, 1e-4) + d2(p.u_exact, x, 0, 1, 1, 1e-4);
        CHECK(std::fabs(p.f(x)[0] + lap) <= 1e-6);
        CHECK(p.g(x) == p.u_exact(x));
    }
}

TEST_CASE("peridynamic manufactured problem") {
    auto p = problem_peridynamic();
    CHECK(p.n == 2);
    CHECK(p.u_exact({1, 1}) == VectorValue{1.0, 1.0});
    CHECK(p.f({0, 0})[0] == doctest::Approx(-std::numbers::pi / 2).epsilon(1e-15));
    CHECK(p.f({0, 0})[1] == 0.0);
    // f = -P0 u with P0 u = pi/4 Lap u + pi/2 grad div u
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> pos(-0.1, 0.6);
    const double h = 1e-4;
    for (int i = 0; i < 50; ++i) {
        Vec2 x{pos(rng), pos(rng)};
        for (int c = 0; c < 2; ++c) {
            double lap = d2(p.u_exact, x, c, 0, 0, h) + d2(p.u_exact, x, c, 1, 1, h);
            double graddiv = d2(p.u_exact, x, 0, c, 0, h) + d2(p.u_exact, x, 1, c, 1, h);
            double p0 = std::numbers::pi / 4 * lap + std::numbers::pi / 2 * graddiv;
            CHECK(std::fabs(p.f(x)[c] + p0) <= 1e-5);
        }
        CHECK(p.g(x) == p.u_exact(x));
    }
}

TEST_CASE("infinity manufactured problem") {
    auto p = problem_infinity();
    CHECK(p.u_exact({0.125, 0.125})[0] == doctest::Approx(1.0).epsilon(1e-15));
    const double c = 32.0 * std::numbers::pi * std::numbers::pi;
    for (double a : {0.0, 0.25, 0.5})
        for (double b : {0.1, 0.33, 0.47}) {
            CHECK(std::fabs(p.u_exact({a, b})[0]) <= 1e-15);
            CHECK(std::fabs(p.u_exact({b, a})[0]) <= 1e-15);
        }
    for (double a : {0.03, 0.2, 0.41})
        for (double b : {0.07, 0.3}) CHECK(p.f({a, b})[0] == doctest::Approx(c * p.u_exact({a, b})[0]));
    CHECK_THROWS_AS(problem_for_kernel("nope"), ConfigError);
}
