/// @file test_expr.cpp
/// @brief Expression DAG: parsing, differentiation, simplification, tapes.
#include <cmath>
#include <cstring>
#include <random>
#include <thread>

#include "doctest.h"
#include "lfg/expr.hpp"
#include "lfg/jet.hpp"
#include "lfg/tape.hpp"

using namespace lfg;

namespace {

double eval(Expr e, std::vector<double> x, std::vector<double> v) {
    Bindings b;
    for (std::size_t i = 0; i < x.size(); ++i) b[xvar(static_cast<int>(i))] = x[i];
    for (std::size_t i = 0; i < v.size(); ++i) b[vvar(static_cast<int>(i))] = v[i];
    return compile_and_evaluate(e, b);
}

// Random smooth expressions over x1, x2, v1, v2 that are defined everywhere.
Expr random_expr(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const Variable vars[] = {xvar(0), xvar(1), vvar(0), vvar(1)};
    switch (pick(rng)) {
        case 0: return Expr::constant(std::round(coef(rng) * 4.0) / 4.0);
        case 1: return Expr::variable(vars[rng() % 4]);
        case 2: return raw::add(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
        case 3: return raw::sub(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
        case 4: return raw::mul(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
        case 5: {
            Expr d = random_expr(rng, depth - 1);
            return raw::div(random_expr(rng, depth - 1), raw::add(Expr::constant(1.5), raw::mul(d, d)));
        }
        case 6: return raw::pow(random_expr(rng, depth - 1), 2 + static_cast<int>(rng() % 2), 1);
        case 7: {
            Expr d = random_expr(rng, depth - 1);
            return raw::sqrt(raw::add(Expr::constant(1.0), raw::mul(d, d)));
        }
        case 8: return raw::exp(raw::mul(Expr::constant(0.25), raw::sin(random_expr(rng, depth - 1))));
        default: {
            Expr d = random_expr(rng, depth - 1);
            return raw::log(raw::add(Expr::constant(2.0), raw::cos(d)));
        }
    }
}

std::vector<double> random_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {u(rng), u(rng)};
}

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * (1.0 + std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST_CASE("parse and evaluate examples") {
    Expr mink = parse("-(v1^2)/2 + (v2^2)/2");
    CHECK(eval(mink, {}, {1.0, 0.0}) == doctest::Approx(-0.5));
    CHECK(mink.free_variables() == std::vector<Variable>{vvar(0), vvar(1)});

    Expr w = parse("exp(-x1)*((v1^2-v2^2))");
    CHECK(w.free_variables() == std::vector<Variable>{xvar(0), vvar(0), vvar(1)});
    CHECK(eval(w, {0.0}, {2.0, 1.0}) == doctest::Approx(3.0));

    CHECK(eval(parse("log(x1)*v1"), {std::exp(1.0)}, {2.0}) == doctest::Approx(2.0));
    CHECK(eval(parse("a*v1 + b", {{"a", 3.0}, {"b", 0.5}}), {}, {2.0}) == doctest::Approx(6.5));
    CHECK(eval(parse("v1^(1/2)"), {}, {4.0}) == doctest::Approx(2.0));
    CHECK(eval(parse("v1^(-1)"), {}, {4.0}) == doctest::Approx(0.25));
    CHECK(eval(parse("-v1^2"), {}, {3.0}) == doctest::Approx(-9.0));
    CHECK(eval(parse("2 - 3 - 4"), {}, {}) == doctest::Approx(-5.0));
    CHECK(eval(parse("8 / 4 / 2"), {}, {}) == doctest::Approx(1.0));
}

TEST_CASE("syntax errors carry offset and expectations") {
    try {
        parse("v1 +");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.offset == 4);
        CHECK(std::find(e.expected.begin(), e.expected.end(), "number") != e.expected.end());
    }
    CHECK_THROWS_AS(parse("(v1"), SyntaxError);
    CHECK_THROWS_AS(parse("v1 v2"), SyntaxError);
    CHECK_THROWS_AS(parse("y1 + v1"), UnknownVariable);
    CHECK_THROWS_AS(parse("x0"), UnknownVariable);
}

TEST_CASE("domain errors name the node") {
    try {
        eval(parse("sqrt(v1^2 - v2^2)"), {}, {1.0, 2.0});
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sqrt") != std::string::npos);
        CHECK(msg.find("v=(1, 2)") != std::string::npos);
    }
    CHECK_THROWS_AS(eval(parse("log(x1)"), {0.0}, {}), DomainError);
    CHECK_THROWS_AS(eval(parse("1/x1"), {0.0}, {}), DomainError);
}

TEST_CASE("differentiate examples") {
    CHECK(differentiate(parse("-(v1^2)/2"), vvar(0)).to_string() == "-v1");
    Expr d = differentiate(parse("v2^2"), xvar(0));
    CHECK(d.is_constant(0.0));

    Expr f = parse("v1^4");
    Expr d4 = f;
    for (int k = 0; k < 4; ++k) d4 = differentiate(d4, vvar(0));
    for (double v : {-1.3, 0.2, 2.0}) CHECK(eval(d4, {}, {v}) == doctest::Approx(24.0));

    // Central difference of the third derivative with step 1e-2.
    Expr d3 = differentiate(differentiate(differentiate(f, vvar(0)), vvar(0)), vvar(0));
    const double h = 1e-2, v0 = 0.7;
    const double fd = (eval(d3, {}, {v0 + h}) - eval(d3, {}, {v0 - h})) / (2 * h);
    CHECK(std::abs(fd - eval(d4, {}, {v0})) <= 1e-6 * 24.0);
}

TEST_CASE("mixed fourth-order derivatives of a quotient-root expression") {
    Expr f = parse("exp(x1)*sqrt(v1^2 + v2^2 + 1)/(2 + x1^2)");
    Expr d = differentiate(differentiate(differentiate(differentiate(f, xvar(0)), vvar(0)), vvar(1)), vvar(0));
    // Oracle: central difference in x1 of the third velocity derivative.
    Expr d3 = differentiate(differentiate(differentiate(f, vvar(0)), vvar(1)), vvar(0));
    const double h = 1e-3;
    const std::vector<double> v{0.3, -0.4};
    const double fd = (-eval(d3, {0.2 + 2 * h}, v) + 8 * eval(d3, {0.2 + h}, v) - 8 * eval(d3, {0.2 - h}, v) +
                       eval(d3, {0.2 - 2 * h}, v)) / (12 * h);
    CHECK(rel_close(eval(d, {0.2}, v), fd, 1e-8));
}

TEST_CASE("simplify examples") {
    CHECK(simplify(parse("0*v1 + x1")) == parse("x1"));
    Expr six = simplify(parse("2*3"));
    CHECK(six.is_constant(6.0));

    Expr raw_d = differentiate(parse("v1^2 - v2^2"), vvar(0));
    Expr s = simplify(raw_d);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        auto p = random_point(rng);
        CHECK(rel_close(eval(s, {}, p), eval(raw_d, {}, p), 1e-12));
    }
}

TEST_CASE("hash-consing shares identical subtrees") {
    Expr a = parse("(v1 + x1)*(v1 + x1)");
    CHECK(a.lhs() == a.rhs());
    CHECK(a.node_count() == 4);
    CHECK(parse("v1 + x1") == parse("x1 + v1"));
}

TEST_CASE("property: differentiation is linear") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        Expr f = random_expr(rng, 3), g = random_expr(rng, 3);
        const double a = 1.25, b = -0.5;
        const Variable var = rng() % 2 ? vvar(0) : xvar(1);
        Expr lhs = differentiate(raw::add(raw::mul(Expr::constant(a), f), raw::mul(Expr::constant(b), g)), var);
        Expr df = differentiate(f, var), dg = differentiate(g, var);
        auto p = random_point(rng), q = random_point(rng);
        const double expect = a * eval(df, p, q) + b * eval(dg, p, q);
        CHECK(rel_close(eval(lhs, p, q), expect, 1e-12));
    }
}

TEST_CASE("property: mixed partials commute") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        Expr f = random_expr(rng, 3);
        Expr a = differentiate(differentiate(f, xvar(0)), vvar(1));
        Expr b = differentiate(differentiate(f, vvar(1)), xvar(0));
        auto p = random_point(rng), q = random_point(rng);
        CHECK(rel_close(eval(a, p, q), eval(b, p, q), 1e-12));
    }
}

TEST_CASE("property: first derivative matches a 5-point stencil") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        Expr f = random_expr(rng, 3);
        auto p = random_point(rng), q = random_point(rng);
        const double h = 1e-4 * (std::abs(q[0]) + 1.0);
        auto at = [&](double s) { return eval(f, p, {q[0] + s, q[1]}); };
        const double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
        const double sym = eval(differentiate(f, vvar(0)), p, q);
        CHECK(std::abs(fd - sym) <= 1e-6 * (1.0 + std::abs(sym)));
    }
}

TEST_CASE("property: tape evaluation is bit-identical to the recursive reference") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 200; ++trial) {
        Expr f = random_expr(rng, 4);
        if (trial % 2) f = differentiate(f, vvar(0));
        auto p = random_point(rng), q = random_point(rng);
        Bindings b{{xvar(0), p[0]}, {xvar(1), p[1]}, {vvar(0), q[0]}, {vvar(1), q[1]}};
        const double t = compile_and_evaluate(f, b);
        const double r = evaluate_recursive(f, b);
        CHECK(std::memcmp(&t, &r, sizeof t) == 0);
    }
}

TEST_CASE("property: simplify never increases node count and preserves values") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        Expr f = random_expr(rng, 4);
        if (trial % 3 == 0) f = differentiate(f, xvar(0));
        Expr s = simplify(f);
        CHECK(s.node_count() <= f.node_count());
        auto p = random_point(rng), q = random_point(rng);
        CHECK(rel_close(eval(s, p, q), eval(f, p, q), 1e-12));
    }
}

TEST_CASE("jet evaluation reproduces symbolic first and second derivatives") {
    Expr f = parse("exp(x1*v2)/sqrt(1 + v1^2) + log(2 + x1^2)*v1^(3)");
    Tape t({f});
    const double x0 = 0.4, v0 = -0.7, v1 = 0.9;
    std::vector<Jet> x{Jet::variable(x0, 0, 3, 2)};
    std::vector<Jet> v{Jet::variable(v0, 1, 3, 2), Jet::variable(v1, 2, 3, 2)};
    std::vector<Jet> out(1), work;
    t.eval<Jet>(x, v, out, work);
    const std::vector<double> xs{x0}, vs{v0, v1};
    const Variable vars[] = {xvar(0), vvar(0), vvar(1)};
    for (int i = 0; i < 3; ++i) {
        Expr di = differentiate(f, vars[i]);
        CHECK(rel_close(out[0].d(i), eval(di, xs, vs), 1e-13));
        for (int j = 0; j < 3; ++j)
            CHECK(rel_close(out[0].dd(i, j), eval(differentiate(di, vars[j]), xs, vs), 1e-12));
    }
}

TEST_CASE("compile cache is safe under concurrent use") {
    std::mt19937_64 rng(29);
    std::vector<Expr> exprs;
    for (int i = 0; i < 32; ++i) exprs.push_back(random_expr(rng, 4));
    std::vector<double> results(4 * exprs.size());
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&, t] {
            for (std::size_t i = 0; i < exprs.size(); ++i) {
                Bindings b{{xvar(0), 0.1}, {xvar(1), 0.2}, {vvar(0), 0.3}, {vvar(1), 0.4}};
                results[t * exprs.size() + i] = compile_and_evaluate(differentiate(exprs[i], vvar(0)), b);
            }
        });
    for (auto& th : threads) th.join();
    for (std::size_t i = 0; i < exprs.size(); ++i)
        for (int t = 1; t < 4; ++t) CHECK(results[t * exprs.size() + i] == results[i]);
}
