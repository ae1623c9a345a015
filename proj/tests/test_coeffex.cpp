#include "doctest.h"

#include "homogenize/coeffex.hpp"
#include "homogenize/error.hpp"

#include <cmath>
#include <map>
#include <random>
#include <thread>

using namespace homog::coeffex;

namespace {

double ev(const std::string& src, const std::map<std::string, double>& env = {}) {
    auto e = parse(src);
    REQUIRE_MESSAGE(e.ok(), src << ": " << (e.ok() ? "" : describe(e.error())));
    auto r = eval(*e, env);
    REQUIRE_MESSAGE(r.ok(), src << ": " << (r.ok() ? "" : describe(r.error())));
    return *r;
}

struct Golden {
    const char* src;
    std::map<std::string, double> env;
    double value;
};

// Values: hand-forced, or evaluated once by an independent double-precision
// scalar evaluation and frozen.
const std::vector<Golden> kGolden = {
    {"5", {}, 5.0},
    {"1+2*3", {}, 7.0},
    {"2+tanh(x1)", {{"x1", 0.0}}, 2.0},
    {"x1*x2_1", {{"x1", 2.0}, {"x2_1", 3.0}}, 6.0},
    {"min(1, exp(x1))", {{"x1", -1.0}}, 0.36787944117144233},
    {"2^3^2", {}, 512.0},
    {"-2^2", {}, -4.0},
    {"(-2)^2", {}, 4.0},
    {"2^-1", {}, 0.5},
    {"8/4/2", {}, 1.0},
    {"10-4-3", {}, 3.0},
    {"2*3+4*5", {}, 26.0},
    {"2*(3+4)*5", {}, 70.0},
    {"-x1-y", {{"x1", 1.5}, {"y", 2.0}}, -3.5},
    {"--3", {}, 3.0},
    {"abs(-2.5)+sqrt(16)", {}, 6.5},
    {"max(x1, y) - min(x1, y)", {{"x1", -1.0}, {"y", 4.0}}, 5.0},
    {"sin(x1)^2 + cos(x1)^2", {{"x1", 0.7}}, 1.0},
    {"tanh(x1)*cos(x2_1) - y + 0.5*z_1", {{"x1", 0.3}, {"x2_1", -1.2}, {"y", 0.4}, {"z_1", 2.0}}, 0.7055593840986919},
    {"sqrt(2/(2+tanh(x1)))", {{"x1", 1.0}}, 0.8510107974089762},
    {"exp(-x1^2 - x2_1^2)", {{"x1", 0.5}, {"x2_1", -0.25}}, 0.7316156289466418},
    {"1.5e2*t", {{"t", 0.5}}, 75.0},
    {"2*x2_2 + z_0*z_3", {{"x2_2", 1.25}, {"z_0", -2.0}, {"z_3", 0.5}}, 1.5},
    {"3 - 2 * -1", {}, 5.0},
};

Expr random_expr(std::mt19937_64& gen, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
    const int kind = pick(gen);
    if (kind == 0) {
        std::uniform_int_distribution<int> mant(0, 4000);
        std::uniform_int_distribution<int> expo(-3, 3);
        return Expr::literal(mant(gen) * std::pow(10.0, expo(gen)));
    }
    if (kind == 1) {
        const int slots[] = {slot::x1, slot::x2(1), slot::x2(2), slot::y, slot::z(0), slot::z(1), slot::t};
        return Expr::variable(slots[std::uniform_int_distribution<int>(0, 6)(gen)]);
    }
    if (kind == 2) return Expr::negate(random_expr(gen, depth - 1));
    if (kind <= 7) {
        const Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow};
        return Expr::binary(ops[kind - 3], random_expr(gen, depth - 1), random_expr(gen, depth - 1));
    }
    const Func fn = static_cast<Func>(std::uniform_int_distribution<int>(0, 7)(gen));
    std::vector<Expr> args;
    for (int i = 0; i < func_arity(fn); ++i) args.push_back(random_expr(gen, depth - 1));
    return Expr::call(fn, args);
}

}  // namespace

TEST_CASE("golden precedence suite") {
    REQUIRE(kGolden.size() >= 20);
    for (const auto& g : kGolden) {
        CAPTURE(g.src);
        CHECK(ev(g.src, g.env) == g.value);
    }
}

TEST_CASE("literal parses to a literal node") {
    auto e = parse("5");
    REQUIRE(e.ok());
    REQUIRE(e->nodes().size() == 1);
    CHECK(e->nodes()[0].op == Op::Literal);
    CHECK(e->nodes()[0].value == 5.0);
}

TEST_CASE("associativity") {
    CHECK_FALSE(parse("a").ok());
    CHECK(parse("2^3^2").value() == parse("2^(3^2)").value());
    CHECK(parse("1-2-3").value() == parse("(1-2)-3").value());
    CHECK(parse("-x1^2").value() == parse("-(x1^2)").value());
}

TEST_CASE("parse errors carry kind and offset") {
    auto e1 = parse("1 + * 2");
    REQUIRE_FALSE(e1.ok());
    CHECK(e1.error().code == ErrorCode::Syntax);
    CHECK(e1.error().offset == 4);

    auto e2 = parse("foo(1)");
    REQUIRE_FALSE(e2.ok());
    CHECK(e2.error().code == ErrorCode::UnknownIdentifier);
    CHECK(e2.error().offset == 0);

    auto e3 = parse("x1 + y", space_vars(1));
    REQUIRE_FALSE(e3.ok());
    CHECK(e3.error().code == ErrorCode::DisallowedVariable);
    CHECK(e3.error().offset == 5);

    auto e4 = parse("min(1)");
    REQUIRE_FALSE(e4.ok());
    CHECK(e4.error().code == ErrorCode::Arity);

    auto e5 = parse("sin(1, 2)");
    REQUIRE_FALSE(e5.ok());
    CHECK(e5.error().code == ErrorCode::Arity);

    CHECK_FALSE(parse("").ok());
    CHECK_FALSE(parse("(1+2").ok());
    CHECK_FALSE(parse("1 2").ok());
    CHECK_FALSE(parse("x2_4").ok());
}

TEST_CASE("domain errors are values") {
    auto e = parse("sqrt(x1)");
    REQUIRE(e.ok());
    auto r = eval(*e, {{"x1", -1.0}});
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().code == ErrorCode::Domain);

    auto d = eval(parse("1/(x1-x1)").value(), {{"x1", 2.0}});
    REQUIRE_FALSE(d.ok());
    CHECK(d.error().code == ErrorCode::Domain);

    auto o = eval(parse("exp(x1)").value(), {{"x1", 1000.0}});
    REQUIRE_FALSE(o.ok());
    CHECK(o.error().code == ErrorCode::Domain);

    auto m = eval(parse("x1 + y").value(), {{"x1", 1.0}});
    CHECK_FALSE(m.ok());

    CHECK_THROWS_AS(eval_or_throw(parse("sqrt(-1)").value(), Env{}), homog::Error);
    CHECK_THROWS_AS(parse_or_throw("1+", all_vars(), "f"), homog::Error);
}

TEST_CASE("unicode minus is accepted") { CHECK(ev("3 \xE2\x88\x92 1") == 2.0); }

TEST_CASE("round trip on generated trees") {
    std::mt19937_64 gen(20240611);
    for (int i = 0; i < 2000; ++i) {
        const Expr e = random_expr(gen, 5);
        const std::string text = e.print();
        auto back = parse(text);
        REQUIRE_MESSAGE(back.ok(), text);
        CHECK_MESSAGE(back.value() == e, text << " reprinted as " << back->print());
    }
}

TEST_CASE("eval is pure and thread-safe") {
    const Expr e = parse("tanh(x1)*cos(x2_1) - y + 0.5*z_1 + sqrt(2/(2+sin(x1)))").value();
    Env env{};
    env[slot::x1] = 0.37;
    env[slot::x2(1)] = -1.1;
    env[slot::y] = 0.2;
    env[slot::z(1)] = 3.0;
    const double ref = e.eval(env).value();
    std::vector<double> seen(4, 0.0);
    std::vector<std::thread> pool;
    for (int w = 0; w < 4; ++w) {
        pool.emplace_back([&, w] {
            double acc = 0.0;
            for (int i = 0; i < 10000; ++i) acc = e.eval(env).value();
            seen[w] = acc;
        });
    }
    for (auto& t : pool) t.join();
    for (double v : seen) CHECK(v == ref);
}

TEST_CASE("variables and scopes") {
    const Expr e = parse("x1 + x2_1*y - z_0").value();
    CHECK(e.uses(slot::x1));
    CHECK(e.uses(slot::y));
    CHECK_FALSE(e.uses(slot::t));
    CHECK(parse("x1 + x2_1*y - z_0", generator_vars(1)).ok());
    CHECK_FALSE(parse("z_2", generator_vars(1)).ok());
    CHECK(slot_from_name("z_3").value() == slot::z(3));
    CHECK_FALSE(slot_from_name("w").has_value());
}
