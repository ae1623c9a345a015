#pragma once

// Coefficient mini-language: arithmetic expressions over a fixed set of
// variables, used to write problem coefficients in config files.

#include <array>
#include <bitset>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace homog::coeffex {

/// Largest supported slow dimension d.
inline constexpr int kMaxSlowDim = 3;

/// Variable slots. The layout is fixed so evaluation environments are plain
/// arrays: x1, x2_1..x2_3, y, z_0..z_3, t.
namespace slot {
inline constexpr int x1 = 0;
inline constexpr int x2(int i) { return i; }  // i in 1..kMaxSlowDim
inline constexpr int y = kMaxSlowDim + 1;
inline constexpr int z(int j) { return kMaxSlowDim + 2 + j; }  // j in 0..kMaxSlowDim
inline constexpr int t = 2 * kMaxSlowDim + 3;
}  // namespace slot
inline constexpr int kSlotCount = 2 * kMaxSlowDim + 4;

using VarSet = std::bitset<kSlotCount>;
using Env = std::array<double, kSlotCount>;

/// Name of a slot ("x1", "x2_1", "z_0", ...).
std::string slot_name(int s);
/// Inverse of slot_name; nullopt for anything that is not a variable.
std::optional<int> slot_from_name(std::string_view name);

/// Variables legal for a coefficient over (x1, x2) with slow dimension d.
VarSet space_vars(int d);
/// Variables legal for the generator f: (x1, x2, y, z_0..z_d).
VarSet generator_vars(int d);
/// Every variable the language knows about.
VarSet all_vars();

enum class ErrorCode { Syntax, UnknownIdentifier, DisallowedVariable, Arity, Domain };

struct ExprError {
    ErrorCode code;
    std::size_t offset = 0;  // byte offset into the source (0 for eval errors)
    std::string message;
};

std::string describe(const ExprError& e);

/// Value-or-error carrier; errors never abort the process.
template <typename T>
class Result {
public:
    Result(T value) : v_(std::move(value)) {}
    Result(ExprError err) : v_(std::move(err)) {}

    bool ok() const noexcept { return v_.index() == 0; }
    explicit operator bool() const noexcept { return ok(); }
    const T& value() const& { return std::get<0>(v_); }
    T&& value() && { return std::get<0>(std::move(v_)); }
    const T& operator*() const& { return value(); }
    const T* operator->() const { return &std::get<0>(v_); }
    const ExprError& error() const { return std::get<1>(v_); }

private:
    std::variant<T, ExprError> v_;
};

enum class Op : unsigned char { Literal, Variable, Add, Sub, Mul, Div, Pow, Neg, Call };
enum class Func : unsigned char { Sin, Cos, Tanh, Exp, Sqrt, Abs, Min, Max };

std::string_view func_name(Func f);
int func_arity(Func f);

/// Immutable expression tree. Copies share the underlying storage, so an
/// Expr can be handed to any number of concurrent evaluators.
class Expr {
public:
    struct Node {
        Op op;
        Func fn = Func::Sin;
        int slot = -1;
        double value = 0.0;
        int lhs = -1;
        int rhs = -1;
    };

    Expr();  // the literal 0

    static Expr literal(double v);
    static Expr variable(int slot);
    static Expr negate(const Expr& e);
    static Expr binary(Op op, const Expr& lhs, const Expr& rhs);
    static Expr call(Func fn, const std::vector<Expr>& args);

    /// Evaluate against a full slot environment. Domain errors (negative
    /// sqrt, division by zero, non-finite result) come back as errors.
    Result<double> eval(const Env& env) const;

    /// Variables that occur in the expression.
    VarSet variables() const;
    bool uses(int s) const { return variables().test(static_cast<std::size_t>(s)); }

    /// Canonical text with minimal parentheses; parse(print()) reproduces
    /// the same tree.
    std::string print() const;

    /// Structural equality (same tree shape, operators, literals, slots).
    friend bool operator==(const Expr& a, const Expr& b);
    friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

    const std::vector<Node>& nodes() const;
    int root() const;

private:
    struct Impl;
    explicit Expr(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    static Expr from_nodes(std::vector<Node> nodes, int root);
    std::shared_ptr<const Impl> impl_;
    friend class Parser;
};

/// Parse `source`, accepting only variables in `allowed`.
Result<Expr> parse(std::string_view source, const VarSet& allowed = all_vars());

/// Evaluate with a name -> value map. Variables missing from the map are an
/// error.
Result<double> eval(const Expr& e, const std::map<std::string, double>& env);

/// Parse or throw homog::Error(Config); used by config loaders.
Expr parse_or_throw(std::string_view source, const VarSet& allowed, std::string_view what);
/// Evaluate or throw homog::Error(Domain).
double eval_or_throw(const Expr& e, const Env& env);

}  // namespace homog::coeffex
