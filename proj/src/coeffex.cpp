#include "homogenize/coeffex.hpp"

#include "homogenize/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>

namespace homog::coeffex {

namespace {

constexpr std::array<std::string_view, 8> kFuncNames = {"sin", "cos", "tanh", "exp",
                                                        "sqrt", "abs", "min", "max"};

int precedence(Op op) {
    switch (op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        default: return 5;
    }
}

}  // namespace

std::string slot_name(int s) {
    if (s == slot::x1) return "x1";
    if (s >= 1 && s <= kMaxSlowDim) return "x2_" + std::to_string(s);
    if (s == slot::y) return "y";
    if (s >= slot::z(0) && s <= slot::z(kMaxSlowDim)) return "z_" + std::to_string(s - slot::z(0));
    if (s == slot::t) return "t";
    return "?";
}

std::optional<int> slot_from_name(std::string_view name) {
    for (int s = 0; s < kSlotCount; ++s) {
        if (slot_name(s) == name) return s;
    }
    return std::nullopt;
}

VarSet space_vars(int d) {
    VarSet v;
    v.set(slot::x1);
    for (int i = 1; i <= d && i <= kMaxSlowDim; ++i) v.set(static_cast<std::size_t>(slot::x2(i)));
    return v;
}

VarSet generator_vars(int d) {
    VarSet v = space_vars(d);
    v.set(slot::y);
    for (int j = 0; j <= d && j <= kMaxSlowDim; ++j) v.set(static_cast<std::size_t>(slot::z(j)));
    return v;
}

VarSet all_vars() {
    VarSet v;
    v.set();
    return v;
}

std::string describe(const ExprError& e) {
    std::string kind;
    switch (e.code) {
        case ErrorCode::Syntax: kind = "syntax error"; break;
        case ErrorCode::UnknownIdentifier: kind = "unknown identifier"; break;
        case ErrorCode::DisallowedVariable: kind = "variable not allowed here"; break;
        case ErrorCode::Arity: kind = "wrong number of arguments"; break;
        case ErrorCode::Domain: kind = "domain error"; break;
    }
    if (e.code == ErrorCode::Domain) return kind + ": " + e.message;
    return kind + " at byte " + std::to_string(e.offset) + ": " + e.message;
}

std::string_view func_name(Func f) { return kFuncNames[static_cast<std::size_t>(f)]; }

int func_arity(Func f) { return (f == Func::Min || f == Func::Max) ? 2 : 1; }

// ---------------------------------------------------------------------------

struct Expr::Impl {
    std::vector<Node> nodes;
    int root = 0;
    // Postfix program for the evaluator; indices into `nodes`.
    std::vector<int> program;
    int max_depth = 1;
    VarSet vars;
};

Expr Expr::from_nodes(std::vector<Node> nodes, int root) {
    auto impl = std::make_shared<Impl>();
    impl->nodes = std::move(nodes);
    impl->root = root;

    // Post-order traversal; stack depth tracked alongside.
    int depth = 0;
    int max_depth = 0;
    auto emit = [&](auto&& self, int idx) -> void {
        const Node& n = impl->nodes[static_cast<std::size_t>(idx)];
        if (n.lhs >= 0) self(self, n.lhs);
        if (n.rhs >= 0) self(self, n.rhs);
        impl->program.push_back(idx);
        const int arity = (n.lhs >= 0 ? 1 : 0) + (n.rhs >= 0 ? 1 : 0);
        depth += 1 - arity;
        max_depth = std::max(max_depth, depth);
        if (n.op == Op::Variable) impl->vars.set(static_cast<std::size_t>(n.slot));
    };
    emit(emit, root);
    impl->max_depth = std::max(1, max_depth);
    return Expr(std::shared_ptr<const Impl>(std::move(impl)));
}

Expr::Expr() : Expr(literal(0.0)) {}

Expr Expr::literal(double v) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite literal");
    return from_nodes({Node{Op::Literal, Func::Sin, -1, v, -1, -1}}, 0);
}

Expr Expr::variable(int s) {
    if (s < 0 || s >= kSlotCount) throw Error(ErrorKind::InvalidArgument, "bad variable slot");
    return from_nodes({Node{Op::Variable, Func::Sin, s, 0.0, -1, -1}}, 0);
}

namespace {

// Append the nodes of `e` to `out`, returning the index of its root.
int splice(std::vector<Expr::Node>& out, const Expr& e) {
    const int base = static_cast<int>(out.size());
    for (Expr::Node n : e.nodes()) {
        if (n.lhs >= 0) n.lhs += base;
        if (n.rhs >= 0) n.rhs += base;
        out.push_back(n);
    }
    return base + e.root();
}

}  // namespace

Expr Expr::negate(const Expr& e) {
    std::vector<Node> nodes;
    const int a = splice(nodes, e);
    nodes.push_back(Node{Op::Neg, Func::Sin, -1, 0.0, a, -1});
    return from_nodes(std::move(nodes), static_cast<int>(nodes.size()) - 1);
}

Expr Expr::binary(Op op, const Expr& lhs, const Expr& rhs) {
    if (op != Op::Add && op != Op::Sub && op != Op::Mul && op != Op::Div && op != Op::Pow) {
        throw Error(ErrorKind::InvalidArgument, "not a binary operator");
    }
    std::vector<Node> nodes;
    const int a = splice(nodes, lhs);
    const int b = splice(nodes, rhs);
    nodes.push_back(Node{op, Func::Sin, -1, 0.0, a, b});
    return from_nodes(std::move(nodes), static_cast<int>(nodes.size()) - 1);
}

Expr Expr::call(Func fn, const std::vector<Expr>& args) {
    if (static_cast<int>(args.size()) != func_arity(fn)) {
        throw Error(ErrorKind::InvalidArgument, "wrong arity for " + std::string(func_name(fn)));
    }
    std::vector<Node> nodes;
    const int a = splice(nodes, args[0]);
    const int b = args.size() > 1 ? splice(nodes, args[1]) : -1;
    nodes.push_back(Node{Op::Call, fn, -1, 0.0, a, b});
    return from_nodes(std::move(nodes), static_cast<int>(nodes.size()) - 1);
}

const std::vector<Expr::Node>& Expr::nodes() const { return impl_->nodes; }
int Expr::root() const { return impl_->root; }
VarSet Expr::variables() const { return impl_->vars; }

Result<double> Expr::eval(const Env& env) const {
    constexpr int kInline = 32;
    std::array<double, kInline> inline_stack;
    std::vector<double> heap_stack;
    double* stack = inline_stack.data();
    if (impl_->max_depth > kInline) {
        heap_stack.resize(static_cast<std::size_t>(impl_->max_depth));
        stack = heap_stack.data();
    }
    int sp = 0;
    const Node* nodes = impl_->nodes.data();
    for (int idx : impl_->program) {
        const Node& n = nodes[idx];
        switch (n.op) {
            case Op::Literal: stack[sp++] = n.value; break;
            case Op::Variable: stack[sp++] = env[static_cast<std::size_t>(n.slot)]; break;
            case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
            case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
            case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
            case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
            case Op::Div:
                --sp;
                if (stack[sp] == 0.0) return ExprError{ErrorCode::Domain, 0, "division by zero"};
                stack[sp - 1] /= stack[sp];
                break;
            case Op::Pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
            case Op::Call: {
                double& a = stack[sp - (n.rhs >= 0 ? 2 : 1)];
                switch (n.fn) {
                    case Func::Sin: a = std::sin(a); break;
                    case Func::Cos: a = std::cos(a); break;
                    case Func::Tanh: a = std::tanh(a); break;
                    case Func::Exp: a = std::exp(a); break;
                    case Func::Sqrt:
                        if (a < 0.0) return ExprError{ErrorCode::Domain, 0, "sqrt of negative value"};
                        a = std::sqrt(a);
                        break;
                    case Func::Abs: a = std::fabs(a); break;
                    case Func::Min: a = std::min(a, stack[sp - 1]); --sp; break;
                    case Func::Max: a = std::max(a, stack[sp - 1]); --sp; break;
                }
                break;
            }
        }
    }
    const double out = stack[0];
    if (!std::isfinite(out)) return ExprError{ErrorCode::Domain, 0, "non-finite result"};
    return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string format_literal(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (v < 0.0) return "(" + s + ")";
    return s;
}

void print_node(const std::vector<Expr::Node>& nodes, int idx, std::string& out) {
    const Expr::Node& n = nodes[static_cast<std::size_t>(idx)];
    auto child = [&](int c, bool paren) {
        if (paren) out += '(';
        print_node(nodes, c, out);
        if (paren) out += ')';
    };
    auto prec_of = [&](int c) { return precedence(nodes[static_cast<std::size_t>(c)].op); };
    switch (n.op) {
        case Op::Literal: out += format_literal(n.value); break;
        case Op::Variable: out += slot_name(n.slot); break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: {
            const int p = precedence(n.op);
            child(n.lhs, prec_of(n.lhs) < p);
            out += n.op == Op::Add ? "+" : n.op == Op::Sub ? "-" : n.op == Op::Mul ? "*" : "/";
            child(n.rhs, prec_of(n.rhs) <= p);
            break;
        }
        case Op::Neg:
            out += '-';
            child(n.lhs, prec_of(n.lhs) < 3);
            break;
        case Op::Pow:
            // A literal base is printed bare only when it is non-negative.
            child(n.lhs, prec_of(n.lhs) < 5);
            out += '^';
            child(n.rhs, prec_of(n.rhs) < 3);
            break;
        case Op::Call:
            out += func_name(n.fn);
            out += '(';
            print_node(nodes, n.lhs, out);
            if (n.rhs >= 0) {
                out += ',';
                print_node(nodes, n.rhs, out);
            }
            out += ')';
            break;
    }
}

bool equal_nodes(const std::vector<Expr::Node>& an, int a, const std::vector<Expr::Node>& bn, int b) {
    const auto& x = an[static_cast<std::size_t>(a)];
    const auto& y = bn[static_cast<std::size_t>(b)];
    if (x.op != y.op) return false;
    switch (x.op) {
        case Op::Literal: return x.value == y.value;
        case Op::Variable: return x.slot == y.slot;
        case Op::Call:
            if (x.fn != y.fn) return false;
            break;
        default: break;
    }
    if ((x.lhs >= 0) != (y.lhs >= 0) || (x.rhs >= 0) != (y.rhs >= 0)) return false;
    if (x.lhs >= 0 && !equal_nodes(an, x.lhs, bn, y.lhs)) return false;
    if (x.rhs >= 0 && !equal_nodes(an, x.rhs, bn, y.rhs)) return false;
    return true;
}

}  // namespace

std::string Expr::print() const {
    std::string out;
    print_node(impl_->nodes, impl_->root, out);
    return out;
}

bool operator==(const Expr& a, const Expr& b) {
    return equal_nodes(a.impl_->nodes, a.impl_->root, b.impl_->nodes, b.impl_->root);
}

// ---------------------------------------------------------------------------
// Parsing

class Parser {
public:
    Parser(std::string_view src, const VarSet& allowed) : src_(src), allowed_(allowed) {}

    Result<Expr> run() {
        skip_ws();
        if (pos_ >= src_.size()) return fail(ErrorCode::Syntax, "empty expression");
        int root = expr();
        if (err_) return *err_;
        skip_ws();
        if (pos_ < src_.size()) return fail(ErrorCode::Syntax, "unexpected trailing input");
        return Expr::from_nodes(std::move(nodes_), root);
    }

private:
    ExprError fail(ErrorCode code, std::string msg) {
        if (!err_) err_ = ExprError{code, pos_, std::move(msg)};
        return *err_;
    }
    ExprError fail_at(ErrorCode code, std::size_t at, std::string msg) {
        if (!err_) err_ = ExprError{code, at, std::move(msg)};
        return *err_;
    }

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                      src_[pos_] == '\n' || src_[pos_] == '\r')) {
            ++pos_;
        }
    }

    // Accepts ASCII '-' and U+2212 (minus sign) for subtraction/negation.
    bool peek_minus(std::size_t* width) const {
        if (pos_ < src_.size() && src_[pos_] == '-') {
            *width = 1;
            return true;
        }
        if (src_.compare(pos_, 3, "\xE2\x88\x92") == 0) {
            *width = 3;
            return true;
        }
        return false;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int push(Expr::Node n) {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    int expr() {
        int lhs = term();
        while (!err_) {
            skip_ws();
            std::size_t w = 0;
            Op op;
            if (pos_ < src_.size() && src_[pos_] == '+') {
                op = Op::Add;
                w = 1;
            } else if (peek_minus(&w)) {
                op = Op::Sub;
            } else {
                break;
            }
            pos_ += w;
            int rhs = term();
            lhs = push(Expr::Node{op, Func::Sin, -1, 0.0, lhs, rhs});
        }
        return lhs;
    }

    int term() {
        int lhs = unary();
        while (!err_) {
            skip_ws();
            if (pos_ >= src_.size() || (src_[pos_] != '*' && src_[pos_] != '/')) break;
            Op op = src_[pos_] == '*' ? Op::Mul : Op::Div;
            ++pos_;
            int rhs = unary();
            lhs = push(Expr::Node{op, Func::Sin, -1, 0.0, lhs, rhs});
        }
        return lhs;
    }

    int unary() {
        skip_ws();
        std::size_t w = 0;
        if (peek_minus(&w)) {
            pos_ += w;
            int a = unary();
            return push(Expr::Node{Op::Neg, Func::Sin, -1, 0.0, a, -1});
        }
        return power();
    }

    int power() {
        int base = primary();
        if (err_) return base;
        if (accept('^')) {
            int ex = unary();
            return push(Expr::Node{Op::Pow, Func::Sin, -1, 0.0, base, ex});
        }
        return base;
    }

    int primary() {
        skip_ws();
        if (err_) return 0;
        if (pos_ >= src_.size()) {
            fail(ErrorCode::Syntax, "unexpected end of input");
            return 0;
        }
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            int inner = expr();
            if (err_) return inner;
            if (!accept(')')) fail(ErrorCode::Syntax, "expected ')'");
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail(ErrorCode::Syntax, std::string("unexpected character '") + c + "'");
        return 0;
    }

    int number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t nd = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            nd += digits();
        }
        if (nd == 0) {
            fail_at(ErrorCode::Syntax, start, "malformed number");
            return 0;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;  // not an exponent; leave 'e' for the caller
        }
        std::string text(src_.substr(start, pos_ - start));
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size() || !std::isfinite(v)) {
            fail_at(ErrorCode::Syntax, start, "malformed number '" + text + "'");
            return 0;
        }
        return push(Expr::Node{Op::Literal, Func::Sin, -1, v, -1, -1});
    }

    int identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);
        skip_ws();
        const bool is_call = pos_ < src_.size() && src_[pos_] == '(';
        if (is_call) {
            auto it = std::find(kFuncNames.begin(), kFuncNames.end(), name);
            if (it == kFuncNames.end()) {
                fail_at(ErrorCode::UnknownIdentifier, start, "unknown function '" + std::string(name) + "'");
                return 0;
            }
            const Func fn = static_cast<Func>(it - kFuncNames.begin());
            ++pos_;
            std::vector<int> args;
            skip_ws();
            if (!accept(')')) {
                do {
                    args.push_back(expr());
                    if (err_) return 0;
                } while (accept(','));
                if (!accept(')')) {
                    fail(ErrorCode::Syntax, "expected ')' after arguments");
                    return 0;
                }
            }
            if (static_cast<int>(args.size()) != func_arity(fn)) {
                fail_at(ErrorCode::Arity, start,
                        std::string(name) + " takes " + std::to_string(func_arity(fn)) +
                            " argument(s), got " + std::to_string(args.size()));
                return 0;
            }
            return push(Expr::Node{Op::Call, fn, -1, 0.0, args[0], args.size() > 1 ? args[1] : -1});
        }
        auto s = slot_from_name(name);
        if (!s) {
            fail_at(ErrorCode::UnknownIdentifier, start, "unknown identifier '" + std::string(name) + "'");
            return 0;
        }
        if (!allowed_.test(static_cast<std::size_t>(*s))) {
            fail_at(ErrorCode::DisallowedVariable, start,
                    "variable '" + std::string(name) + "' is not allowed in this coefficient");
            return 0;
        }
        return push(Expr::Node{Op::Variable, Func::Sin, *s, 0.0, -1, -1});
    }

    std::string_view src_;
    VarSet allowed_;
    std::size_t pos_ = 0;
    std::vector<Expr::Node> nodes_;
    std::optional<ExprError> err_;
};

Result<Expr> parse(std::string_view source, const VarSet& allowed) {
    return Parser(source, allowed).run();
}

Result<double> eval(const Expr& e, const std::map<std::string, double>& env) {
    Env slots{};
    const VarSet used = e.variables();
    for (int s = 0; s < kSlotCount; ++s) {
        if (!used.test(static_cast<std::size_t>(s))) continue;
        auto it = env.find(slot_name(s));
        if (it == env.end()) {
            return ExprError{ErrorCode::Domain, 0, "variable '" + slot_name(s) + "' is unbound"};
        }
        slots[static_cast<std::size_t>(s)] = it->second;
    }
    return e.eval(slots);
}

Expr parse_or_throw(std::string_view source, const VarSet& allowed, std::string_view what) {
    auto r = parse(source, allowed);
    if (!r) throw Error(ErrorKind::Config, std::string(what) + ": " + describe(r.error()));
    return r.value();
}

double eval_or_throw(const Expr& e, const Env& env) {
    auto r = e.eval(env);
    if (!r) throw Error(ErrorKind::Domain, describe(r.error()) + " in '" + e.print() + "'");
    return *r;
}

}  // namespace homog::coeffex
