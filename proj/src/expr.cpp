/// @file expr.cpp
/// @brief Interning store, constructors, parser, differentiation.
#include "lfg/expr.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <unordered_map>

#include "lfg/scalar.hpp"

namespace lfg {

// ─── Interning store ──────────────────────────────────────────────────────────

namespace {

struct Key {
    Op op;
    std::uint32_t a, b;
    std::uint64_t bits;
    std::int32_t num, den;
    std::uint8_t role;
    std::int32_t index;
    bool operator==(const Key&) const = default;
};

struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&](std::uint64_t x) {
            h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        };
        mix(static_cast<std::uint64_t>(k.op));
        mix(k.a);
        mix(k.b);
        mix(k.bits);
        mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.num)));
        mix(static_cast<std::uint64_t>(k.den));
        mix(k.role);
        mix(static_cast<std::uint64_t>(k.index));
        return static_cast<std::size_t>(h);
    }
};

Key key_of(const Node& n) {
    return {n.op, n.a, n.b, std::bit_cast<std::uint64_t>(n.value), n.num, n.den,
            static_cast<std::uint8_t>(n.var.role), n.var.index};
}

class Store {
public:
    static constexpr std::uint32_t kBits = 12;
    static constexpr std::uint32_t kBlock = 1u << kBits;
    static constexpr std::uint32_t kMaxBlocks = 1u << 14;

    static Store& instance() {
        static Store s;
        return s;
    }

    const Node& at(std::uint32_t id) const {
        return blocks_[id >> kBits].load(std::memory_order_acquire)[id & (kBlock - 1)];
    }

    std::uint32_t intern(const Node& n) {
        const Key k = key_of(n);
        std::lock_guard lock(mu_);
        if (auto it = index_.find(k); it != index_.end()) return it->second;
        const std::uint32_t id = size_;
        const std::uint32_t blk = id >> kBits;
        if (blk >= kMaxBlocks) throw Error("expression store exhausted");
        Node* block = blocks_[blk].load(std::memory_order_relaxed);
        if (block == nullptr) {
            block = new Node[kBlock];
            blocks_[blk].store(block, std::memory_order_release);
        }
        block[id & (kBlock - 1)] = n;
        ++size_;
        index_.emplace(k, id);
        return id;
    }

    std::size_t size() {
        std::lock_guard lock(mu_);
        return size_;
    }

private:
    Store() : blocks_(new std::atomic<Node*>[kMaxBlocks]) {
        for (std::uint32_t i = 0; i < kMaxBlocks; ++i) blocks_[i].store(nullptr);
        Node zero;
        intern(zero);
    }

    std::unique_ptr<std::atomic<Node*>[]> blocks_;
    std::mutex mu_;
    std::unordered_map<Key, std::uint32_t, KeyHash> index_;
    std::uint32_t size_ = 0;
};

Expr make(const Node& n) { return Expr::from_id(Store::instance().intern(n)); }

Expr make_unary(Op op, Expr a) {
    Node n;
    n.op = op;
    n.a = a.id();
    return make(n);
}

Expr make_binary(Op op, Expr a, Expr b) {
    if ((op == Op::Add || op == Op::Mul) && b.id() < a.id()) std::swap(a, b);
    Node n;
    n.op = op;
    n.a = a.id();
    n.b = b.id();
    return make(n);
}

}  // namespace

std::size_t interned_node_count() { return Store::instance().size(); }

std::string Variable::name() const {
    return (role == Role::Position ? "x" : "v") + std::to_string(index + 1);
}

Expr::Expr() : id_(0) {}

Expr Expr::constant(double c) {
    Node n;
    n.op = Op::Const;
    n.value = (c == 0.0) ? 0.0 : c;
    return make(n);
}

Expr Expr::variable(Variable v) {
    Node n;
    n.op = Op::Var;
    n.var = v;
    return make(n);
}

const Node& Expr::node() const { return Store::instance().at(id_); }

bool Expr::is_constant(double c) const { return op() == Op::Const && node().value == c; }

namespace {

template <class F>
void visit_reachable(Expr root, F&& f) {
    std::vector<std::uint32_t> stack{root.id()};
    std::unordered_map<std::uint32_t, bool> seen;
    while (!stack.empty()) {
        const std::uint32_t id = stack.back();
        stack.pop_back();
        if (!seen.emplace(id, true).second) continue;
        const Expr e = Expr::from_id(id);
        f(e);
        switch (e.op()) {
            case Op::Const:
            case Op::Var: break;
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div: stack.push_back(e.node().a); stack.push_back(e.node().b); break;
            default: stack.push_back(e.node().a); break;
        }
    }
}

}  // namespace

std::size_t Expr::node_count() const {
    std::size_t n = 0;
    visit_reachable(*this, [&](Expr) { ++n; });
    return n;
}

std::vector<Variable> Expr::free_variables() const {
    std::set<Variable> vars;
    visit_reachable(*this, [&](Expr e) {
        if (e.op() == Op::Var) vars.insert(e.node().var);
    });
    return {vars.begin(), vars.end()};
}

bool Expr::depends_on(Variable v) const {
    bool found = false;
    visit_reachable(*this, [&](Expr e) {
        if (e.op() == Op::Var && e.node().var == v) found = true;
    });
    return found;
}

// ─── Printing ─────────────────────────────────────────────────────────────────

namespace {

int precedence(Expr e) {
    switch (e.op()) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        case Op::Const: return e.constant_value() < 0.0 ? 3 : 5;
        default: return 5;
    }
}

std::string format_number(double c) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, c);
    return std::string(buf, res.ptr);
}

void print(Expr e, std::string& out) {
    const Node& n = e.node();
    auto wrap = [&](Expr child, bool parens) {
        if (parens) out += '(';
        print(child, out);
        if (parens) out += ')';
    };
    switch (n.op) {
        case Op::Const: out += format_number(n.value); return;
        case Op::Var: out += n.var.name(); return;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: {
            const int p = precedence(e);
            const bool right_strict = n.op == Op::Sub || n.op == Op::Div;
            wrap(e.lhs(), precedence(e.lhs()) < p);
            out += n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? "*" : "/";
            const int pr = precedence(e.rhs());
            wrap(e.rhs(), pr < p || (right_strict && pr == p) || pr == 3);
            return;
        }
        case Op::Neg:
            out += '-';
            wrap(e.lhs(), precedence(e.lhs()) < 4);
            return;
        case Op::Pow:
            wrap(e.lhs(), precedence(e.lhs()) < 5);
            out += '^';
            if (n.den == 1 && n.num >= 0)
                out += std::to_string(n.num);
            else if (n.den == 1)
                out += "(" + std::to_string(n.num) + ")";
            else
                out += "(" + std::to_string(n.num) + "/" + std::to_string(n.den) + ")";
            return;
        case Op::Sqrt: out += "sqrt("; print(e.lhs(), out); out += ')'; return;
        case Op::Exp: out += "exp("; print(e.lhs(), out); out += ')'; return;
        case Op::Log: out += "log("; print(e.lhs(), out); out += ')'; return;
        case Op::Sin: out += "sin("; print(e.lhs(), out); out += ')'; return;
        case Op::Cos: out += "cos("; print(e.lhs(), out); out += ')'; return;
    }
}

}  // namespace

std::string Expr::to_string() const {
    std::string s;
    print(*this, s);
    return s;
}

// ─── Raw constructors ─────────────────────────────────────────────────────────

namespace raw {
Expr add(Expr a, Expr b) { return make_binary(Op::Add, a, b); }
Expr sub(Expr a, Expr b) { return make_binary(Op::Sub, a, b); }
Expr mul(Expr a, Expr b) { return make_binary(Op::Mul, a, b); }
Expr div(Expr a, Expr b) { return make_binary(Op::Div, a, b); }
Expr neg(Expr a) { return make_unary(Op::Neg, a); }
Expr pow(Expr a, int num, int den) {
    if (den == 0) throw Error("zero exponent denominator");
    if (den < 0) { num = -num; den = -den; }
    const int g = std::gcd(num, den);
    Node n;
    n.op = Op::Pow;
    n.a = a.id();
    n.num = num / (g ? g : 1);
    n.den = den / (g ? g : 1);
    return make(n);
}
Expr sqrt(Expr a) { return make_unary(Op::Sqrt, a); }
Expr exp(Expr a) { return make_unary(Op::Exp, a); }
Expr log(Expr a) { return make_unary(Op::Log, a); }
Expr sin(Expr a) { return make_unary(Op::Sin, a); }
Expr cos(Expr a) { return make_unary(Op::Cos, a); }
}  // namespace raw

// ─── Rewriting constructors ───────────────────────────────────────────────────

namespace {

bool exact_reciprocal(double c) {
    if (c == 0.0 || !std::isfinite(c)) return false;
    int e = 0;
    return std::frexp(std::abs(c), &e) == 0.5;
}

/// Splits c*x with a constant factor; returns false otherwise.
bool split_coefficient(Expr e, double& c, Expr& rest) {
    if (e.op() != Op::Mul) return false;
    if (e.lhs().is_constant()) { c = e.lhs().constant_value(); rest = e.rhs(); return true; }
    if (e.rhs().is_constant()) { c = e.rhs().constant_value(); rest = e.lhs(); return true; }
    return false;
}

Expr mk_neg(Expr a, bool merge);

Expr mk_add(Expr a, Expr b, bool) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.constant_value() + b.constant_value());
    if (a.is_constant(0.0)) return b;
    if (b.is_constant(0.0)) return a;
    return raw::add(a, b);
}

Expr mk_sub(Expr a, Expr b, bool merge) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.constant_value() - b.constant_value());
    if (b.is_constant(0.0)) return a;
    if (a.is_constant(0.0)) return mk_neg(b, merge);
    if (a == b) return Expr::constant(0.0);
    return raw::sub(a, b);
}

Expr mk_mul(Expr a, Expr b, bool merge) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.constant_value() * b.constant_value());
    if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
    if (a.is_constant(1.0)) return b;
    if (b.is_constant(1.0)) return a;
    if (a.is_constant(-1.0)) return mk_neg(b, merge);
    if (b.is_constant(-1.0)) return mk_neg(a, merge);
    if (merge) {
        if (b.is_constant()) std::swap(a, b);
        double c2 = 0.0;
        Expr rest;
        if (a.is_constant() && split_coefficient(b, c2, rest))
            return mk_mul(Expr::constant(a.constant_value() * c2), rest, merge);
    }
    return raw::mul(a, b);
}

Expr mk_div(Expr a, Expr b, bool merge) {
    if (a.is_constant() && b.is_constant() && b.constant_value() != 0.0)
        return Expr::constant(a.constant_value() / b.constant_value());
    if (a.is_constant(0.0)) return Expr::constant(0.0);
    if (b.is_constant(1.0)) return a;
    if (b.is_constant(-1.0)) return mk_neg(a, merge);
    if (a == b) return Expr::constant(1.0);
    if (merge && b.is_constant() && exact_reciprocal(b.constant_value())) {
        double c = 0.0;
        Expr rest;
        if (split_coefficient(a, c, rest)) return mk_mul(Expr::constant(c / b.constant_value()), rest, merge);
        if (a.op() == Op::Neg) return mk_mul(Expr::constant(-1.0 / b.constant_value()), a.lhs(), merge);
    }
    return raw::div(a, b);
}

Expr mk_neg(Expr a, bool merge) {
    if (a.is_constant()) return Expr::constant(-a.constant_value());
    if (a.op() == Op::Neg) return a.lhs();
    if (merge) {
        double c = 0.0;
        Expr rest;
        if (split_coefficient(a, c, rest)) return mk_mul(Expr::constant(-c), rest, merge);
    }
    return raw::neg(a);
}

Expr mk_pow(Expr a, int num, int den) {
    if (den < 0) { num = -num; den = -den; }
    const int g = std::gcd(num, den);
    if (g) { num /= g; den /= g; }
    if (num == 0) return Expr::constant(1.0);
    if (num == den) return a;
    if (num % 2 == 0 && den % 2 == 1) {
        if (a.op() == Op::Neg) return mk_pow(a.lhs(), num, den);
        if (a.op() == Op::Mul && a.lhs().is_constant(-1.0)) return mk_pow(a.rhs(), num, den);
        if (a.op() == Op::Mul && a.rhs().is_constant(-1.0)) return mk_pow(a.lhs(), num, den);
    }
    if (a.is_constant() && rpow_defined(a.constant_value(), num, den))
        return Expr::constant(rpow(a.constant_value(), num, den));
    return raw::pow(a, num, den);
}

Expr mk_unary(Op op, Expr a) {
    if (a.is_constant()) {
        const double c = a.constant_value();
        switch (op) {
            case Op::Sqrt: if (c >= 0.0) return Expr::constant(std::sqrt(c)); break;
            case Op::Exp: return Expr::constant(std::exp(c));
            case Op::Log: if (c > 0.0) return Expr::constant(std::log(c)); break;
            case Op::Sin: return Expr::constant(std::sin(c));
            case Op::Cos: return Expr::constant(std::cos(c));
            default: break;
        }
    }
    return make_unary(op, a);
}

}  // namespace

Expr operator+(Expr a, Expr b) { return mk_add(a, b, true); }
Expr operator-(Expr a, Expr b) { return mk_sub(a, b, true); }
Expr operator*(Expr a, Expr b) { return mk_mul(a, b, true); }
Expr operator/(Expr a, Expr b) { return mk_div(a, b, true); }
Expr operator-(Expr a) { return mk_neg(a, true); }
Expr operator*(double c, Expr b) { return Expr::constant(c) * b; }
Expr operator+(Expr a, double c) { return a + Expr::constant(c); }
Expr pow(Expr a, int num, int den) { return mk_pow(a, num, den); }
Expr sqrt(Expr a) { return mk_unary(Op::Sqrt, a); }
Expr exp(Expr a) { return mk_unary(Op::Exp, a); }
Expr log(Expr a) { return mk_unary(Op::Log, a); }
Expr sin(Expr a) { return mk_unary(Op::Sin, a); }
Expr cos(Expr a) { return mk_unary(Op::Cos, a); }

// ─── Parser ───────────────────────────────────────────────────────────────────

namespace {

class Parser {
public:
    Parser(std::string_view src, const Parameters& params) : s_(src), params_(params) {}

    Expr run() {
        Expr e = expr();
        skip();
        if (pos_ < s_.size()) fail({"operator", "end of input"});
        return e;
    }

private:
    std::string_view s_;
    const Parameters& params_;
    std::size_t pos_ = 0;

    void skip() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
            ++pos_;
    }
    char peek() {
        skip();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }
    std::string found() const {
        if (pos_ >= s_.size()) return "end of input";
        return "'" + std::string(1, s_[pos_]) + "'";
    }
    [[noreturn]] void fail(std::vector<std::string> expected) { throw SyntaxError(pos_, std::move(expected), found()); }

    static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

    Expr expr() {
        Expr e = term();
        for (char c = peek(); c == '+' || c == '-'; c = peek()) {
            ++pos_;
            Expr r = term();
            e = c == '+' ? raw::add(e, r) : raw::sub(e, r);
        }
        return e;
    }

    Expr term() {
        Expr e = factor();
        for (char c = peek(); c == '*' || c == '/'; c = peek()) {
            ++pos_;
            Expr r = factor();
            e = c == '*' ? raw::mul(e, r) : raw::div(e, r);
        }
        return e;
    }

    Expr factor() {
        bool negate = false;
        if (peek() == '-') {
            ++pos_;
            negate = true;
        }
        Expr e = atom();
        if (peek() == '^') {
            ++pos_;
            int num = 1, den = 1;
            rational(num, den);
            e = raw::pow(e, num, den);
        }
        return negate ? raw::neg(e) : e;
    }

    long integer() {
        skip();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) fail({"integer"});
        long value = 0;
        std::from_chars(s_.data() + start, s_.data() + pos_, value);
        return value;
    }

    void rational(int& num, int& den) {
        bool paren = false;
        if (peek() == '(') {
            ++pos_;
            paren = true;
        }
        bool negative = false;
        if (peek() == '-') {
            ++pos_;
            negative = true;
        }
        if (!std::isdigit(static_cast<unsigned char>(peek()))) fail({"integer", paren ? "'-'" : "'('"});
        num = static_cast<int>(integer());
        den = 1;
        if (paren && peek() == '/') {
            ++pos_;
            den = static_cast<int>(integer());
            if (den == 0) fail({"non-zero integer"});
        }
        if (negative) num = -num;
        if (paren) {
            if (peek() != ')') fail({"')'", "'/'"});
            ++pos_;
        }
    }

    Expr atom() {
        const char c = peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            if (peek() != ')') fail({"')'", "operator"});
            ++pos_;
            return e;
        }
        if (ident_start(c)) return identifier();
        fail({"number", "identifier", "'('", "'-'"});
    }

    Expr number() {
        const std::size_t start = pos_;
        double value = 0.0;
        auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), value);
        if (res.ec != std::errc()) fail({"number"});
        pos_ = static_cast<std::size_t>(res.ptr - s_.data());
        (void)start;
        return Expr::constant(value);
    }

    Expr identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
        const std::string name(s_.substr(start, pos_ - start));
        static const std::map<std::string, Op> funcs{
            {"sqrt", Op::Sqrt}, {"exp", Op::Exp}, {"log", Op::Log}, {"sin", Op::Sin}, {"cos", Op::Cos}};
        if (auto f = funcs.find(name); f != funcs.end() && peek() == '(') {
            ++pos_;
            Expr arg = expr();
            if (peek() != ')') fail({"')'", "operator"});
            ++pos_;
            return make_unary(f->second, arg);
        }
        if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'v') && name[1] >= '1' && name[1] <= '9' &&
            std::all_of(name.begin() + 1, name.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
            const int k = std::stoi(name.substr(1));
            return Expr::variable({name[0] == 'x' ? Role::Position : Role::Velocity, k - 1});
        }
        if (auto p = params_.find(name); p != params_.end()) return Expr::constant(p->second);
        throw UnknownVariable(start, name);
    }
};

}  // namespace

Expr parse(std::string_view source, const Parameters& params) { return Parser(source, params).run(); }

// ─── Differentiation ──────────────────────────────────────────────────────────

Expr differentiate(Expr root, Variable var) {
    std::unordered_map<std::uint32_t, Expr> memo;
    std::function<Expr(Expr)> d = [&](Expr e) -> Expr {
        if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
        const Node& n = e.node();
        Expr r;
        switch (n.op) {
            case Op::Const: r = Expr::constant(0.0); break;
            case Op::Var: r = Expr::constant(n.var == var ? 1.0 : 0.0); break;
            case Op::Add: r = d(e.lhs()) + d(e.rhs()); break;
            case Op::Sub: r = d(e.lhs()) - d(e.rhs()); break;
            case Op::Mul: r = d(e.lhs()) * e.rhs() + e.lhs() * d(e.rhs()); break;
            case Op::Div: {
                const Expr da = d(e.lhs()), db = d(e.rhs());
                r = db.is_constant(0.0) ? da / e.rhs() : (da - e * db) / e.rhs();
                break;
            }
            case Op::Neg: r = -d(e.lhs()); break;
            case Op::Pow: {
                const Expr da = d(e.lhs());
                if (da.is_constant(0.0)) { r = da; break; }
                const double coef = static_cast<double>(n.num) / static_cast<double>(n.den);
                r = (coef * pow(e.lhs(), n.num - n.den, n.den)) * da;
                break;
            }
            case Op::Sqrt: r = d(e.lhs()) / (2.0 * e); break;
            case Op::Exp: r = e * d(e.lhs()); break;
            case Op::Log: r = d(e.lhs()) / e.lhs(); break;
            case Op::Sin: r = cos(e.lhs()) * d(e.lhs()); break;
            case Op::Cos: r = -(sin(e.lhs()) * d(e.lhs())); break;
        }
        memo.emplace(e.id(), r);
        return r;
    };
    return d(root);
}

// ─── Simplification and substitution ──────────────────────────────────────────

namespace {

template <class Leaf>
Expr rebuild(Expr root, bool merge, Leaf&& leaf) {
    std::unordered_map<std::uint32_t, Expr> memo;
    std::function<Expr(Expr)> go = [&](Expr e) -> Expr {
        if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
        const Node& n = e.node();
        Expr r;
        switch (n.op) {
            case Op::Const:
            case Op::Var: r = leaf(e); break;
            case Op::Add: r = mk_add(go(e.lhs()), go(e.rhs()), merge); break;
            case Op::Sub: r = mk_sub(go(e.lhs()), go(e.rhs()), merge); break;
            case Op::Mul: r = mk_mul(go(e.lhs()), go(e.rhs()), merge); break;
            case Op::Div: r = mk_div(go(e.lhs()), go(e.rhs()), merge); break;
            case Op::Neg: r = mk_neg(go(e.lhs()), merge); break;
            case Op::Pow: r = mk_pow(go(e.lhs()), n.num, n.den); break;
            default: r = mk_unary(n.op, go(e.lhs())); break;
        }
        memo.emplace(e.id(), r);
        return r;
    };
    return go(root);
}

}  // namespace

Expr simplify(Expr e) {
    return rebuild(e, false, [](Expr leaf) { return leaf; });
}

Expr substitute(Expr e, const std::map<Variable, Expr>& subs) {
    return rebuild(e, true, [&](Expr leaf) {
        if (leaf.op() == Op::Var)
            if (auto it = subs.find(leaf.node().var); it != subs.end()) return it->second;
        return leaf;
    });
}

// ─── Reference evaluation ─────────────────────────────────────────────────────

double evaluate_recursive(Expr root, const Bindings& b) {
    std::unordered_map<std::uint32_t, double> memo;
    std::function<double(Expr)> go = [&](Expr e) -> double {
        if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
        const Node& n = e.node();
        auto bad = [&](const char* what) {
            throw DomainError(std::string(what) + " in node `" + e.to_string() + "`");
        };
        double r = 0.0;
        switch (n.op) {
            case Op::Const: r = n.value; break;
            case Op::Var: {
                auto it = b.find(n.var);
                if (it == b.end()) throw Error("unbound variable " + n.var.name());
                r = it->second;
                break;
            }
            case Op::Add: r = go(e.lhs()) + go(e.rhs()); break;
            case Op::Sub: r = go(e.lhs()) - go(e.rhs()); break;
            case Op::Mul: r = go(e.lhs()) * go(e.rhs()); break;
            case Op::Div: {
                const double a = go(e.lhs()), c = go(e.rhs());
                if (c == 0.0) bad("division by zero");
                r = a / c;
                break;
            }
            case Op::Neg: r = -go(e.lhs()); break;
            case Op::Pow: {
                const double a = go(e.lhs());
                if (!rpow_defined(a, n.num, n.den)) bad("power outside its domain");
                r = rpow(a, n.num, n.den);
                break;
            }
            case Op::Sqrt: {
                const double a = go(e.lhs());
                if (!(a >= 0.0)) bad("sqrt of negative argument");
                r = std::sqrt(a);
                break;
            }
            case Op::Exp: r = std::exp(go(e.lhs())); break;
            case Op::Log: {
                const double a = go(e.lhs());
                if (!(a > 0.0)) bad("log of non-positive argument");
                r = std::log(a);
                break;
            }
            case Op::Sin: r = std::sin(go(e.lhs())); break;
            case Op::Cos: r = std::cos(go(e.lhs())); break;
        }
        memo.emplace(e.id(), r);
        return r;
    };
    return go(root);
}

}  // namespace lfg
