/// @file expr.hpp
/// @brief Hash-consed expression DAG over position variables x1..xn and
///        velocity variables v1..vn: parsing, differentiation, simplification.
#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lfg/errors.hpp"

namespace lfg {

enum class Role : std::uint8_t { Position, Velocity };

/// Variable identifier; `index` is zero-based (x1 has index 0).
struct Variable {
    Role role = Role::Position;
    int index = 0;

    auto operator<=>(const Variable&) const = default;
    std::string name() const;
};

inline Variable xvar(int i) { return {Role::Position, i}; }
inline Variable vvar(int i) { return {Role::Velocity, i}; }

enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sqrt, Exp, Log, Sin, Cos };

struct Node {
    Op op = Op::Const;
    std::uint32_t a = 0;  ///< first child id
    std::uint32_t b = 0;  ///< second child id
    double value = 0.0;   ///< payload for Const
    std::int32_t num = 0; ///< exponent numerator for Pow
    std::int32_t den = 1; ///< exponent denominator for Pow (> 0, reduced)
    Variable var{};       ///< payload for Var
};

/// Handle to an interned node. Children always carry smaller ids than their
/// parents, so ascending id order is a topological order.
class Expr {
public:
    Expr();
    static Expr constant(double c);
    static Expr variable(Variable v);
    static Expr from_id(std::uint32_t id) { Expr e; e.id_ = id; return e; }

    std::uint32_t id() const { return id_; }
    const Node& node() const;
    Op op() const { return node().op; }
    Expr lhs() const { return from_id(node().a); }
    Expr rhs() const { return from_id(node().b); }

    bool is_constant() const { return op() == Op::Const; }
    bool is_constant(double c) const;
    double constant_value() const { return node().value; }

    /// Distinct nodes reachable from this root.
    std::size_t node_count() const;
    std::vector<Variable> free_variables() const;
    bool depends_on(Variable v) const;
    std::string to_string() const;

    friend bool operator==(Expr a, Expr b) { return a.id_ == b.id_; }

private:
    std::uint32_t id_ = 0;
};

/// Number of nodes interned so far (all threads).
std::size_t interned_node_count();

// Unrewritten constructors: the node is interned exactly as requested.
namespace raw {
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr neg(Expr a);
Expr pow(Expr a, int num, int den);
Expr sqrt(Expr a);
Expr exp(Expr a);
Expr log(Expr a);
Expr sin(Expr a);
Expr cos(Expr a);
}  // namespace raw

// Rewriting constructors: constant folding, identity elimination and
// constant-coefficient merging applied locally.
Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr operator-(Expr a);
Expr operator*(double c, Expr b);
Expr operator+(Expr a, double c);
Expr pow(Expr a, int num, int den = 1);
Expr sqrt(Expr a);
Expr exp(Expr a);
Expr log(Expr a);
Expr sin(Expr a);
Expr cos(Expr a);

using Parameters = std::map<std::string, double, std::less<>>;

/// Parses the expression grammar; identifiers x<k>, v<k> (k >= 1) or
/// names from `params`, which are replaced by their values.
Expr parse(std::string_view source, const Parameters& params = {});

Expr differentiate(Expr e, Variable v);
Expr simplify(Expr e);
Expr substitute(Expr e, const std::map<Variable, Expr>& subs);

using Bindings = std::map<Variable, double>;

/// Memoized recursive evaluation; reference semantics for the tape.
double evaluate_recursive(Expr e, const Bindings& b);

}  // namespace lfg
