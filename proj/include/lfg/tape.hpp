/// @file tape.hpp
/// @brief Flat SSA tapes compiled from expression DAGs.
#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lfg/expr.hpp"
#include "lfg/scalar.hpp"

namespace lfg {

struct Instr {
    Op op = Op::Const;
    std::uint32_t a = 0;  ///< slot of first operand, or variable index for Var
    std::uint32_t b = 0;  ///< slot of second operand
    double c = 0.0;
    std::int32_t num = 0;  ///< Pow numerator; role for Var
    std::int32_t den = 1;
    std::uint32_t node = 0;
};

class Tape {
public:
    Tape() = default;
    explicit Tape(const std::vector<Expr>& roots);

    std::size_t size() const { return code_.size(); }
    std::size_t outputs() const { return out_.size(); }
    /// Minimum lengths of the x and v input arrays.
    int positions() const { return npos_; }
    int velocities() const { return nvel_; }

    template <class T>
    void eval(std::span<const T> x, std::span<const T> v, std::span<T> out, std::vector<T>& work) const;

    std::vector<double> operator()(std::span<const double> x, std::span<const double> v) const;

private:
    std::vector<Instr> code_;
    std::vector<std::uint32_t> out_;
    int npos_ = 0;
    int nvel_ = 0;

    [[noreturn]] void domain_failure(std::size_t i, const char* what, std::span<const double> x,
                                     std::span<const double> v) const;
    template <class T>
    [[noreturn]] void fail(std::size_t i, const char* what, std::span<const T> x, std::span<const T> v) const {
        std::vector<double> xd, vd;
        for (const auto& t : x) xd.push_back(value_of(t));
        for (const auto& t : v) vd.push_back(value_of(t));
        domain_failure(i, what, xd, vd);
    }
};

/// Tape for a single root, compiled once and shared (thread-safe cache).
std::shared_ptr<const Tape> compiled(Expr root);

/// Evaluates `e` through its cached tape.
double compile_and_evaluate(Expr e, const Bindings& b);

template <class T>
void Tape::eval(std::span<const T> x, std::span<const T> v, std::span<T> out, std::vector<T>& w) const {
    using std::cos;
    using std::exp;
    using std::log;
    using std::sin;
    using std::sqrt;
    w.resize(code_.size());
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& in = code_[i];
        switch (in.op) {
            case Op::Const: w[i] = T(in.c); break;
            case Op::Var: w[i] = in.num == 0 ? x[in.a] : v[in.a]; break;
            case Op::Add: w[i] = w[in.a] + w[in.b]; break;
            case Op::Sub: w[i] = w[in.a] - w[in.b]; break;
            case Op::Mul: w[i] = w[in.a] * w[in.b]; break;
            case Op::Div:
                if (value_of(w[in.b]) == 0.0) fail(i, "division by zero", x, v);
                w[i] = w[in.a] / w[in.b];
                break;
            case Op::Neg: w[i] = -w[in.a]; break;
            case Op::Pow:
                if (!rpow_defined(value_of(w[in.a]), in.num, in.den)) fail(i, "power outside its domain", x, v);
                w[i] = rpow(w[in.a], in.num, in.den);
                break;
            case Op::Sqrt:
                if (!(value_of(w[in.a]) >= 0.0)) fail(i, "sqrt of negative argument", x, v);
                w[i] = sqrt(w[in.a]);
                break;
            case Op::Exp: w[i] = exp(w[in.a]); break;
            case Op::Log:
                if (!(value_of(w[in.a]) > 0.0)) fail(i, "log of non-positive argument", x, v);
                w[i] = log(w[in.a]);
                break;
            case Op::Sin: w[i] = sin(w[in.a]); break;
            case Op::Cos: w[i] = cos(w[in.a]); break;
        }
    }
    for (std::size_t k = 0; k < out_.size(); ++k) out[k] = w[out_[k]];
}

}  // namespace lfg
