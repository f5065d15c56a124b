/// @file jet.hpp
/// @brief Second-order truncated Taylor arithmetic in up to eight variables.
///
/// A Jet carries f, ∂_i f and ∂_i∂_j f at a base point. Evaluating a compiled
/// tape on jets yields exact derivatives of compositions (matrix inverses,
/// Newton solutions) built from the symbolic derivative tapes.
#pragma once

#include <array>
#include <cassert>
#include <algorithm>
#include <cmath>

#include "lfg/scalar.hpp"

namespace lfg {

class Jet {
public:
    static constexpr int kMax = 8;

    Jet() = default;
    Jet(double c) : v(c) {}  // NOLINT: implicit promotion of constants
    Jet(double c, int vars, int ord) : v(c), m(vars), order(ord) {}

    static Jet variable(double value, int index, int vars, int ord) {
        Jet j(value, vars, ord);
        if (ord >= 1) j.g[index] = 1.0;
        return j;
    }

    double value() const { return v; }
    double d(int i) const { return g[i]; }
    double dd(int i, int j) const { return h[i * kMax + j]; }
    int vars() const { return m; }
    int ord() const { return order; }

    /// The jet of ∂_k f, one order lower.
    Jet derivative(int k) const {
        Jet r(g[k], m, order > 0 ? order - 1 : 0);
        if (order >= 2)
            for (int i = 0; i < m; ++i) r.g[i] = h[k * kMax + i];
        return r;
    }

    Jet& operator+=(const Jet& o) {
        adopt(o);
        v += o.v;
        if (order >= 1) for (int i = 0; i < m; ++i) g[i] += o.g[i];
        if (order >= 2) for_hess([&](int k) { h[k] += o.h[k]; });
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        adopt(o);
        v -= o.v;
        if (order >= 1) for (int i = 0; i < m; ++i) g[i] -= o.g[i];
        if (order >= 2) for_hess([&](int k) { h[k] -= o.h[k]; });
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator-(Jet a) {
        a.v = -a.v;
        for (int i = 0; i < a.m; ++i) a.g[i] = -a.g[i];
        if (a.order >= 2) a.for_hess([&](int k) { a.h[k] = -a.h[k]; });
        return a;
    }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r(a.v * b.v, std::max(a.m, b.m), combined_order(a, b));
        const int m = r.m;
        if (r.order >= 1)
            for (int i = 0; i < m; ++i) r.g[i] = a.v * b.g[i] + a.g[i] * b.v;
        if (r.order >= 2)
            for (int i = 0; i < m; ++i)
                for (int j = i; j < m; ++j) {
                    const double x = a.v * b.h[i * kMax + j] + a.h[i * kMax + j] * b.v +
                                     a.g[i] * b.g[j] + a.g[j] * b.g[i];
                    r.h[i * kMax + j] = x;
                    r.h[j * kMax + i] = x;
                }
        return r;
    }

    friend Jet operator/(const Jet& a, const Jet& b) {
        const double inv = 1.0 / b.v;
        return a * compose(b, inv, -inv * inv, 2.0 * inv * inv * inv);
    }

    /// φ∘a given φ(a₀), φ′(a₀), φ″(a₀).
    friend Jet compose(const Jet& a, double f0, double f1, double f2) {
        Jet r(f0, a.m, a.order);
        if (a.order >= 1)
            for (int i = 0; i < a.m; ++i) r.g[i] = f1 * a.g[i];
        if (a.order >= 2)
            for (int i = 0; i < a.m; ++i)
                for (int j = i; j < a.m; ++j) {
                    const double x = f1 * a.h[i * kMax + j] + f2 * a.g[i] * a.g[j];
                    r.h[i * kMax + j] = x;
                    r.h[j * kMax + i] = x;
                }
        return r;
    }

    friend Jet sqrt(const Jet& a) {
        const double s = std::sqrt(a.v);
        return compose(a, s, 0.5 / s, -0.25 / (s * a.v));
    }
    friend Jet exp(const Jet& a) {
        const double e = std::exp(a.v);
        return compose(a, e, e, e);
    }
    friend Jet log(const Jet& a) {
        return compose(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
    }
    friend Jet sin(const Jet& a) {
        const double s = std::sin(a.v), c = std::cos(a.v);
        return compose(a, s, c, -s);
    }
    friend Jet cos(const Jet& a) {
        const double s = std::sin(a.v), c = std::cos(a.v);
        return compose(a, c, -s, -c);
    }
    friend Jet rpow(const Jet& a, int num, int den) {
        const double r = static_cast<double>(num) / den;
        const double f0 = lfg::rpow(a.v, num, den);
        const double f1 = num == 0 ? 0.0 : r * lfg::rpow(a.v, num - den, den);
        const double f2 = (num == 0 || num == den) ? 0.0 : r * (r - 1.0) * lfg::rpow(a.v, num - 2 * den, den);
        return compose(a, f0, f1, f2);
    }

    /// a^r for real r and a > 0.
    friend Jet pow(const Jet& a, double r) {
        const double f0 = std::pow(a.v, r);
        return compose(a, f0, r * f0 / a.v, r * (r - 1.0) * f0 / (a.v * a.v));
    }

private:
    double v = 0.0;
    int m = 0;
    int order = 0;
    std::array<double, kMax> g{};
    std::array<double, kMax * kMax> h{};

    /// Jets without variables are exact constants; otherwise the result is
    /// only valid to the lower of the two orders.
    static int combined_order(const Jet& a, const Jet& b) {
        if (a.m == 0) return b.order;
        if (b.m == 0) return a.order;
        return std::min(a.order, b.order);
    }
    void adopt(const Jet& o) {
        order = combined_order(*this, o);
        if (o.m > m) m = o.m;
    }
    template <class F>
    void for_hess(F&& f) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) f(i * kMax + j);
    }
};

inline double value_of(const Jet& j) { return j.value(); }

}  // namespace lfg
