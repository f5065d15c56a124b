/// @file pointwise.hpp
/// @brief Scalar-generic evaluation of metric, spray and connection data.
///
/// Every routine is templated on the scalar so the same code runs on doubles
/// and on jets; jets then deliver exact derivatives of the composite objects.
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "lfg/errors.hpp"
#include "lfg/jet.hpp"
#include "lfg/model.hpp"

namespace lfg::detail {

template <class T>
using Vec = std::vector<T>;

/// Inverse of a row-major n×n matrix by Gauss–Jordan with partial pivoting on values.
template <class T>
Vec<T> inverse(int n, Vec<T> a) {
    Vec<T> inv(n * n, T(0.0));
    for (int i = 0; i < n; ++i) inv[i * n + i] = T(1.0);
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(value_of(a[r * n + c])) > std::abs(value_of(a[piv * n + c]))) piv = r;
        if (value_of(a[piv * n + c]) == 0.0) throw SignatureError("degenerate fundamental tensor");
        if (piv != c)
            for (int k = 0; k < n; ++k) {
                std::swap(a[c * n + k], a[piv * n + k]);
                std::swap(inv[c * n + k], inv[piv * n + k]);
            }
        const T d = a[c * n + c];
        for (int k = 0; k < n; ++k) {
            a[c * n + k] = a[c * n + k] / d;
            inv[c * n + k] = inv[c * n + k] / d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            const T f = a[r * n + c];
            if (value_of(f) == 0.0 && std::is_same_v<T, double>) continue;
            for (int k = 0; k < n; ++k) {
                a[r * n + k] = a[r * n + k] - f * a[c * n + k];
                inv[r * n + k] = inv[r * n + k] - f * inv[c * n + k];
            }
        }
    }
    return inv;
}

template <class T>
Vec<T> mat_vec(int n, const Vec<T>& a, const Vec<T>& x) {
    Vec<T> y(n, T(0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) y[i] = y[i] + a[i * n + j] * x[j];
    return y;
}

template <class T>
Vec<T> unpack_sym(const ModelTapes& t, std::span<const T> s) {
    const int n = t.n;
    Vec<T> g(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g[i * n + j] = s[t.sym(i, j)];
    return g;
}

// ─── Basic data: L, ∂L/∂v, ∂L/∂x, g ──────────────────────────────────────────

template <class T>
struct BasicData {
    T L;
    Vec<T> p, Lx, g;
};

template <class T>
BasicData<T> basic_data(const ModelTapes& t, std::span<const T> x, std::span<const T> v) {
    thread_local Vec<T> work;
    const int n = t.n;
    Vec<T> out(t.basic.outputs());
    t.basic.eval<T>(x, v, out, work);
    BasicData<T> d;
    d.L = out[0];
    d.p.assign(out.begin() + 1, out.begin() + 1 + n);
    d.Lx.assign(out.begin() + 1 + n, out.begin() + 1 + 2 * n);
    d.g = unpack_sym<T>(t, std::span<const T>(out).subspan(1 + 2 * n));
    return d;
}

// ─── Spray data: g, g⁻¹, G ────────────────────────────────────────────────────

template <class T>
struct SprayData {
    Vec<T> g, ginv, G;
};

template <class T>
SprayData<T> spray_data(const ModelTapes& t, std::span<const T> x, std::span<const T> v) {
    thread_local Vec<T> work;
    const int n = t.n;
    Vec<T> out(t.spray.outputs());
    t.spray.eval<T>(x, v, out, work);
    SprayData<T> d;
    d.g = unpack_sym<T>(t, out);
    d.ginv = inverse<T>(n, d.g);
    Vec<T> b(out.begin() + t.sym_count(), out.end());
    d.G = mat_vec<T>(n, d.ginv, b);
    return d;
}

// ─── Connection data ──────────────────────────────────────────────────────────

/// Layouts: dgx/dgv[(i·n + j)·n + k] = ∂g_ij/∂(x|v)^k; N, dGx, dGv row-major [i·n + j].
template <class T>
struct ConnData {
    Vec<T> g, ginv, dgx, dgv, G, N, dGx, dGv;
};

template <class T>
ConnData<T> conn_data(const ModelTapes& t, std::span<const T> x, std::span<const T> v) {
    thread_local Vec<T> work;
    const int n = t.n;
    Vec<T> out(t.conn.outputs());
    t.conn.eval<T>(x, v, out, work);
    ConnData<T> d;
    d.g = unpack_sym<T>(t, out);
    d.ginv = inverse<T>(n, d.g);
    d.dgx.resize(n * n * n);
    d.dgv.resize(n * n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                d.dgx[(i * n + j) * n + k] = out[t.c_dgx() + t.sym(i, j) * n + k];
                d.dgv[(i * n + j) * n + k] = out[t.c_dgv() + t.sym(i, j) * n + k];
            }
    Vec<T> b(out.begin() + t.c_b(), out.begin() + t.c_b() + n);
    d.G = mat_vec<T>(n, d.ginv, b);
    // b = g G, so ∂b = ∂g·G + g ∂G.
    Vec<T> rv(n * n), rx(n * n);
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k) {
            T sv = out[t.c_dbv() + l * n + k];
            T sx = out[t.c_dbx() + l * n + k];
            for (int m = 0; m < n; ++m) {
                sv = sv - d.dgv[(l * n + m) * n + k] * d.G[m];
                sx = sx - d.dgx[(l * n + m) * n + k] * d.G[m];
            }
            rv[l * n + k] = sv;
            rx[l * n + k] = sx;
        }
    d.dGv.assign(n * n, T(0.0));
    d.dGx.assign(n * n, T(0.0));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                d.dGv[i * n + k] = d.dGv[i * n + k] + d.ginv[i * n + l] * rv[l * n + k];
                d.dGx[i * n + k] = d.dGx[i * n + k] + d.ginv[i * n + l] * rx[l * n + k];
            }
    d.N.resize(n * n);
    for (int i = 0; i < n * n; ++i) d.N[i] = 0.5 * d.dGv[i];
    return d;
}

/// ψ = ½ log|det g| − log σ and its first partials, evaluated from connection data.
template <class T>
struct PsiPartials {
    Vec<T> dx, dv;
};

template <class T>
PsiPartials<T> psi_partials(const ModelTapes& t, const ConnData<T>& c, std::span<const T> x) {
    thread_local Vec<T> work;
    const int n = t.n;
    Vec<T> zero(n, T(0.0));
    Vec<T> w(t.weight.outputs());
    t.weight.eval<T>(x, std::span<const T>(zero), w, work);
    PsiPartials<T> r;
    r.dx.assign(n, T(0.0));
    r.dv.assign(n, T(0.0));
    for (int k = 0; k < n; ++k) {
        T sx(0.0), sv(0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                sx = sx + c.ginv[i * n + j] * c.dgx[(j * n + i) * n + k];
                sv = sv + c.ginv[i * n + j] * c.dgv[(j * n + i) * n + k];
            }
        r.dx[k] = 0.5 * sx - w[1 + k];
        r.dv[k] = 0.5 * sv;
    }
    return r;
}

template <class T>
T determinant(int n, Vec<T> a) {
    T det(1.0);
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(value_of(a[r * n + c])) > std::abs(value_of(a[piv * n + c]))) piv = r;
        if (value_of(a[piv * n + c]) == 0.0) return T(0.0);
        if (piv != c) {
            for (int k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
            det = -det;
        }
        det = det * a[c * n + c];
        for (int r = c + 1; r < n; ++r) {
            const T f = a[r * n + c] / a[c * n + c];
            for (int k = c; k < n; ++k) a[r * n + k] = a[r * n + k] - f * a[c * n + k];
        }
    }
    return det;
}

// ─── ψ along the geodesic through (x, v) ─────────────────────────────────────

struct PsiAlong {
    double psi = 0.0;    ///< ψ(v)
    double dpsi = 0.0;   ///< (ψ∘η̇)′(0)
    double ddpsi = 0.0;  ///< (ψ∘η̇)″(0)
};

/// ψ = ½ log(−det g) − log σ on (x, v) jets; the derivatives along the
/// geodesic are X ψ and X(X ψ) for the spray field X = v·∂_x − G·∂_v.
inline PsiAlong psi_along(const ModelTapes& t, std::span<const double> x, std::span<const double> v) {
    const int n = t.n, m = 2 * n;
    std::vector<Jet> xj(n), vj(n), zero(n, Jet(0.0));
    for (int i = 0; i < n; ++i) {
        xj[i] = Jet::variable(x[i], i, m, 2);
        vj[i] = Jet::variable(v[i], n + i, m, 2);
    }
    const SprayData<Jet> s = spray_data<Jet>(t, xj, vj);
    thread_local Vec<Jet> work;
    Vec<Jet> w(t.weight.outputs());
    t.weight.eval<Jet>(xj, std::span<const Jet>(zero), w, work);
    const Jet det = determinant<Jet>(n, s.g);
    if (det.value() >= 0.0) throw SignatureError("fundamental tensor determinant is not negative");
    const Jet psi = 0.5 * log(-det) - log(w[0]);
    auto px = [&](int a) { return psi.d(a); };
    auto pv = [&](int a) { return psi.d(n + a); };
    PsiAlong r;
    r.psi = psi.value();
    for (int a = 0; a < n; ++a) r.dpsi += v[a] * px(a) - s.G[a].value() * pv(a);
    double dd = 0.0;
    for (int a = 0; a < n; ++a) {
        const double Ga = s.G[a].value();
        // v^a ∂_{x^a}(Xψ)
        double tx = 0.0;
        for (int b = 0; b < n; ++b)
            tx += v[b] * psi.dd(a, b) - s.G[b].d(a) * pv(b) - s.G[b].value() * psi.dd(a, n + b);
        // G^a ∂_{v^a}(Xψ)
        double tv = px(a);
        for (int b = 0; b < n; ++b)
            tv += v[b] * psi.dd(b, n + a) - s.G[b].d(n + a) * pv(b) - s.G[b].value() * psi.dd(n + a, n + b);
        dd += v[a] * tx - Ga * tv;
    }
    r.ddpsi = dd;
    return r;
}

}  // namespace lfg::detail
