/// @file sampling.cpp
/// @brief Rejection samplers over model domains.
#include "lfg/sampling.hpp"

#include "lfg/errors.hpp"

namespace lfg {

Vec gaussian_vector(int n, Rng& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = nd(rng);
    return v;
}

double uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> ud(lo, hi);
    return ud(rng);
}

Vec sample_point(const ModelSpec& m, Rng& rng, double radius) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Vec x(m.n());
        for (int i = 0; i < m.n(); ++i) x[i] = uniform(rng, -radius, radius);
        const Vec X = to_vec(m.orientation_at(span_of(x)));
        if (!m.in_domain(span_of(x), span_of(X))) continue;
        if (m.lagrangian_at(span_of(x), span_of(X)) < 0.0) return x;
    }
    throw InsufficientSamples("no domain point found for model '" + m.name() + "'");
}

Vec sample_future_timelike(const ModelSpec& m, const Vec& x, Rng& rng, double spread) {
    const Vec X = to_vec(m.orientation_at(span_of(x)));
    const Vec u = X / X.norm();
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double s = attempt < 500 ? spread : spread / (1.0 + (attempt - 499) * 0.1);
        Vec v = u + s * gaussian_vector(m.n(), rng);
        v *= uniform(rng, 0.5, 2.0);
        if (is_future_timelike(m, x, v)) return v;
    }
    throw InsufficientSamples("no future timelike velocity found for model '" + m.name() + "'");
}

Vec sample_domain_velocity(const ModelSpec& m, const Vec& x, Rng& rng) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        Vec v = gaussian_vector(m.n(), rng);
        if (m.in_domain(span_of(x), span_of(v))) return v;
    }
    return sample_future_timelike(m, x, rng);
}

Expr random_temporal_function(const ModelSpec& m, const Vec& x0, Rng& rng, double amplitude) {
    const int n = m.n();
    const Vec X = to_vec(m.orientation_at(span_of(x0)));
    const MetricAt g = fundamental_tensor(m, x0, X);
    const Vec c = -g.p / std::sqrt(-2.0 * g.L);
    Expr f = Expr::constant(0.0);
    for (int i = 0; i < n; ++i) f = f + Expr::constant(c[i]) * Expr::variable(xvar(i));
    for (int i = 0; i < n; ++i) {
        const Expr xi = Expr::variable(xvar(i));
        for (int j = i; j < n; ++j)
            f = f + Expr::constant(amplitude * uniform(rng, -1, 1)) * xi * Expr::variable(xvar(j));
        f = f + Expr::constant(amplitude * uniform(rng, -1, 1)) * exp(Expr::constant(0.5) * xi);
    }
    return f;
}

}  // namespace lfg
