/// @file suite.cpp
/// @brief Sampled identity checks on one model.
#include "lfg/suite.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lfg/duality.hpp"
#include "lfg/errors.hpp"
#include "lfg/sampling.hpp"

namespace lfg {

namespace {

double rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

SuiteRow make_row(std::string check, int samples, double residual, double threshold) {
    SuiteRow r;
    r.check = std::move(check);
    r.samples = samples;
    r.max_residual = residual;
    r.threshold = threshold;
    r.pass = residual <= threshold;
    return r;
}

/// Marks a row failed when fewer samples than requested could be drawn.
void require_samples(SuiteRow& r, int wanted) {
    if (r.samples >= wanted) return;
    r.pass = false;
    std::ostringstream s;
    s << "only " << r.samples << " of " << wanted << " samples";
    r.note = s.str();
}

/// A point and a function f with −df(x) inside Ω* at the point it was built around.
struct FunctionSample {
    Vec x;
    Expr f;
};

FunctionSample draw_function(const ModelSpec& m, Rng& rng, double radius) {
    const Vec x = sample_point(m, rng, radius);
    const Expr f = random_temporal_function(m, x, rng, 0.1);
    return FunctionSample{x, f};
}

template <class F>
double stencil(F&& f, double h) {
    return (f(-2 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2 * h)) / (12 * h);
}

}  // namespace

// ─── Metric identities ────────────────────────────────────────────────────────

std::vector<SuiteRow> metric_identity_rows(const ModelSpec& m, const SuiteOptions& opt) {
    const int n = m.n();
    Rng rng(opt.seed);
    double euler = 0.0, homog = 0.0, primal = 0.0, dual = 0.0;
    int samples = 0, dual_samples = 0;
    for (int s = 0; s < opt.metric_samples; ++s) {
        const Vec x = sample_point(m, rng);
        const Vec v = sample_domain_velocity(m, x, rng);
        const MetricAt g = fundamental_tensor(m, x, v);
        euler = std::max(euler, rel(v.dot(g.g * v), 2 * g.L));
        const double c = uniform(rng, 0.2, 5.0);
        const MetricAt gc = fundamental_tensor(m, x, Vec(c * v));
        homog = std::max(homog, (gc.g - g.g).norm() / (1 + g.g.norm()));
        const ConnectionAt con = spray_and_connections(m, x, v);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double e = 0.0;
                for (int k = 0; k < n; ++k) e += con.dgv(i, j, k) * v[k];
                primal = std::max(primal, std::abs(e));
            }
        ++samples;

        const Vec w = sample_future_timelike(m, x, rng);
        const Vec omega = fundamental_tensor(m, x, w).p;
        const Tensor3 t = dual_metric_derivative(m, x, omega);
        double scale = 0.0;
        for (double a : t.a) scale = std::max(scale, std::abs(a));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double e = 0.0;
                for (int k = 0; k < n; ++k) e += t(i, j, k) * omega[k];
                dual = std::max(dual, std::abs(e) / (1.0 + scale * omega.norm()));
            }
        ++dual_samples;
    }
    std::vector<SuiteRow> rows;
    rows.push_back(make_row("metric_euler", samples, euler, 1e-8));
    rows.push_back(make_row("homogeneity", samples, homog, 1e-8));
    rows.push_back(make_row("primal_euler", samples, primal, 1e-8));
    rows.push_back(make_row("dual_euler", dual_samples, dual, 1e-8));
    return rows;
}

// ─── Duality ──────────────────────────────────────────────────────────────────

std::vector<SuiteRow> duality_rows(const ModelSpec& m, const SuiteOptions& opt) {
    Rng rng(opt.seed + 1);
    double roundtrip = 0.0, min_gap = kInfinity, defect = 0.0;
    int pairs = 0, equality_pairs = 0;
    for (int s = 0; s < opt.rcs_pairs; ++s) {
        const Vec x = sample_point(m, rng);
        const Vec v = sample_future_timelike(m, x, rng);
        const Vec w = sample_future_timelike(m, x, rng);
        const Vec omega = fundamental_tensor(m, x, w).p;
        const DualAt d = legendre_transform(m, x, omega);
        roundtrip = std::max(roundtrip, (d.legendre - w).norm() / w.norm());

        const double gap = reverse_cauchy_schwarz_check(m, x, v, omega);
        min_gap = std::min(min_gap, gap);
        if (gap <= 1e-8) {
            defect = std::max(defect, proportionality_defect(v, d.legendre));
            ++equality_pairs;
        }
        // The proportional pair realizes the equality case.
        const Vec u = uniform(rng, 0.5, 2.0) * d.legendre;
        const double eq = reverse_cauchy_schwarz_check(m, x, u, omega);
        min_gap = std::min(min_gap, eq);
        if (eq <= 1e-8) {
            defect = std::max(defect, proportionality_defect(u, d.legendre));
            ++equality_pairs;
        }
        ++pairs;
    }
    std::vector<SuiteRow> rows;
    rows.push_back(make_row("legendre_roundtrip", pairs, roundtrip, 1e-8));
    SuiteRow gap = make_row("rcs_gap", 2 * pairs, std::max(0.0, -min_gap), 1e-10);
    gap.extra = {{"min_gap", min_gap}};
    rows.push_back(gap);
    SuiteRow eq = make_row("rcs_equality", equality_pairs, defect, 1e-6);
    eq.extra = {{"equality_pairs", static_cast<double>(equality_pairs)}};
    if (equality_pairs < pairs) {
        eq.pass = false;
        eq.note = "proportional pairs missed the equality band";
    }
    rows.push_back(eq);
    return rows;
}

// ─── Operators ────────────────────────────────────────────────────────────────

std::vector<SuiteRow> operator_rows(const ModelSpec& m, const SuiteOptions& opt) {
    Rng rng(opt.seed + 2);
    double box = 0.0, sym = 0.0, eig = 0.0;
    std::vector<double> box_mp(opt.ps.size(), 0.0);
    int samples = 0, symbols = 0, sign_mismatch = 0;
    for (int attempt = 0; attempt < 3 * opt.operator_samples && samples < opt.operator_samples; ++attempt) {
        const auto fs = draw_function(m, rng, 0.8);
        const double p_sym = uniform(rng, -3.0, 2.0);
        try {
            const OperatorAt a = hessian_and_dalembertian(m, fs.f, fs.x, -2.0);
            box = std::max(box, std::abs(a.box_m - a.box_m_div) / (1.0 + std::abs(a.box_m)));
            const Mat gH = fundamental_tensor(m, fs.x, a.grad).g * a.hess;
            sym = std::max(sym, (gH - gH.transpose()).norm() / (1.0 + gH.norm()));
            for (std::size_t k = 0; k < opt.ps.size(); ++k) {
                const OperatorAt b = hessian_and_dalembertian(m, fs.f, fs.x, opt.ps[k]);
                box_mp[k] = std::max(box_mp[k], std::abs(b.box_mp - b.box_mp_expanded) / (1.0 + std::abs(b.box_mp)));
            }
            const SymbolReport s = ellipticity_symbol(m, fs.f, fs.x, p_sym);
            std::vector<double> expected(m.n(), 1.0);
            expected[0] = 1.0 - p_sym;
            std::sort(expected.begin(), expected.end(), std::greater<>());
            for (int i = 0; i < m.n(); ++i) eig = std::max(eig, std::abs(s.eigenvalues[i] - expected[i]));
            if ((s.eigenvalues.minCoeff() > 0.0) != (p_sym < 1.0)) ++sign_mismatch;
            ++symbols;
        } catch (const NotTemporal&) {
            continue;
        } catch (const DomainError&) {
            continue;
        }
        ++samples;
    }
    std::vector<SuiteRow> rows;
    SuiteRow a = make_row("box_two_route", samples, box, 1e-7);
    require_samples(a, opt.operator_samples);
    rows.push_back(a);

    double worst = 0.0;
    for (double r : box_mp) worst = std::max(worst, r);
    SuiteRow b = make_row("box_mp_two_route", samples, worst, 1e-7);
    for (std::size_t k = 0; k < opt.ps.size(); ++k) {
        std::ostringstream name;
        name << "p=" << opt.ps[k];
        b.extra.emplace_back(name.str(), box_mp[k]);
    }
    require_samples(b, opt.operator_samples);
    rows.push_back(b);

    SuiteRow h = make_row("hessian_symmetry", samples, sym, 1e-8);
    require_samples(h, opt.operator_samples);
    rows.push_back(h);

    SuiteRow e = make_row("ellipticity", symbols, eig, 1e-9);
    e.extra = {{"sign_mismatches", static_cast<double>(sign_mismatch)}};
    if (sign_mismatch > 0) {
        e.pass = false;
        e.note = "positivity differs from p < 1";
    }
    require_samples(e, opt.operator_samples);
    rows.push_back(e);
    return rows;
}

// ─── Bochner ──────────────────────────────────────────────────────────────────

BochnerFd bochner_fd_terms(const ModelSpec& m, Expr h, const Vec& x, double step) {
    const int n = m.n();
    auto grad_h = [&](const Vec& y) { return gradient(m, -h, y).grad; };
    auto log_sigma_partial = [&](const Vec& y, int i) {
        return stencil(
            [&](double s) {
                Vec z = y;
                z[i] += s;
                return std::log(m.weight_at(span_of(z)));
            },
            step);
    };
    auto div_m = [&](auto&& Z, const Vec& y) {
        const Vec z0 = Z(y);
        double d = 0.0;
        for (int i = 0; i < n; ++i) {
            d += stencil(
                [&](double s) {
                    Vec z = y;
                    z[i] += s;
                    return Z(z)[i];
                },
                step);
            d += z0[i] * log_sigma_partial(y, i);
        }
        return d;
    };
    auto lapse_gradient = [&](const Vec& y) {
        auto u = [&](const Vec& z) { return -m.lagrangian_at(span_of(z), span_of(grad_h(z))); };
        Vec du(n);
        for (int i = 0; i < n; ++i)
            du[i] = stencil(
                [&](double s) {
                    Vec z = y;
                    z[i] += s;
                    return u(z);
                },
                step);
        return Vec(fundamental_tensor(m, y, grad_h(y)).g_inv * du);
    };
    BochnerFd t;
    t.term_div = div_m(lapse_gradient, x);
    const Vec v = grad_h(x);
    t.term_dbox = stencil([&](double s) { return div_m(grad_h, Vec(x + s * v)); }, step);
    return t;
}

std::vector<SuiteRow> bochner_rows(const ModelSpec& m, const SuiteOptions& opt) {
    Rng rng(opt.seed + 3);
    double worst = 0.0, fd_worst = 0.0;
    BochnerTerms at_worst;
    int samples = 0, fd_samples = 0;
    for (int attempt = 0; attempt < 3 * opt.operator_samples && samples < opt.operator_samples; ++attempt) {
        const auto fs = draw_function(m, rng, 0.6);
        const Expr h = -fs.f;
        try {
            const BochnerTerms b = bochner_residual(m, h, fs.x);
            if (samples == 0 || std::abs(b.residual) > worst) at_worst = b;
            worst = std::max(worst, std::abs(b.residual));
            if (samples % 10 == 0) {
                const BochnerFd fd = bochner_fd_terms(m, h, fs.x);
                fd_worst = std::max(fd_worst, std::abs(fd.term_div - b.term_div) / std::max(1.0, std::abs(b.term_div)));
                fd_worst =
                    std::max(fd_worst, std::abs(fd.term_dbox - b.term_dbox) / std::max(1.0, std::abs(b.term_dbox)));
                ++fd_samples;
            }
        } catch (const NotTemporal&) {
            continue;
        } catch (const DomainError&) {
            continue;
        }
        ++samples;
    }
    std::vector<SuiteRow> rows;
    SuiteRow b = make_row("bochner", samples, worst, 1e-6);
    b.extra = {{"term_div", at_worst.term_div},
               {"term_dbox", at_worst.term_dbox},
               {"term_ric", at_worst.term_ric},
               {"term_hs", at_worst.term_hs}};
    require_samples(b, opt.operator_samples);
    rows.push_back(b);
    SuiteRow f = make_row("bochner_fd", fd_samples, fd_worst, 1e-4);
    require_samples(f, (opt.operator_samples + 9) / 10);
    rows.push_back(f);
    return rows;
}

// ─── Riccati ──────────────────────────────────────────────────────────────────

std::vector<SuiteRow> riccati_rows(const ModelSpec& m, const SuiteOptions& opt) {
    Rng rng(opt.seed + 4);
    std::vector<double> ts;
    for (int i = 1; i <= opt.times; ++i) ts.push_back(0.05 * i);
    double riccati = 0.0, hs = 0.0;
    int geodesics = 0;
    for (int attempt = 0; attempt < 6 * opt.geodesics && geodesics < opt.geodesics; ++attempt) {
        const auto fs = draw_function(m, rng, 0.3);
        const Expr h = -fs.f;
        try {
            const JacobiFrame fr(m, h, fs.x);
            const std::vector<double> res = riccati_residuals(fr, ts);
            const FieldAnalysis a = analyze_field(m, differential_of(h, m.n(), 1.0), fs.x);
            const FrameAt f0 = fr.at(0.0);
            for (double r : res) riccati = std::max(riccati, r);
            hs = std::max(hs, std::abs((f0.B * f0.B).trace() - a.term_hs));
        } catch (const NotTemporal&) {
            continue;
        } catch (const LeftDomain&) {
            continue;
        } catch (const DomainError&) {
            continue;
        }
        ++geodesics;
    }
    std::vector<SuiteRow> rows;
    SuiteRow r = make_row("riccati", geodesics * opt.times, riccati, 1e-6);
    require_samples(r, opt.geodesics * opt.times);
    rows.push_back(r);
    SuiteRow s = make_row("hilbert_schmidt", geodesics, hs, 1e-7);
    require_samples(s, opt.geodesics);
    rows.push_back(s);
    return rows;
}

std::vector<SuiteRow> identity_suite(const ModelSpec& m, const SuiteOptions& opt) {
    std::vector<SuiteRow> rows;
    for (auto* group : {&metric_identity_rows, &duality_rows, &operator_rows, &bochner_rows, &riccati_rows}) {
        auto part = (*group)(m, opt);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

}  // namespace lfg
