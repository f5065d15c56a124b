/// @file cli.cpp
/// @brief Command implementations, report formatting and the exit-code contract.
#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lfg/busemann.hpp"
#include "lfg/errors.hpp"
#include "lfg/model.hpp"
#include "lfg/sampling.hpp"
#include "lfg/suite.hpp"
#include "lfg/weighted.hpp"

namespace lfg::cli {

namespace {

using Json = nlohmann::ordered_json;

// ─── Logging ──────────────────────────────────────────────────────────────────

enum class Level { Quiet, Error, Warn, Info, Debug };

/// Level from LFG_LOG_LEVEL (quiet, error, warn, info, debug); info by default.
Level level_from_env() {
    const char* s = std::getenv("LFG_LOG_LEVEL");
    if (!s) return Level::Info;
    const std::string v(s);
    if (v == "quiet") return Level::Quiet;
    if (v == "error") return Level::Error;
    if (v == "warn") return Level::Warn;
    if (v == "debug") return Level::Debug;
    return Level::Info;
}

struct Log {
    std::ostream& err;
    Level level;
    void write(Level l, const char* tag, const std::string& msg) const {
        if (l <= level) err << "lfg: " << tag << ": " << msg << '\n';
    }
    void error(const std::string& m) const { write(Level::Error, "error", m); }
    void warn(const std::string& m) const { write(Level::Warn, "warn", m); }
    void info(const std::string& m) const { write(Level::Info, "info", m); }
    void debug(const std::string& m) const { write(Level::Debug, "debug", m); }
};

// ─── Formatting ───────────────────────────────────────────────────────────────

/// Shortest round-trip decimal, independent of the locale.
std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

/// Finite numbers as JSON numbers, the rest as the strings "inf", "-inf", "nan".
Json jnum(double v) {
    if (std::isfinite(v)) return v;
    return num(v);
}

Json jvec(const Vec& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(jnum(v[i]));
    return a;
}

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : width_(header.size()) { line(header); }
    void row(const std::vector<std::string>& cells) { line(cells); }
    const std::string& text() const { return text_; }

private:
    static std::string quote(const std::string& c) {
        if (c.find_first_of(",\"\n") == std::string::npos) return c;
        std::string q = "\"";
        for (char ch : c) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return q + "\"";
    }
    void line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < width_; ++i) {
            if (i) text_ += ',';
            if (i < cells.size()) text_ += quote(cells[i]);
        }
        text_ += '\n';
    }
    std::size_t width_;
    std::string text_;
};

std::vector<std::string> indexed(const std::string& prefix, int count, int first = 1) {
    std::vector<std::string> names;
    for (int i = 0; i < count; ++i) names.push_back(prefix + std::to_string(first + i));
    return names;
}

void append(std::vector<std::string>& cells, const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) cells.push_back(num(v[i]));
}

std::string verdict(bool pass) { return pass ? "pass" : "fail"; }

// ─── Output ───────────────────────────────────────────────────────────────────

/// The primary CSV goes to stdout; with --out every report is also written into the directory.
class Output {
public:
    Output(std::ostream& out, std::string dir) : out_(out), dir_(std::move(dir)) {
        if (!dir_.empty()) std::filesystem::create_directories(dir_);
    }
    void primary(const std::string& name, const std::string& text) {
        out_ << text;
        file(name, text);
    }
    void file(const std::string& name, const std::string& text) const {
        if (dir_.empty()) return;
        std::ofstream f(std::filesystem::path(dir_) / name, std::ios::binary);
        f << text;
        if (!f) throw std::runtime_error("cannot write " + name);
    }
    void json(const std::string& name, const Json& j) const { file(name, j.dump(2) + "\n"); }

private:
    std::ostream& out_;
    std::string dir_;
};

// ─── Configuration ────────────────────────────────────────────────────────────

struct Common {
    std::string file;
    std::optional<std::uint64_t> seed;
    std::string out;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t seed_of(const Common& c, const ModelFile& mf) {
    if (c.seed) return *c.seed;
    return static_cast<std::uint64_t>(mf.run.number("seed", 42.0));
}

/// A number that may be "inf"; the fallback applies when the option was not given.
double number_option(const std::optional<std::string>& s, double fallback, const std::string& name) {
    if (!s) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(*s, &used);
        if (used != s->size()) throw std::invalid_argument(*s);
        return v;
    } catch (const std::exception&) {
        throw UsageError("--" + name + " expects a number, got '" + *s + "'");
    }
}

Vec vector_option(const std::string& s, int n, const std::string& name) {
    std::vector<double> v;
    try {
        v = parse_number_list(s);
    } catch (const std::exception&) {
        throw UsageError("--" + name + " expects a comma-separated list of numbers");
    }
    if (static_cast<int>(v.size()) != n)
        throw UsageError("--" + name + " needs " + std::to_string(n) + " components, got " + std::to_string(v.size()));
    return to_vec(v);
}

Json header(const std::string& command, const Common& c, const ModelFile& mf, std::uint64_t seed) {
    Json j;
    j["command"] = command;
    j["model"] = mf.model.name();
    j["model_file"] = c.file;
    j["n"] = mf.model.n();
    j["seed"] = seed;
    return j;
}

LineSpec line_of(const ModelFile& mf, double horizon) {
    if (!mf.line) throw UsageError("model '" + mf.model.name() + "' has no [line] section");
    return validate_line(mf.model, to_vec(mf.line->base), to_vec(mf.line->velocity), horizon);
}

// ─── validate ─────────────────────────────────────────────────────────────────

struct ValidateOptions {
    int samples = 200;
};

int cmd_validate(const Common& c, const ModelFile& mf, const ValidateOptions& o, Output& out, const Log& log) {
    const ModelSpec& m = mf.model;
    const int n = m.n();
    const std::uint64_t seed = seed_of(c, mf);
    Rng rng(seed);
    int sig_checked = 0, sig_fail = 0, orient_fail = 0, points = 0, metric_samples = 0, homog_samples = 0;
    double homog = 0.0, euler = 0.0, min_sigma = kInfinity;
    Json errors = Json::array();
    auto record = [&](const std::string& type, const std::string& msg) {
        if (errors.size() < 5) errors.push_back(Json{{"type", type}, {"message", msg}});
    };
    for (int s = 0; s < o.samples; ++s) {
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = uniform(rng, -1.0, 1.0);
        ++points;
        try {
            const double sigma = m.weight_at(span_of(x));
            min_sigma = std::isfinite(sigma) ? std::min(min_sigma, sigma) : -kInfinity;
        } catch (const DomainError& e) {
            min_sigma = -kInfinity;
            record("DomainError", e.what());
        }
        const Vec X = to_vec(m.orientation_at(span_of(x)));
        std::vector<Vec> vs;
        if (m.in_domain(span_of(x), span_of(X)) && m.lagrangian_at(span_of(x), span_of(X)) < 0.0)
            vs.push_back(X);
        else
            ++orient_fail;
        for (int k = 0; k < 40 && vs.size() < 4; ++k) {
            const Vec w = gaussian_vector(n, rng);
            if (m.in_domain(span_of(x), span_of(w))) vs.push_back(w);
        }
        for (const Vec& v : vs) {
            const double cst = uniform(rng, 0.2, 5.0);
            const double L = m.lagrangian_at(span_of(x), span_of(v));
            const double Lc = m.lagrangian_at(span_of(x), span_of(Vec(cst * v)));
            homog = std::max(homog, std::abs(Lc - cst * cst * L) / (1.0 + std::abs(cst * cst * L)));
            ++homog_samples;
            MetricAt g;
            ++sig_checked;
            try {
                g = fundamental_tensor(m, x, v);
                check_signature(g.g);
            } catch (const SignatureError& e) {
                ++sig_fail;
                record("SignatureError", e.what());
                continue;
            } catch (const DomainError&) {
                --sig_checked;
                continue;
            }
            euler = std::max(euler, std::abs(v.dot(g.g * v) - 2 * g.L) / (1.0 + std::abs(2 * g.L)));
            ++metric_samples;
        }
    }
    struct Row {
        std::string name;
        int samples;
        double residual, threshold;
        bool pass;
        std::string note;
    };
    std::vector<Row> rows{
        {"signature", sig_checked, static_cast<double>(sig_fail), 0.0, sig_fail == 0 && sig_checked > 0,
         sig_fail ? "SignatureError at " + std::to_string(sig_fail) + " samples" : std::string()},
        {"homogeneity", homog_samples, homog, 1e-9, homog <= 1e-9 && homog_samples > 0,
         homog_samples ? std::string() : "no in-domain velocity sampled"},
        {"metric_euler", metric_samples, euler, 1e-8, euler <= 1e-8 && metric_samples > 0,
         metric_samples ? std::string() : "no sample with a Lorentzian fundamental tensor"},
        {"weight_positivity", points, std::max(0.0, -min_sigma), 0.0, min_sigma > 0.0,
         min_sigma > 0.0 ? std::string() : "weight is not positive everywhere sampled"},
        {"orientation_timelike", points, static_cast<double>(orient_fail), 0.0, orient_fail == 0,
         orient_fail ? "seed is not future timelike at " + std::to_string(orient_fail) + " points" : std::string()},
    };
    if (sig_checked == 0) rows[0].note = "no in-domain velocity sampled";

    Csv csv({"check", "samples", "max_residual", "threshold", "verdict", "note"});
    Json checks = Json::array();
    bool all = true;
    for (const Row& r : rows) {
        csv.row({r.name, std::to_string(r.samples), num(r.residual), num(r.threshold), verdict(r.pass), r.note});
        checks.push_back(Json{{"check", r.name},
                              {"samples", r.samples},
                              {"max_residual", jnum(r.residual)},
                              {"threshold", r.threshold},
                              {"verdict", verdict(r.pass)},
                              {"note", r.note}});
        all = all && r.pass;
        if (!r.pass) log.warn("validate: " + r.name + " failed " + r.note);
    }
    Json j = header("validate", c, mf, seed);
    j["samples"] = o.samples;
    j["checks"] = checks;
    j["errors"] = errors;
    j["status"] = verdict(all);
    out.primary("validate.csv", csv.text());
    out.json("validate.json", j);
    log.info("validate: " + verdict(all));
    return all ? kOk : kCheckFailed;
}

// ─── identities ───────────────────────────────────────────────────────────────

int cmd_identities(const Common& c, const ModelFile& mf, Output& out, const Log& log) {
    const std::uint64_t seed = seed_of(c, mf);
    SuiteOptions opt;
    opt.seed = seed;
    const std::vector<SuiteRow> rows = identity_suite(mf.model, opt);

    const std::vector<std::string> terms{"term_div", "term_dbox", "term_ric", "term_hs"};
    std::vector<std::string> head{"check", "samples", "max_residual", "threshold", "verdict"};
    head.insert(head.end(), terms.begin(), terms.end());
    head.push_back("note");
    Csv csv(head);
    Json checks = Json::array();
    bool all = true;
    for (const SuiteRow& r : rows) {
        std::vector<std::string> cells{r.check, std::to_string(r.samples), num(r.max_residual), num(r.threshold),
                                       verdict(r.pass)};
        for (const std::string& t : terms) {
            const auto it = std::find_if(r.extra.begin(), r.extra.end(), [&](const auto& e) { return e.first == t; });
            cells.push_back(it == r.extra.end() ? std::string() : num(it->second));
        }
        cells.push_back(r.note);
        csv.row(cells);
        Json extra = Json::object();
        for (const auto& [k, v] : r.extra) extra[k] = jnum(v);
        checks.push_back(Json{{"check", r.check},
                              {"samples", r.samples},
                              {"max_residual", jnum(r.max_residual)},
                              {"threshold", r.threshold},
                              {"verdict", verdict(r.pass)},
                              {"extra", extra},
                              {"note", r.note}});
        all = all && r.pass;
        if (!r.pass) log.warn("identities: " + r.check + " failed " + r.note);
    }
    Json j = header("identities", c, mf, seed);
    j["checks"] = checks;
    j["status"] = verdict(all);
    out.primary("identities.csv", csv.text());
    out.json("identities.json", j);
    log.info("identities: " + verdict(all));
    return all ? kOk : kCheckFailed;
}

// ─── geodesic ─────────────────────────────────────────────────────────────────

struct GeodesicOptions {
    std::string from, vel, tspan;
    int points = 101;
};

int cmd_geodesic(const Common& c, const ModelFile& mf, const GeodesicOptions& o, Output& out, const Log& log) {
    const ModelSpec& m = mf.model;
    const int n = m.n();
    const Vec x = vector_option(o.from, n, "from");
    const Vec v = vector_option(o.vel, n, "vel");
    const Vec span = vector_option(o.tspan, 2, "tspan");
    if (!(span[0] < span[1])) throw UsageError("--tspan needs t0 < t1");
    if (o.points < 2) throw UsageError("--points must be at least 2");
    const std::uint64_t seed = seed_of(c, mf);

    std::vector<std::string> head{"t"};
    for (auto& s : indexed("x", n)) head.push_back(s);
    for (auto& s : indexed("v", n)) head.push_back(s);
    head.push_back("L");
    Csv csv(head);
    Json j = header("geodesic", c, mf, seed);
    j["from"] = jvec(x);
    j["vel"] = jvec(v);
    j["tspan"] = jvec(span);
    int code = kOk;
    try {
        const GeodesicPath path = integrate_geodesic(m, x, v, std::min(span[0], 0.0), std::max(span[1], 0.0));
        for (int k = 0; k < o.points; ++k) {
            const double t = span[0] + (span[1] - span[0]) * k / (o.points - 1);
            const Vec p = path.position(t), w = path.velocity(t);
            std::vector<std::string> cells{num(t)};
            append(cells, p);
            append(cells, w);
            cells.push_back(num(m.lagrangian_at(span_of(p), span_of(w))));
            csv.row(cells);
        }
        j["steps"] = path.samples().size();
        j["lagrangian_drift"] = jnum(path.lagrangian_drift());
        j["max_residual"] = jnum(path.max_residual());
        j["status"] = "pass";
    } catch (const LeftDomain& e) {
        j["status"] = "left_domain";
        j["exit_time"] = jnum(e.t_exit);
        j["message"] = e.what();
        log.error(std::string("geodesic: ") + e.what());
        code = kCheckFailed;
    } catch (const StepFailure& e) {
        j["status"] = "step_failure";
        j["failure_time"] = jnum(e.t_fail);
        j["message"] = e.what();
        log.error(std::string("geodesic: ") + e.what());
        code = kCheckFailed;
    }
    out.primary("geodesic.csv", csv.text());
    out.json("geodesic.json", j);
    return code;
}

// ─── busemann ─────────────────────────────────────────────────────────────────

struct BusemannCmdOptions {
    std::string grid = "1,11";
    std::optional<std::string> horizon;
};

int cmd_busemann(const Common& c, const ModelFile& mf, const BusemannCmdOptions& o, Output& out, const Log& log) {
    const ModelSpec& m = mf.model;
    const int n = m.n();
    const Vec g = vector_option(o.grid, 2, "grid");
    const int count = static_cast<int>(g[1]);
    if (!(g[0] > 0.0) || count < 6 || count != g[1]) throw UsageError("--grid expects RADIUS,COUNT with an integer COUNT >= 6");
    const std::uint64_t seed = seed_of(c, mf);
    const double horizon = number_option(o.horizon, mf.line ? mf.line->horizon : 0.0, "horizon");
    const LineSpec line = line_of(mf, horizon);
    const Grid grid = box_grid(line.base, g[0], count);

    Json j = header("busemann", c, mf, seed);
    j["line"] = Json{{"base", jvec(line.base)},
                     {"velocity", jvec(line.velocity)},
                     {"horizon", horizon},
                     {"closed_form", line.closed_form},
                     {"max_defect", jnum(line.max_defect)}};
    j["grid"] = Json{{"radius", g[0]}, {"count", count}, {"points", grid.size()}};

    std::vector<std::string> head = indexed("x", n);
    for (const char* s : {"b", "b_rev", "sum", "horizon", "tail", "monotone_violation"}) head.emplace_back(s);
    Csv csv(head);
    BusemannField field;
    try {
        field = busemann_field(line, grid);
    } catch (const NoConvergence& e) {
        j["status"] = "no_convergence";
        j["message"] = e.what();
        out.primary("busemann.csv", csv.text());
        out.json("busemann.json", j);
        log.error(std::string("busemann: ") + e.what());
        return kCheckFailed;
    }
    double lo = kInfinity, hi = -kInfinity, mono = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double s = field.values[i] + field.reverse_values[i];
        lo = std::min(lo, s);
        hi = std::max(hi, s);
        mono = std::max(mono, field.monotone_violation[i]);
        tail = std::max(tail, field.tail[i]);
        std::vector<std::string> cells;
        append(cells, grid.point(i));
        for (double d : {field.values[i], field.reverse_values[i], s, field.horizon_used[i], field.tail[i],
                         field.monotone_violation[i]})
            cells.push_back(num(d));
        csv.row(cells);
    }
    const bool sum_ok = lo >= -1e-8, mono_ok = mono <= 1e-9;
    j["sum_min"] = jnum(lo);
    j["sum_max"] = jnum(hi);
    j["max_tail"] = jnum(tail);
    j["max_monotone_violation"] = jnum(mono);
    j["checks"] = Json::array({Json{{"check", "sum_lower_bound"}, {"verdict", verdict(sum_ok)}},
                               Json{{"check", "monotone_in_horizon"}, {"verdict", verdict(mono_ok)}}});
    j["status"] = verdict(sum_ok && mono_ok);
    out.primary("busemann.csv", csv.text());
    out.json("busemann.json", j);
    log.info("busemann: " + verdict(sum_ok && mono_ok));
    return sum_ok && mono_ok ? kOk : kCheckFailed;
}

// ─── split ────────────────────────────────────────────────────────────────────

struct SplitOptions {
    std::optional<std::string> p, N, eps, horizon;
};

int cmd_split(const Common& c, const ModelFile& mf, const SplitOptions& o, Output& out, const Log& log) {
    const ModelSpec& m = mf.model;
    const int n = m.n();
    const std::uint64_t seed = seed_of(c, mf);
    const double p = number_option(o.p, mf.run.number("p", -2.0), "p");
    const double N = number_option(o.N, mf.run.number("N", kInfinity), "N");
    const double eps = number_option(o.eps, mf.run.number("epsilon", 0.0), "eps");
    EpsilonSpec spec;
    try {
        spec = epsilon_constant(n, N, eps);
    } catch (const OutOfEpsilonRange& e) {
        throw UsageError(e.what());
    }
    const double horizon = number_option(o.horizon, mf.line ? mf.line->horizon : 0.0, "horizon");
    const LineSpec line = line_of(mf, horizon);

    Json j = header("split", c, mf, seed);
    j["p"] = jnum(p);
    j["N"] = jnum(N);
    j["epsilon"] = jnum(eps);
    j["c"] = jnum(spec.c);
    j["line"] = Json{{"base", jvec(line.base)},
                     {"velocity", jvec(line.velocity)},
                     {"horizon", horizon},
                     {"closed_form", line.closed_form},
                     {"max_defect", jnum(line.max_defect)}};

    SplittingOptions so;
    so.p = p;
    so.seed = seed;
    SplittingRun run;
    try {
        run = run_splitting(line, so);
    } catch (const NoConvergence& e) {
        j["status"] = "no_convergence";
        j["message"] = e.what();
        out.json("split.json", j);
        log.error(std::string("split: ") + e.what());
        return kCheckFailed;
    }
    const SplittingReport& rep = run.report;

    Csv checks({"check", "samples", "max_residual", "threshold", "verdict", "note"});
    Json jchecks = Json::array();
    bool all = true;
    for (const SplittingCheck& k : rep.checks) {
        const std::string v = k.skipped ? "skipped" : verdict(k.pass);
        checks.row({k.name, std::to_string(k.samples), num(k.max_residual), num(k.threshold), v, k.note});
        jchecks.push_back(Json{{"check", k.name},
                               {"samples", k.samples},
                               {"max_residual", jnum(k.max_residual)},
                               {"threshold", k.threshold},
                               {"verdict", v},
                               {"note", k.note}});
        if (!k.skipped && !k.pass) {
            all = false;
            log.warn("split: " + k.name + " failed " + k.note);
        }
    }

    // Field dump on every grid node.
    std::vector<std::string> fh = indexed("x", n);
    for (const char* s : {"b", "b_rev", "sum"}) fh.emplace_back(s);
    Csv field(fh);
    for (std::size_t i = 0; i < run.field.grid.size(); ++i) {
        std::vector<std::string> cells;
        append(cells, run.field.grid.point(i));
        const double b = run.field.values[i], br = run.field.reverse_values[i];
        for (double d : {b, br, b + br}) cells.push_back(num(d));
        field.row(cells);
    }

    // Operator residuals at interior nodes.
    std::vector<std::string> rh = indexed("x", n);
    for (auto& s : indexed("grad", n)) rh.push_back(s);
    for (const char* s : {"lapse_defect", "hessian", "box_mp"}) rh.emplace_back(s);
    Csv residuals(rh);
    const FieldReport fr = field_analysis(run.field, p);
    for (const FieldPoint& fp : fr.points) {
        std::vector<std::string> cells;
        append(cells, fp.x);
        append(cells, fp.grad);
        for (double d : {std::abs(fp.lapse - 1.0), fp.hessian, fp.box_mp}) cells.push_back(num(d));
        residuals.row(cells);
    }

    // Recovered h on Σ.
    std::vector<std::string> hh = indexed("s", n - 1, 2);
    for (auto& s : indexed("x", n)) hh.push_back(s);
    for (int a = 0; a < n - 1; ++a)
        for (int b = a; b < n - 1; ++b) hh.push_back("h" + std::to_string(a + 2) + std::to_string(b + 2));
    Csv hcsv(hh);
    for (const SigmaSample& s : rep.sigma) {
        std::vector<std::string> cells;
        append(cells, s.s);
        append(cells, s.point);
        for (int a = 0; a < n - 1; ++a)
            for (int b = a; b < n - 1; ++b) cells.push_back(num(s.h(a, b)));
        hcsv.row(cells);
    }

    // Growth of the completeness integrand along the line.
    Csv growth({"T", "integral"});
    Json jgrowth = Json::array();
    for (double T = 1.0; T <= line.eta.t_max() + 1e-12; T *= 2.0) {
        const double I = completeness_integrand(line.eta, T, spec);
        growth.row({num(T), num(I)});
        jgrowth.push_back(Json{{"T", T}, {"integral", jnum(I)}});
    }

    j["tube_radius"] = run.tube_radius;
    j["berwald"] = rep.berwald;
    j["sigma_margin"] = jnum(rep.sigma_margin);
    j["sigma_samples"] = rep.sigma.size();
    j["checks"] = jchecks;
    j["completeness"] = jgrowth;
    j["status"] = verdict(all);

    out.primary("split_checks.csv", checks.text());
    out.file("split_field.csv", field.text());
    out.file("split_residuals.csv", residuals.text());
    out.file("split_h.csv", hcsv.text());
    out.file("split_completeness.csv", growth.text());
    out.json("split.json", j);
    log.info("split: " + verdict(all));
    return all ? kOk : kCheckFailed;
}

// ─── compare ──────────────────────────────────────────────────────────────────

struct CompareOptions {
    std::optional<std::string> N, eps, tmax, origin, times;
    int directions = 10;
    int steps = 10;
};

int cmd_compare(const Common& c, const ModelFile& mf, const CompareOptions& o, Output& out, const Log& log) {
    const ModelSpec& m = mf.model;
    const int n = m.n();
    const std::uint64_t seed = seed_of(c, mf);
    if (!m.position_independent())
        throw UsageError("compare needs a position-independent Lagrangian, '" + m.name() + "' is not");
    const double N = number_option(o.N, mf.run.number("N", kInfinity), "N");
    const double eps = number_option(o.eps, mf.run.number("epsilon", 0.0), "eps");
    const double tmax = number_option(o.tmax, mf.run.number("tmax", 5.0), "tmax");
    if (!(tmax > 0.0)) throw UsageError("--tmax must be positive");
    if (o.directions < 1 || o.steps < 1) throw UsageError("--directions and --steps must be positive");
    EpsilonSpec spec;
    try {
        spec = epsilon_constant(n, N, eps);
    } catch (const OutOfEpsilonRange& e) {
        throw UsageError(e.what());
    }
    const Vec z = o.origin ? vector_option(*o.origin, n, "origin") : Vec(Vec::Zero(n));
    std::vector<double> times;
    if (o.times) {
        try {
            times = parse_number_list(*o.times);
        } catch (const std::exception&) {
            throw UsageError("--times expects a comma-separated list of numbers");
        }
        for (double t : times)
            if (!(t > 0.0)) throw UsageError("--times must be positive");
    } else {
        for (int k = 1; k <= o.steps; ++k) times.push_back(tmax * k / o.steps);
    }

    // Unit directions: the normalized orientation seed first, then seeded samples.
    Rng rng(seed);
    std::vector<Vec> dirs;
    const Vec X = to_vec(m.orientation_at(span_of(z)));
    dirs.push_back(X / finsler_norm(m, z, X));
    while (static_cast<int>(dirs.size()) < o.directions) {
        const Vec v = sample_future_timelike(m, z, rng, 0.5);
        dirs.push_back(v / finsler_norm(m, z, v));
    }

    const Expr tau = flat_separation_expr(m, z);
    std::vector<std::string> head{"direction", "t"};
    for (auto& s : indexed("x", n)) head.push_back(s);
    for (const char* s : {"lhs", "rhs", "slack", "ric_N"}) head.emplace_back(s);
    Csv csv(head);
    double min_slack = kInfinity;
    int rows = 0;
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        const double t_end = *std::max_element(times.begin(), times.end());
        const GeodesicPath geod = integrate_geodesic(m, z, dirs[d], 0.0, t_end);
        for (double t : times) {
            const Vec x = geod.position(t);
            const double lhs = hessian_and_dalembertian(m, tau, x, -2.0).box_m;
            const double rhs = comparison_bound(geod, t, spec);
            const double slack = rhs - lhs;
            const double ric = weighted_ricci(m, x, geod.velocity(t), N);
            min_slack = std::min(min_slack, slack);
            std::vector<std::string> cells{std::to_string(d), num(t)};
            append(cells, x);
            for (double v : {lhs, rhs, slack, ric}) cells.push_back(num(v));
            csv.row(cells);
            ++rows;
        }
    }
    const bool pass = min_slack >= -1e-7;
    Json j = header("compare", c, mf, seed);
    j["N"] = jnum(N);
    j["epsilon"] = jnum(eps);
    j["c"] = jnum(spec.c);
    j["origin"] = jvec(z);
    j["directions"] = static_cast<int>(dirs.size());
    j["times"] = times;
    j["rows"] = rows;
    j["min_slack"] = jnum(min_slack);
    j["threshold"] = -1e-7;
    j["status"] = verdict(pass);
    out.primary("compare.csv", csv.text());
    out.json("compare.json", j);
    log.info("compare: " + verdict(pass) + ", min slack " + num(min_slack));
    return pass ? kOk : kCheckFailed;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("file", c.file, "model file")->required();
    sub->add_option("--seed", c.seed, "seed for every sampler (default: [run] seed, else 42)");
    sub->add_option("--out", c.out, "directory receiving CSV and JSON reports");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const Log log{err, level_from_env()};
    CLI::App app{"Lorentz-Finsler geometry engine", "lfg"};
    app.require_subcommand(1);

    Common common;
    ValidateOptions vo;
    GeodesicOptions go;
    BusemannCmdOptions bo;
    SplitOptions so;
    CompareOptions co;

    auto* validate = app.add_subcommand("validate", "sample the structural invariants of a model");
    add_common(validate, common);
    validate->add_option("--samples", vo.samples, "number of sampled points");

    auto* identities = app.add_subcommand("identities", "run the identity suite");
    add_common(identities, common);

    auto* geodesic = app.add_subcommand("geodesic", "integrate one geodesic");
    add_common(geodesic, common);
    geodesic->add_option("--from", go.from, "initial point, comma separated")->required();
    geodesic->add_option("--vel", go.vel, "initial velocity, comma separated")->required();
    geodesic->add_option("--tspan", go.tspan, "parameter interval t0,t1")->required();
    geodesic->add_option("--points", go.points, "number of output rows");

    auto* busemann = app.add_subcommand("busemann", "Busemann function of the [line] on a box grid");
    add_common(busemann, common);
    busemann->add_option("--grid", bo.grid, "RADIUS,COUNT around the line base");
    busemann->add_option("--horizon", bo.horizon, "line horizon (default: [line] horizon)");

    auto* split = app.add_subcommand("split", "splitting checks around the [line]");
    add_common(split, common);
    split->add_option("--p", so.p, "exponent of the p-d'Alembertian");
    split->add_option("--N", so.N, "effective dimension for the completeness curve (may be inf)");
    split->add_option("--eps", so.eps, "epsilon for the completeness curve");
    split->add_option("--horizon", so.horizon, "line horizon (default: [line] horizon)");

    auto* compare = app.add_subcommand("compare", "d'Alembertian comparison sweep of tau from a point");
    add_common(compare, common);
    compare->add_option("--N", co.N, "effective dimension (may be inf)");
    compare->add_option("--eps", co.eps, "epsilon");
    compare->add_option("--tmax", co.tmax, "largest parameter of the default time grid");
    compare->add_option("--times", co.times, "explicit comma-separated times");
    compare->add_option("--steps", co.steps, "number of times in the default grid");
    compare->add_option("--directions", co.directions, "number of unit directions");
    compare->add_option("--origin", co.origin, "base point z, comma separated");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        log.error(e.what());
        return kUsage;
    }

    ModelFile mf;
    try {
        mf = load_model_file(common.file);
    } catch (const ModelFileError& e) {
        log.error("parse error in " + common.file + ": " + e.what());
        return kUsage;
    }

    try {
        Output output(out, common.out);
        if (*validate) return cmd_validate(common, mf, vo, output, log);
        if (*identities) return cmd_identities(common, mf, output, log);
        if (*geodesic) return cmd_geodesic(common, mf, go, output, log);
        if (*busemann) return cmd_busemann(common, mf, bo, output, log);
        if (*split) return cmd_split(common, mf, so, output, log);
        if (*compare) return cmd_compare(common, mf, co, output, log);
    } catch (const UsageError& e) {
        log.error(e.what());
        return kUsage;
    } catch (const PreconditionFailure& e) {
        log.error(std::string("precondition failed: ") + e.what());
        return kUsage;
    } catch (const Error& e) {
        log.error(e.what());
        return kCheckFailed;
    } catch (const std::exception& e) {
        log.error(e.what());
        return kCheckFailed;
    }
    return kUsage;
}

}  // namespace lfg::cli
