/// @file model.cpp
/// @brief ModelSpec construction, lazily compiled tapes, and the model-file reader.
#include "lfg/model.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "lfg/errors.hpp"

namespace lfg {

std::string to_string(Family f) {
    switch (f) {
        case Family::Minkowski: return "minkowski";
        case Family::Flat: return "flat";
        case Family::Product: return "product";
        default: return "general";
    }
}

Family family_from_string(const std::string& s) {
    if (s == "minkowski") return Family::Minkowski;
    if (s == "flat") return Family::Flat;
    if (s == "product") return Family::Product;
    if (s == "general" || s.empty()) return Family::General;
    throw Error("unknown family '" + s + "'");
}

// ─── Tapes ────────────────────────────────────────────────────────────────────

struct ModelSpec::Cache {
    std::once_flag once;
    ModelTapes tapes;
};

namespace {

ModelTapes build_tapes(const ModelSpec& m) {
    const int n = m.n();
    ModelTapes t;
    t.n = n;
    const Expr L = m.lagrangian();
    std::vector<Expr> p(n), Lx(n);
    std::vector<std::vector<Expr>> g(n, std::vector<Expr>(n)), Lxv(n, std::vector<Expr>(n));
    for (int i = 0; i < n; ++i) {
        p[i] = differentiate(L, vvar(i));
        Lx[i] = differentiate(L, xvar(i));
    }
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) g[i][j] = g[j][i] = differentiate(p[i], vvar(j));
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) Lxv[j][l] = differentiate(p[l], xvar(j));

    std::vector<Expr> gsym;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) gsym.push_back(g[i][j]);

    // b_l = Σ_j v^j ∂x_j ∂v_l L − ∂x_l L, so that G = g⁻¹ b.
    std::vector<Expr> b(n);
    for (int l = 0; l < n; ++l) {
        Expr s = Expr::constant(0.0);
        for (int j = 0; j < n; ++j) s = s + Expr::variable(vvar(j)) * Lxv[j][l];
        b[l] = s - Lx[l];
    }

    std::vector<Expr> roots{L};
    t.lagrangian = Tape(roots);

    roots = {L};
    roots.insert(roots.end(), p.begin(), p.end());
    roots.insert(roots.end(), Lx.begin(), Lx.end());
    roots.insert(roots.end(), gsym.begin(), gsym.end());
    t.basic = Tape(roots);

    roots = gsym;
    for (const Expr& e : gsym)
        for (int k = 0; k < n; ++k) roots.push_back(differentiate(e, xvar(k)));
    for (const Expr& e : gsym)
        for (int k = 0; k < n; ++k) roots.push_back(differentiate(e, vvar(k)));
    roots.insert(roots.end(), b.begin(), b.end());
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k) roots.push_back(differentiate(b[l], vvar(k)));
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k) roots.push_back(differentiate(b[l], xvar(k)));
    t.conn = Tape(roots);

    roots = gsym;
    roots.insert(roots.end(), b.begin(), b.end());
    t.spray = Tape(roots);

    const Expr sigma = m.weight();
    roots = {sigma};
    for (int k = 0; k < n; ++k) roots.push_back(differentiate(sigma, xvar(k)) / sigma);
    t.weight = Tape(roots);

    roots.clear();
    for (const Constraint& c : m.domain()) roots.push_back(c.expr);
    t.domain = Tape(roots);

    t.orientation = Tape(m.orientation());
    return t;
}

void check_variables(Expr e, int n, bool allow_velocity, const std::string& what) {
    for (const Variable& v : e.free_variables()) {
        if (v.index >= n) throw Error(what + " uses " + v.name() + " beyond dimension " + std::to_string(n));
        if (!allow_velocity && v.role == Role::Velocity)
            throw Error(what + " must not depend on velocity variable " + v.name());
    }
}

}  // namespace

ModelSpec::ModelSpec(std::string name, int n, Expr lagrangian, Expr weight, std::vector<Constraint> domain,
                     std::vector<Expr> orientation, Family family)
    : name_(std::move(name)),
      n_(n),
      family_(family),
      lagrangian_(lagrangian),
      weight_(weight),
      domain_(std::move(domain)),
      orientation_(std::move(orientation)),
      cache_(std::make_shared<Cache>()) {
    if (n_ < 2 || n_ > 4) throw Error("dimension must be between 2 and 4");
    if (static_cast<int>(orientation_.size()) != n_)
        throw Error("orientation seed needs " + std::to_string(n_) + " components");
    check_variables(lagrangian_, n_, true, "lagrangian");
    check_variables(weight_, n_, false, "weight");
    for (const Expr& e : orientation_) check_variables(e, n_, false, "orientation");
    for (const Constraint& c : domain_) check_variables(c.expr, n_, true, "domain");
}

const ModelTapes& ModelSpec::tapes() const {
    std::call_once(cache_->once, [this] { cache_->tapes = build_tapes(*this); });
    return cache_->tapes;
}

bool ModelSpec::in_domain(std::span<const double> x, std::span<const double> v) const {
    bool nonzero = false;
    for (double c : v) nonzero = nonzero || c != 0.0;
    if (!nonzero) return false;
    for (double c : x) if (!std::isfinite(c)) return false;
    for (double c : v) if (!std::isfinite(c)) return false;
    if (domain_.empty()) return true;
    std::vector<double> out(domain_.size()), work;
    try {
        tapes().domain.eval<double>(x, v, out, work);
    } catch (const DomainError&) {
        return false;
    }
    for (std::size_t i = 0; i < domain_.size(); ++i) {
        if (!(domain_[i].strict ? out[i] > 0.0 : out[i] >= 0.0)) return false;
    }
    return true;
}

std::vector<double> ModelSpec::orientation_at(std::span<const double> x) const {
    std::vector<double> v(n_, 0.0);
    return tapes().orientation(x, v);
}

double ModelSpec::lagrangian_at(std::span<const double> x, std::span<const double> v) const {
    std::vector<double> out(1), work;
    tapes().lagrangian.eval<double>(x, v, out, work);
    return out[0];
}

double ModelSpec::weight_at(std::span<const double> x) const {
    std::vector<double> v(n_, 0.0);
    return tapes().weight(x, v)[0];
}

bool ModelSpec::position_independent() const {
    for (const Variable& v : lagrangian_.free_variables())
        if (v.role == Role::Position) return false;
    return true;
}

ModelSpec ModelSpec::reversed_model() const {
    std::map<Variable, Expr> flip;
    for (int i = 0; i < n_; ++i) flip[vvar(i)] = -Expr::variable(vvar(i));
    std::vector<Constraint> dom;
    for (const Constraint& c : domain_) dom.push_back({substitute(c.expr, flip), c.strict, c.source});
    std::vector<Expr> orient;
    for (const Expr& e : orientation_) orient.push_back(-e);
    ModelSpec r(name_, n_, substitute(lagrangian_, flip), weight_, std::move(dom), std::move(orient), family_);
    r.reversed_ = !reversed_;
    return r;
}

ModelSpec reverse_model(const ModelSpec& m) { return m.reversed_model(); }

// ─── Model files ──────────────────────────────────────────────────────────────

double RunSettings::number(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        double d = std::stod(it->second, &used);
        if (used != it->second.size()) throw Error("");
        return d;
    } catch (...) {
        throw Error("[run] " + key + " is not a number: '" + it->second + "'");
    }
}

std::string RunSettings::text(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::vector<double> RunSettings::numbers(const std::string& key, std::vector<double> fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_number_list(it->second);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, const std::string& sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string::npos) break;
        start = pos + sep.size();
    }
    return parts;
}

struct Entry {
    std::string value;
    std::size_t line = 0;
};
using Section = std::map<std::string, Entry>;

Expr parse_at(const Entry& e, const Parameters& params, const std::string& key) {
    try {
        return parse(e.value, params);
    } catch (const SyntaxError& err) {
        throw ModelFileError(e.line, key + ": " + err.what());
    } catch (const UnknownVariable& err) {
        throw ModelFileError(e.line, key + ": " + err.what());
    }
}

Constraint parse_clause(const std::string& clause, const Entry& e, const Parameters& params) {
    static const char* ops[] = {">=", "<=", ">", "<"};
    for (const char* op : ops) {
        const auto pos = clause.find(op);
        if (pos == std::string::npos) continue;
        const std::string l = trim(clause.substr(0, pos));
        const std::string r = trim(clause.substr(pos + std::string(op).size()));
        const Expr le = parse_at({l, e.line}, params, "domain");
        const Expr re = parse_at({r, e.line}, params, "domain");
        const bool greater = op[0] == '>';
        const bool strict = op[1] == '\0';
        return {greater ? le - re : re - le, strict, clause};
    }
    throw ModelFileError(e.line, "domain clause '" + clause + "' needs one of >, >=, <, <=");
}

}  // namespace

std::vector<double> parse_number_list(const std::string& s) {
    std::vector<double> out;
    for (const std::string& part : split(s, ",")) {
        if (part.empty()) throw Error("empty entry in number list '" + s + "'");
        std::size_t used = 0;
        double d = 0;
        try {
            d = std::stod(part, &used);
        } catch (...) {
            throw Error("not a number: '" + part + "'");
        }
        if (used != part.size()) throw Error("not a number: '" + part + "'");
        out.push_back(d);
    }
    return out;
}

ModelFile parse_model_text(const std::string& text) {
    std::map<std::string, Section> sections;
    std::istringstream in(text);
    std::string raw, current;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ModelFileError(lineno, "unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (current != "model" && current != "params" && current != "line" && current != "run")
                throw ModelFileError(lineno, "unknown section [" + current + "]");
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ModelFileError(lineno, "expected 'key = value'");
        if (current.empty()) throw ModelFileError(lineno, "entry outside of any section");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ModelFileError(lineno, "empty key");
        if (sections[current].count(key)) throw ModelFileError(lineno, "duplicate key '" + key + "'");
        sections[current][key] = {trim(line.substr(eq + 1)), lineno};
    }
    if (!sections.count("model")) throw ModelFileError(lineno, "missing [model] section");

    ModelFile mf;
    for (const auto& [key, e] : sections["params"]) {
        try {
            std::size_t used = 0;
            const double d = std::stod(e.value, &used);
            if (used != e.value.size()) throw Error("");
            mf.params[key] = d;
        } catch (...) {
            throw ModelFileError(e.line, "parameter '" + key + "' is not a number");
        }
    }

    Section& ms = sections["model"];
    auto need = [&](const std::string& key) -> const Entry& {
        auto it = ms.find(key);
        if (it == ms.end()) throw ModelFileError(lineno, "[model] is missing '" + key + "'");
        return it->second;
    };
    for (const auto& [key, e] : ms) {
        if (key != "name" && key != "n" && key != "lagrangian" && key != "weight" && key != "domain" &&
            key != "orientation" && key != "family")
            throw ModelFileError(e.line, "unknown [model] key '" + key + "'");
    }
    const Entry& ne = need("n");
    int n = 0;
    try {
        std::size_t used = 0;
        n = std::stoi(ne.value, &used);
        if (used != ne.value.size()) throw Error("");
    } catch (...) {
        throw ModelFileError(ne.line, "n must be an integer");
    }
    if (n < 2 || n > 4) throw ModelFileError(ne.line, "n must be between 2 and 4");

    const std::string name = ms.count("name") ? ms["name"].value : "unnamed";
    const Expr L = parse_at(need("lagrangian"), mf.params, "lagrangian");
    const Expr sigma = ms.count("weight") ? parse_at(ms["weight"], mf.params, "weight") : Expr::constant(1.0);

    std::vector<Constraint> dom;
    if (ms.count("domain") && !ms["domain"].value.empty()) {
        for (const std::string& clause : split(ms["domain"].value, "&&")) {
            if (clause.empty()) throw ModelFileError(ms["domain"].line, "empty domain clause");
            dom.push_back(parse_clause(clause, ms["domain"], mf.params));
        }
    }

    const Entry& oe = need("orientation");
    std::vector<Expr> orient;
    for (const std::string& comp : split(oe.value, ",")) orient.push_back(parse_at({comp, oe.line}, mf.params, "orientation"));

    Family family = Family::General;
    if (ms.count("family")) {
        try {
            family = family_from_string(ms["family"].value);
        } catch (const Error& err) {
            throw ModelFileError(ms["family"].line, err.what());
        }
    }
    try {
        mf.model = ModelSpec(name, n, L, sigma, std::move(dom), std::move(orient), family);
    } catch (const ModelFileError&) {
        throw;
    } catch (const Error& err) {
        throw ModelFileError(need("lagrangian").line, err.what());
    }

    if (sections.count("line")) {
        Section& ls = sections["line"];
        LineConfig lc;
        auto vec = [&](const std::string& key) {
            auto it = ls.find(key);
            if (it == ls.end()) throw ModelFileError(lineno, "[line] is missing '" + key + "'");
            try {
                auto v = parse_number_list(it->second.value);
                if (static_cast<int>(v.size()) != n) throw Error("expected " + std::to_string(n) + " components");
                return v;
            } catch (const Error& err) {
                throw ModelFileError(it->second.line, key + ": " + err.what());
            }
        };
        lc.base = vec("base");
        lc.velocity = vec("velocity");
        if (ls.count("horizon")) {
            try {
                lc.horizon = std::stod(ls["horizon"].value);
            } catch (...) {
                throw ModelFileError(ls["horizon"].line, "horizon is not a number");
            }
        }
        mf.line = lc;
    }
    for (const auto& [key, e] : sections["run"]) mf.run.set(key, e.value);
    return mf;
}

ModelFile load_model_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ModelFileError(0, "cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_model_text(ss.str());
}

}  // namespace lfg
