/// @file model.hpp
/// @brief Model spacetimes: Lagrangian, weight, domain, orientation, and the
///        compiled derivative tapes every geometric routine evaluates.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfg/expr.hpp"
#include "lfg/tape.hpp"

namespace lfg {

/// Families with a closed-form time separation.
enum class Family { General, Minkowski, Flat, Product };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// One domain clause `expr > 0` (strict) or `expr >= 0`.
struct Constraint {
    Expr expr;
    bool strict = true;
    std::string source;
};

/// Index layout of the compiled tapes.
struct ModelTapes {
    int n = 0;
    Tape lagrangian;   ///< [L]
    Tape basic;        ///< [L, ∂L/∂v (n), ∂L/∂x (n), g (sym)]
    Tape conn;         ///< [g (sym), ∂g/∂x (sym·n), ∂g/∂v (sym·n), b (n), ∂b/∂v (n²), ∂b/∂x (n²)]
    Tape spray;        ///< [g (sym), b (n)]
    Tape weight;       ///< [σ, ∂ log σ (n)]
    Tape domain;       ///< constraint expressions
    Tape orientation;  ///< X(x) components

    int sym_count() const { return n * (n + 1) / 2; }
    int sym(int i, int j) const {
        if (i > j) std::swap(i, j);
        return i * n - i * (i - 1) / 2 + (j - i);
    }
    // Offsets into `conn`.
    int c_g() const { return 0; }
    int c_dgx() const { return sym_count(); }
    int c_dgv() const { return sym_count() * (1 + n); }
    int c_b() const { return sym_count() * (1 + 2 * n); }
    int c_dbv() const { return c_b() + n; }
    int c_dbx() const { return c_dbv() + n * n; }
};

class ModelSpec {
public:
    ModelSpec() = default;
    ModelSpec(std::string name, int n, Expr lagrangian, Expr weight, std::vector<Constraint> domain,
              std::vector<Expr> orientation, Family family = Family::General);

    const std::string& name() const { return name_; }
    int n() const { return n_; }
    Family family() const { return family_; }
    Expr lagrangian() const { return lagrangian_; }
    Expr weight() const { return weight_; }
    const std::vector<Constraint>& domain() const { return domain_; }
    const std::vector<Expr>& orientation() const { return orientation_; }
    bool reversed() const { return reversed_; }

    const ModelTapes& tapes() const;

    /// Strict membership in the declared domain; v = 0 is never inside.
    bool in_domain(std::span<const double> x, std::span<const double> v) const;
    std::vector<double> orientation_at(std::span<const double> x) const;
    double lagrangian_at(std::span<const double> x, std::span<const double> v) const;
    double weight_at(std::span<const double> x) const;
    /// True when L carries no position dependence.
    bool position_independent() const;

    ModelSpec reversed_model() const;

private:
    std::string name_;
    int n_ = 0;
    Family family_ = Family::General;
    Expr lagrangian_, weight_;
    std::vector<Constraint> domain_;
    std::vector<Expr> orientation_;
    bool reversed_ = false;

    struct Cache;
    std::shared_ptr<Cache> cache_;
};

/// The same structure with L̄(v) = L(−v), seed −X, σ unchanged.
ModelSpec reverse_model(const ModelSpec& m);

// ─── Model files ──────────────────────────────────────────────────────────────

struct LineConfig {
    std::vector<double> base;
    std::vector<double> velocity;
    double horizon = 100.0;
};

/// Loosely typed [run] settings.
class RunSettings {
public:
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    double number(const std::string& key, double fallback) const;
    std::string text(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
    const std::map<std::string, std::string>& all() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

struct ModelFile {
    ModelSpec model;
    std::optional<LineConfig> line;
    RunSettings run;
    Parameters params;
};

/// Parses the sectioned key = value format. Throws ModelFileError (wrapping
/// SyntaxError details) on malformed input.
ModelFile parse_model_text(const std::string& text);
ModelFile load_model_file(const std::string& path);

std::vector<double> parse_number_list(const std::string& s);

}  // namespace lfg
