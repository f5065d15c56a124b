/// @file tape.cpp
/// @brief Tape compilation and the per-root compile cache.
#include "lfg/tape.hpp"

#include <algorithm>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <unordered_map>

namespace lfg {

Tape::Tape(const std::vector<Expr>& roots) {
    std::vector<std::uint32_t> ids;
    {
        std::vector<std::uint32_t> stack;
        std::unordered_map<std::uint32_t, bool> seen;
        for (const Expr& r : roots) stack.push_back(r.id());
        while (!stack.empty()) {
            const std::uint32_t id = stack.back();
            stack.pop_back();
            if (!seen.emplace(id, true).second) continue;
            ids.push_back(id);
            const Node& n = Expr::from_id(id).node();
            switch (n.op) {
                case Op::Const:
                case Op::Var: break;
                case Op::Add:
                case Op::Sub:
                case Op::Mul:
                case Op::Div: stack.push_back(n.a); stack.push_back(n.b); break;
                default: stack.push_back(n.a); break;
            }
        }
    }
    std::sort(ids.begin(), ids.end());
    std::unordered_map<std::uint32_t, std::uint32_t> slot;
    code_.reserve(ids.size());
    for (std::uint32_t id : ids) {
        const Node& n = Expr::from_id(id).node();
        Instr in;
        in.op = n.op;
        in.node = id;
        switch (n.op) {
            case Op::Const: in.c = n.value; break;
            case Op::Var:
                in.a = static_cast<std::uint32_t>(n.var.index);
                in.num = n.var.role == Role::Position ? 0 : 1;
                if (n.var.role == Role::Position)
                    npos_ = std::max(npos_, n.var.index + 1);
                else
                    nvel_ = std::max(nvel_, n.var.index + 1);
                break;
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div:
                in.a = slot.at(n.a);
                in.b = slot.at(n.b);
                break;
            case Op::Pow:
                in.a = slot.at(n.a);
                in.num = n.num;
                in.den = n.den;
                break;
            default: in.a = slot.at(n.a); break;
        }
        slot.emplace(id, static_cast<std::uint32_t>(code_.size()));
        code_.push_back(in);
    }
    for (const Expr& r : roots) out_.push_back(slot.at(r.id()));
}

std::vector<double> Tape::operator()(std::span<const double> x, std::span<const double> v) const {
    std::vector<double> out(out_.size()), work;
    eval<double>(x, v, out, work);
    return out;
}

void Tape::domain_failure(std::size_t i, const char* what, std::span<const double> x,
                          std::span<const double> v) const {
    std::ostringstream os;
    os.precision(17);
    std::string node = Expr::from_id(code_[i].node).to_string();
    if (node.size() > 120) node = node.substr(0, 117) + "...";
    os << what << " in node `" << node << "` at x=(";
    for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
    os << ") v=(";
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? ", " : "") << v[k];
    os << ")";
    throw DomainError(os.str());
}

std::shared_ptr<const Tape> compiled(Expr root) {
    static std::shared_mutex mu;
    static std::unordered_map<std::uint32_t, std::shared_ptr<const Tape>> cache;
    {
        std::shared_lock lock(mu);
        if (auto it = cache.find(root.id()); it != cache.end()) return it->second;
    }
    auto tape = std::make_shared<const Tape>(std::vector<Expr>{root});
    std::unique_lock lock(mu);
    return cache.emplace(root.id(), tape).first->second;
}

double compile_and_evaluate(Expr e, const Bindings& b) {
    auto tape = compiled(e);
    std::vector<double> x(tape->positions(), 0.0), v(tape->velocities(), 0.0);
    std::vector<bool> xs(x.size(), false), vs(v.size(), false);
    for (const auto& [var, value] : b) {
        auto& arr = var.role == Role::Position ? x : v;
        auto& set = var.role == Role::Position ? xs : vs;
        if (var.index < static_cast<int>(arr.size())) {
            arr[var.index] = value;
            set[var.index] = true;
        }
    }
    for (const Variable& var : e.free_variables()) {
        const auto& set = var.role == Role::Position ? xs : vs;
        if (!set[var.index]) throw Error("unbound variable " + var.name());
    }
    return (*tape)(x, v)[0];
}

}  // namespace lfg
