#include "lfg/errors.hpp"

#include <sstream>

namespace lfg {

namespace {
std::string syntax_message(std::size_t offset, const std::vector<std::string>& expected, const std::string& found) {
    std::ostringstream os;
    os << "syntax error at offset " << offset << ": found " << found << ", expected one of {";
    for (std::size_t i = 0; i < expected.size(); ++i) os << (i ? ", " : "") << expected[i];
    os << "}";
    return os.str();
}
}  // namespace

SyntaxError::SyntaxError(std::size_t off, std::vector<std::string> exp, std::string f)
    : Error(syntax_message(off, exp, f)), offset(off), expected(std::move(exp)), found(std::move(f)) {}

UnknownVariable::UnknownVariable(std::size_t off, std::string n)
    : Error("unknown variable '" + n + "' at offset " + std::to_string(off)), offset(off), name(std::move(n)) {}

LeftDomain::LeftDomain(double t, const std::string& what) : Error(what), t_exit(t) {}

StepFailure::StepFailure(double t, const std::string& what) : Error(what), t_fail(t) {}

NotStraight::NotStraight(double s_, double t_, double d_)
    : Error("line is not straight: worst pair s=" + std::to_string(s_) + " t=" + std::to_string(t_) +
            " defect=" + std::to_string(d_)),
      s(s_), t(t_), defect(d_) {}

ModelFileError::ModelFileError(std::size_t l, const std::string& what)
    : Error("line " + std::to_string(l) + ": " + what), line(l) {}

}  // namespace lfg
