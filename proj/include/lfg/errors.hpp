/// @file errors.hpp
/// @brief Exception hierarchy shared by all modules.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lfg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SyntaxError : Error {
    SyntaxError(std::size_t offset, std::vector<std::string> expected, std::string found);
    std::size_t offset;
    std::vector<std::string> expected;
    std::string found;
};

struct UnknownVariable : Error {
    UnknownVariable(std::size_t offset, std::string name);
    std::size_t offset;
    std::string name;
};

struct DomainError : Error {
    using Error::Error;
};

struct SignatureError : Error {
    using Error::Error;
};

struct InsufficientSamples : Error {
    using Error::Error;
};

struct NotInPolarCone : Error {
    using Error::Error;
};

struct NotTemporal : Error {
    using Error::Error;
};

struct OutOfEpsilonRange : Error {
    using Error::Error;
};

struct NotUnitSpeed : Error {
    using Error::Error;
};

struct InapplicableCurvature : Error {
    using Error::Error;
};

struct LeftDomain : Error {
    LeftDomain(double t_exit, const std::string& what);
    double t_exit;
};

struct StepFailure : Error {
    StepFailure(double t_fail, const std::string& what);
    double t_fail;
};

struct FrameSingular : Error {
    using Error::Error;
};

struct IllConditioned : Error {
    using Error::Error;
};

struct NoConvergence : Error {
    using Error::Error;
};

struct NonTimelikeLimit : Error {
    using Error::Error;
};

struct NotStraight : Error {
    NotStraight(double s, double t, double defect);
    double s, t, defect;
};

struct GridTooCoarse : Error {
    using Error::Error;
};

struct PreconditionFailure : Error {
    using Error::Error;
};

struct ModelFileError : Error {
    ModelFileError(std::size_t line, const std::string& what);
    std::size_t line;
};

}  // namespace lfg
