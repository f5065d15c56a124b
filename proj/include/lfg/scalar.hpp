/// @file scalar.hpp
/// @brief Elementary operations shared by every evaluator so that the tape and
///        the recursive reference produce bit-identical results.
#pragma once

#include <cmath>
#include <cstdlib>

namespace lfg {

inline double value_of(double d) { return d; }

/// Real power x^(num/den) with den > 0 and the fraction reduced. Negative
/// bases are admitted only for odd denominators.
inline double rpow(double x, int num, int den) {
    if (den == 1) return std::pow(x, static_cast<double>(num));
    const double r = static_cast<double>(num) / static_cast<double>(den);
    if (x >= 0.0) return std::pow(x, r);
    const double mag = std::pow(-x, r);
    return (std::abs(num) % 2 == 1) ? -mag : mag;
}

/// True when rpow(x, num, den) is defined (and finite) at x.
inline bool rpow_defined(double x, int num, int den) {
    if (x == 0.0) return num >= 0;
    if (x < 0.0) return den % 2 == 1;
    return true;
}

}  // namespace lfg
