/// @file sampling.hpp
/// @brief Seeded samplers for points, velocities and covectors inside a model's domain.
#pragma once

#include <cstdint>
#include <random>

#include "lfg/finsler.hpp"

namespace lfg {

using Rng = std::mt19937_64;

Vec gaussian_vector(int n, Rng& rng);
double uniform(Rng& rng, double lo, double hi);

/// Point in the box [−r, r]ⁿ whose orientation seed is a future timelike vector.
Vec sample_point(const ModelSpec& m, Rng& rng, double radius = 1.0);

/// Future timelike velocity: the normalized seed plus a perturbation of relative
/// size `spread`, rescaled by a factor in [0.5, 2].
Vec sample_future_timelike(const ModelSpec& m, const Vec& x, Rng& rng, double spread = 0.6);

/// Any nonzero velocity inside the declared domain; falls back to a future
/// timelike velocity when random directions keep missing the domain.
Vec sample_domain_velocity(const ModelSpec& m, const Vec& x, Rng& rng);

/// f = c·x + quadratic and exponential perturbations of relative size
/// `amplitude`, where −c = ∂L/∂v at the normalized seed over x0, so −df(x0)
/// starts inside the polar cone.
Expr random_temporal_function(const ModelSpec& m, const Vec& x0, Rng& rng, double amplitude = 0.1);

}  // namespace lfg
