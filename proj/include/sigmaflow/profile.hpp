#pragma once

#include <functional>
#include <vector>

#include "sigmaflow/geometry.hpp"

namespace sigmaflow {

/// A radial function known analytically through its 2-jet.
struct RadialProfile {
  std::function<Jet(double r)> jet;
  /// Grid value to use at nodes where the profile is infinite (a blow-up
  /// boundary), given the node radius and grid spacing. Optional.
  std::function<double(double r, double h)> singular_trace;

  Jet operator()(double r) const { return jet(r); }
};

/// Samples the profile at every grid node. Non-finite nodes fall back to
/// singular_trace; without one, throws InvalidInput.
std::vector<double> sample(const RadialProfile& profile, const RadialGrid& grid);

RadialProfile constant_profile(double c);
RadialProfile shifted(RadialProfile base, double c);

/// Poincare-ball conformal factor u*(r) = log(2R / (R^2 - r^2)), the hyperbolic
/// metric on the Euclidean ball of radius R; solves the sigma_k-Ricci equation
/// for every k and blows up like -log(R - r).
struct PoincareBall {
  double R = 1.0;

  double value(double r) const;
  Jet jet(double r) const;
  /// Mean of u* over the last half cell [R - h/2, R] (the log singularity is
  /// integrable); used as the grid value of u* at the blow-up node.
  double half_cell_trace(double h) const;
  RadialProfile profile() const;
};

}  // namespace sigmaflow
