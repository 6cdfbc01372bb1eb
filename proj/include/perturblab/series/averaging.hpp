#pragma once

#include <functional>

#include "perturblab/odeflow.hpp"

namespace perturblab::series {

using odeflow::VectorField;

// y -> (1/T) int_0^T g(y, t) dt, trapezoid rule on `nodes` points (spectral for periodic g).
VectorField averaged_field(const VectorField& g, int nodes = 256);

// w(y, t) = int_0^t (g(y, s) - <g>(y)) ds, the near-identity change x = y + eps w(y, t).
std::function<Vec(const Vec&, double)> averaging_generator(const VectorField& g, int nodes = 256);

// Rotating-frame form of a planar field: h = e^{-B(omega) t} x with B(omega) = [[0,1],[-omega^2,0]].
VectorField van_der_pol_transform(const VectorField& f, double omega);

// e^{B(omega) t}
Mat rotation_flow(double omega, double t);

}  // namespace perturblab::series
