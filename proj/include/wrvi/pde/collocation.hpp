#pragma once

#include <functional>

#include "wrvi/ad/tape.hpp"
#include "wrvi/pde/problem.hpp"

namespace wrvi {

// Pointwise jet of a field: the value and the derivatives the residual
// rows consume. Unused entries may be left zero.
struct FieldJet {
  double u = 0.0;
  double u_t = 0.0;
  double u_x = 0.0;
  double u_xx = 0.0;
  double u_tt = 0.0;
};

using FieldEvaluator = std::function<FieldJet(double x, double t)>;
using DomainRowFn = std::function<double(const FieldJet&, double x, double t)>;

// Heat flow with solution-dependent conductivity eta(u, kappa) =
// (u kappa^2 + 1) / kappa: row = -u_t + (eta_u u_x^2 + eta u_xx) / gamma
// with eta_u = kappa. Requires kappa > 0.
double heat_domain_row(const FieldJet& j, double kappa, double gamma);
// Forced wave: row = u_tt - u_xx - sum_p a_p x^p.
double wave_domain_row(const FieldJet& j, double x, const ad::Tensor& forcing_coeffs);

// Stacked residual [domain; boundary; initial] over the spec's grid with
// the spec's boundary/initial conditions. z supplies (kappa, gamma) for
// heat problems and the forcing coefficients for wave problems.
ad::Tensor collocation_residual(const ProblemSpec& spec, const FieldEvaluator& field,
                                const ad::Tensor& z);

// Same stacking and boundary/initial rows, but with a caller-supplied
// domain row (plug-in coefficients for manufactured-solution checks).
ad::Tensor collocation_residual_custom(const ProblemSpec& spec, const FieldEvaluator& field,
                                       const DomainRowFn& domain_row);

// Taped path: field blocks evaluated over the grid (values [n] each).
// Interior derivatives come from whatever the caller differentiated —
// in training, forward tangents of the forward network's mean.
struct CollocationVars {
  ad::Var u_interior;
  ad::Var ut_interior;
  ad::Var ux_interior;
  ad::Var uxx_interior;
  ad::Var utt_interior;  // wave only
  ad::Var u_boundary;
  ad::Var u_initial;
  ad::Var ut_initial;  // wave only
};

ad::Var collocation_residual_taped(const ProblemSpec& spec, ad::Tape& tape,
                                   const CollocationVars& field, ad::Var z);

// Boundary / initial condition targets, exposed for reuse by the taped
// and pointwise paths.
double heat_boundary_value();              // u at both ends
double heat_initial_value(double x);       // sin(x) + 1
double wave_boundary_value(double t);      // -sin(t) at both ends
double wave_initial_value(double x);       // sin(x)
double wave_initial_velocity(double x);    // -cos(x)

}  // namespace wrvi
