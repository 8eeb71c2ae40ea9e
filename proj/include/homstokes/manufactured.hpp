#pragma once

#include "homstokes/field.hpp"

namespace homstokes {

/// Divergence-free velocity from the stream function phi = sin^2(pi x) sin^2(pi y):
/// u = (d2 phi, -d1 phi), pressure p = cos(pi x) cos(pi y) (mean zero on the unit square).
namespace manufactured {

void velocity(Vec2 x, double* out);
/// out[2*a + b] = d_b u_a
void velocity_gradient(Vec2 x, double* out);
void pressure(Vec2 x, double* out);
/// -lap u + grad p
void forcing(Vec2 x, double* out);

}  // namespace manufactured

/// L2 and H1-seminorm errors of a velocity-space field against an exact
/// function (and gradient) by quadrature.
double l2_error(const Field& f, const PointFunction& exact);
double h1_seminorm_error(const Field& f, const PointFunction& exact_gradient);
/// L2 error after removing the mean difference.
double l2_quotient_error(const Field& f, const PointFunction& exact);

}  // namespace homstokes
