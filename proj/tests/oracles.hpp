#pragma once

#include <functional>

// Reference values computed without the library: moment ODEs by RK4, exact discrete-scheme
// recursions, Gaussian expectations by double-exponential quadrature, densities by Simpson.
namespace oracle {

struct Moments {
  double mean;
  double second;
};

// dx = (x + 2) dt + 3 dw, x0 = -1; `noise_var` scales the diffusion variance (1 for the SDE itself).
Moments linear_additive_ode(double t, double noise_var = 1.0);
// Expected mean and second moment of y_K for y' = y + eps (y + 2) + 3 sqrt(eps) nu, E nu = 0, E nu^2 = noise_var.
Moments linear_additive_discrete(double eps, int steps, double noise_var = 1.0);

// dx = 1.5 x dt + (x/10, x/10) dw, x0 = 0.1.
Moments linear_multiplicative_ode(double t);

// E[asinh(Y)], Y ~ N(sinh(x0) e^{-t}, (1 - e^{-2t}) / 2).
double tanh_sech_mean(double t, double x0 = -1.0);

double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000);

double std_normal_pdf(double x);
double gumbel_pdf(double x, double mu = 0.0, double beta = 1.0);
// (x-3)(x-1)(x+1)(x+2), expanded independently by multiplying the factors.
double quartic(double x);

// exp(beta log pi + bias x) normalized on [lo, hi] by Simpson.
std::function<double(double)> normalized(const std::function<double(double)>& log_unnorm, double lo, double hi);

}  // namespace oracle
