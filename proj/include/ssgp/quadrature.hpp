#pragma once

#include <functional>

namespace ssgp {

/// Arguments of the scale-prior normalizing integral
///   H(p, q, r) = ∫_0^∞ x^p exp{-q x² - log(r + x⁻²)} dx
///              = ∫_0^∞ x^(p+2) e^(-q x²) / (1 + r x²) dx.
/// p may be -1 (arises for single-observation fits); q must be positive
/// (the integral diverges at q = 0 for every p ≥ 0), r must be positive.
struct LogHArgs {
  int p = 0;
  double q = 1.0;
  double r = 1.0;
};

/// log H(p, q, r) evaluated entirely on the log scale; never overflows or
/// underflows for p up to 1e6 and q spanning 1e-12 .. 1e12.
///
/// Throws std::invalid_argument for p < -1, r <= 0, or q <= 0, and
/// NumericalError if the node-doubling quadrature fails to converge.
double log_h(const LogHArgs& args);
double log_h(int p, double q, double r);

/// H(p, q, r) / H(p-2, q, r), computed as exp of a difference of logs.
/// This ratio is the only way fitting code consumes H.
double h_ratio(int p, double q, double r);

/// E[g(x)] where x has the (normalized) density proportional to
/// x^(p+2) e^(-q x²) / (1 + r x²) on (0, ∞).  Used for the expectations of
/// log-scale functions of the half-Cauchy variational factors, e.g.
/// E_q(log γ²) = E[-2 log x] under x = 1/γ.
double h_expectation(int p, double q, double r,
                     const std::function<double(double)>& g);

}  // namespace ssgp
