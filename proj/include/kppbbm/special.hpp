#pragma once

namespace kppbbm {

// Scaled complementary error function erfcx(x) = exp(x^2) erfc(x).
double erfcx(double x);

// For w >= 2, the tail K(w) of the continued fraction
//   sqrt(pi) erfcx(w) = 1 / (w + K(w)),  K(w) = (1/2)/(w + 1/(w + (3/2)/(w + ...))).
// Lets callers form 1/w - sqrt(pi) erfcx(w) = K / (w (w + K)) without cancellation.
double erfcx_cf_tail(double w);

// psibar'(eta) = e^{eta^2/4} int_eta^inf e^{-y^2/4} dy = sqrt(pi) erfcx(eta/2).
double psibar_prime(double eta);

// 2/z - psibar'(z), evaluated stably for large z.
double psibar_log_defect(double z);

} // namespace kppbbm
