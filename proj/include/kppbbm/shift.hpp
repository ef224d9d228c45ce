#pragma once

#include "kppbbm/pde.hpp"
#include "kppbbm/rinfinity.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace kppbbm {

class WaveSolution;

enum class ShiftRoute { Direct, SelfSimilar };

const char* route_name(ShiftRoute r);

struct ShiftEstimate {
    double s_hat = 0.0;
    ShiftRoute route = ShiftRoute::Direct;
    double level_used = 0.5;
    std::vector<double> t_sequence;
    std::vector<double> offsets;
    double speed_correction = 0.0; // c_h - 2 removed from the front positions

    // direct route: offset(t) ~ s + c/sqrt(t) + a log(t)/t + b/t over the fit window
    bool fit_used = false;
    double fit_c = 0.0, fit_a = 0.0, fit_b = 0.0;
    double fit_rms = 0.0;
    double fit_condition = 0.0;
    double fit_t_min = 0.0;
    double s_two_term = 0.0;      // s + a log(t)/t + b/t, no 1/sqrt(t) term
    double plateau = 0.0;         // last raw offset
    double cauchy_spread = 0.0;   // max - min of offsets over the fit window

    // selfsimilar route
    double ell = 0.0;
    double r_inf = 0.0;
    bool converged = true;
};

struct ShiftOptions {
    double level = 0.5;
    double fit_fraction = 0.1;   // fit over t >= fit_fraction * T
    double fit_t_min = 20.0;
    bool sqrt_term = true;       // include c/sqrt(t); when false the two-term model is primary
    double sqrt_coef = NAN;      // finite: hold c fixed at this value
    bool discrete_speed = true;  // remove the O(h^2) speed error of the scheme
    double t_start = 1.0;        // snapshots before this are ignored
};

// Level crossing of a decreasing front in the lab coordinate of the snapshot.
// Throws NumericError when there is no crossing or the profile is not
// monotone around it.
double front_position(const GridProfile& g, double level);

// Offset x_U(level) - (X_level(t) - m(t)) per snapshot with t >= 1 and its
// extrapolated limit. Accepts lab and Bramson frame trajectories.
ShiftEstimate extract_shift_direct(const Trajectory& tr, const WaveSolution& wave, const ShiftOptions& opts = {});

// Extrapolated limit of s.offsets over s.t_sequence; fills s_hat and the fit fields.
void fit_offsets(ShiftEstimate& s, const ShiftOptions& opts = {});

// x_eps = ell - log r_inf(ell) with ell = log(1/eps).
ShiftEstimate x_eps_selfsimilar(double eps, const InitialProfile& profile, const RInfOptions& opts = {});

// Same from an existing r_infinity run.
ShiftEstimate shift_from_rinf(const RInfinityEstimate& r);

std::string shift_json(const ShiftEstimate& s);

} // namespace kppbbm
