#pragma once

#include <string>
#include <vector>

namespace kppbbm {

// Minimal-speed traveling wave U on a uniform grid. Stored as z = e^x U,
// which is O(1)-conditioned on both tails (z ~ e^x left, z ~ A x + B right).
class WaveSolution {
public:
    WaveSolution() = default;

    // Build from raw U samples; fits the right tail. Throws if the fit window
    // does not fit in the grid.
    static WaveSolution from_samples(double x_min, double h, const std::vector<double>& U);

    double x_min() const { return x_min_; }
    double x_max() const { return x_min_ + h_ * (z_.size() - 1); }
    double h() const { return h_; }
    std::size_t size() const { return z_.size(); }
    double x(std::size_t i) const { return x_min_ + h_ * i; }
    const std::vector<double>& z_values() const { return z_; }
    std::vector<double> U_values() const;

    double tail_A() const { return A_; }
    double tail_B() const { return B_; }
    double tail_fit_residual() const { return fit_residual_; }
    double k0() const { return k0_; }
    double ode_residual_norm() const { return residual_; }
    int newton_iterations() const { return iterations_; }
    bool normalized() const { return normalized_; }

    double eval_U(double x) const;
    double eval_zbar0(double x) const;
    // Interpolated z = e^x U without the exp/log round trip.
    double eval_z(double x) const;

    // x where U = level, by bisection on the interpolant.
    double level_point(double level) const;

private:
    friend WaveSolution solve_wave(double, double, double, double);
    friend WaveSolution normalize_wave(const WaveSolution&);

    double x_min_ = 0.0;
    double h_ = 0.0;
    std::vector<double> z_;
    double A_ = 0.0, B_ = 0.0, fit_residual_ = 0.0;
    double k0_ = 0.0;
    double residual_ = 0.0;
    int iterations_ = 0;
    bool normalized_ = false;

    void fit_tail();
    double raw_z(double x) const;  // interpolant with tail/left extensions
};

WaveSolution solve_wave(double x_min, double x_max, double h, double tol);
WaveSolution normalize_wave(const WaveSolution& raw);

struct WaveIdentityResiduals {
    double mass = 0.0;           // int e^{-x} zbar0^2 dx
    double first_moment = 0.0;   // int x e^{-x} zbar0^2 dx
    double residual_mass = 0.0;
    double residual_first_moment = 0.0;
};

WaveIdentityResiduals wave_identity_checks(const WaveSolution& wave);

// G(q) = int_{-q}^inf (x + q) e^{-x} zbar0^2 dx
double eval_G(const WaveSolution& wave, double q);
// q - k0 - int_{-inf}^{-q} (x + q) e^{-x} zbar0^2 dx
double eval_G_split(const WaveSolution& wave, double q);

void write_wave_csv(const WaveSolution& wave, const std::string& path);
std::string wave_json(const WaveSolution& wave);

} // namespace kppbbm
