#pragma once

#include "kppbbm/integrator.hpp"
#include "kppbbm/profile.hpp"

#include <functional>
#include <string>
#include <vector>

namespace kppbbm {

// lab: u(t,x). bramson: u in y = x - 2t + (3/2) log(t+1).
// zframe: z = e^y u in the Bramson frame, shifted by ell. selfsimilar: r(tau, eta).
enum class Frame { Lab, Bramson, ZFrame, SelfSimilar };

const char* frame_name(Frame f);

struct GridProfile {
    Frame frame = Frame::Lab;
    double x0 = 0.0;
    double h = 0.0;
    std::vector<double> values;
    double time = 0.0;
    double meta = 0.0;   // eps for lab/bramson, ell for zframe/selfsimilar

    std::size_t size() const { return values.size(); }
    double x(std::size_t i) const { return x0 + h * i; }
    double x_end() const { return x0 + h * (values.size() - 1); }
    // Linear interpolation; zero outside the grid.
    double interpolate(double x) const;
};

struct Trajectory {
    Frame frame = Frame::Lab;
    double h = 0.0;
    double meta = 0.0;
    StepControl control;
    IntegratorStats stats;
    std::vector<GridProfile> snapshots;
    double max_overshoot = 0.0;   // lab/bramson: max(u - 1, -u) over all accepted steps
};

// Front position estimates. m(t) = 2t - (3/2) log t for t >= 1, 2t below.
double bramson_m(double t);
bool bramson_m_flagged(double t);
// Offset of the Bramson frame: x = y + 2t - (3/2) log(t+1).
double bramson_frame_offset(double t);

// Linear spreading speed of the semi-discrete scheme on spacing h, in lab
// coordinates: min over lambda of the discrete dispersion relation. Equals
// 2 + O(h^2); the Bramson frame's centered advection changes the O(h^2) term.
double discrete_front_speed(Frame frame, double h);

struct LabOptions {
    Frame frame = Frame::Lab;      // Lab or Bramson
    double x_left = -30.0;
    double x_right = 0.0;          // 0: automatic, front estimate + 6 sqrt(T) + margin
    StepControl control{1e-10, 1e-7, 1e-3, 1.0, 1e-12, 3.0};
    std::vector<double> output_times;  // T is always included
    bool check_domain = true;
};

// u_t = u_xx + u - u^2 with u(0) = eps*phi, Neumann left, u = 0 right.
Trajectory solve_lab(const InitialProfile& init, double eps, double h, double T,
                     const LabOptions& opts = {});

// Same equation from arbitrary initial values on a given grid (used for
// spatially uniform and synthetic tests).
Trajectory solve_lab_from(GridProfile u0, double T, const LabOptions& opts);

struct ZFrameOptions {
    double A = 25.0;               // left end at -A
    double x_right = 0.0;          // 0: ell + L0 + 6 sqrt(T)
    StepControl control{1e-12, 1e-7, 1e-3, 1e100, 1e-12, 3.0};
    std::vector<double> output_times;
    bool sink = true;              // false drops -e^{-x} z^2 (diagnostic)
    // called after every accepted step with the full nodal vector
    std::function<void(double t, const std::vector<double>& z)> observer;
};

// z_t = z_xx + (3/(2(t+1)))(z - z_x) - e^{-x} z^2, z(0,x) = psi0(x - ell),
// psi0 = e^x phi. Dirichlet z(-A) = e^{-A}; z_xx = 0 at the right end.
Trajectory solve_zframe(double ell, const InitialProfile& profile, double h, double T,
                        const ZFrameOptions& opts = {});

// u(t, x) from a zframe snapshot: u = e^{-(y+ell)} z(t, y+ell), y = x - 2t + (3/2) log(t+1).
double lab_from_zframe(const GridProfile& z, double ell, double x);

void write_snapshot_csv(const GridProfile& g, const std::string& path);

} // namespace kppbbm
