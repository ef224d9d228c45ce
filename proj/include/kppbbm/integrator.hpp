#pragma once

#include "kppbbm/banded.hpp"

#include <functional>
#include <vector>

namespace kppbbm {

// Semi-discrete system y' = F(t, y) with a banded Jacobian.
class MolSystem {
public:
    virtual ~MolSystem() = default;
    virtual std::size_t size() const = 0;
    virtual int bandwidth() const = 0;
    virtual void rhs(double t, const std::vector<double>& y, std::vector<double>& f) const = 0;
    virtual void jacobian(double t, const std::vector<double>& y, BandMatrix& J) const = 0;
    // Restore algebraic relations (extrapolated boundary nodes) after a stage.
    virtual void enforce(std::vector<double>& /*y*/) const {}
};

struct StepControl {
    double atol = 1e-10;
    double rtol = 1e-7;     // relative to max|y|
    double dt_init = 1e-3;
    double dt_max = 1e100;
    double dt_min = 1e-12;
    double max_growth = 3.0;
};

struct IntegratorStats {
    long accepted = 0;
    long rejected = 0;
    long newton_iterations = 0;
    double last_dt = 0.0;
};

// TR-BDF2 (L-stable, second order) with step-doubling error control.
class TrBdf2 {
public:
    using Observer = std::function<void(double t, const std::vector<double>& y)>;

    TrBdf2(const MolSystem& sys, StepControl ctrl);

    // Advance y from t to t_end exactly; observer runs after every accepted step.
    void advance(double& t, std::vector<double>& y, double t_end, const Observer& obs = {});

    const IntegratorStats& stats() const { return stats_; }
    double dt() const { return dt_; }

private:
    const MolSystem& sys_;
    StepControl ctrl_;
    double dt_;
    IntegratorStats stats_;
    BandMatrix J_, M_;
    std::vector<double> f0_, f_, rhs_, g_, delta_, ytmp_, yg_;

    // One TR-BDF2 step; returns false if Newton failed.
    bool step(double t, const std::vector<double>& y, double dt, std::vector<double>& out);
    bool stage(double t, double cdt, const std::vector<double>& rhs, std::vector<double>& y);
};

} // namespace kppbbm
