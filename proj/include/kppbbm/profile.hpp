#pragma once

#include <string>
#include <vector>

namespace kppbbm {

// Right-compactly-supported nonnegative profile, stored as linear pieces
// phi(x) = c0 + c1*x on (left, right). The leftmost piece may extend to -inf
// (step profiles, and tables whose first value is nonzero).
class InitialProfile {
public:
    enum class Kind { Box, Table, Step };

    struct Piece {
        double left;
        double right;
        double c0;
        double c1;
    };

    static InitialProfile box(double a, double b, double height = 1.0);
    static InitialProfile step(double height = 1.0, double edge = 0.0);
    static InitialProfile table(std::vector<double> xs, std::vector<double> ys);
    static InitialProfile zero();

    // box:a:b[:h] | table:<path> | step[:h] | zero
    static InitialProfile parse(const std::string& spec);

    Kind kind() const { return kind_; }
    double value(double x) const;
    // Average over [x - h/2, x + h/2]; used to sample data with jumps on a grid.
    double cell_average(double x, double h) const;

    double support_bound() const { return L0_; }
    double sup_bound() const { return sup_; }
    bool is_zero() const { return sup_ == 0.0; }
    // Full textual identity, including every table node.
    std::string fingerprint() const;
    const std::vector<Piece>& pieces() const { return pieces_; }

    // phi(. - L): support moves right by L.
    InitialProfile shifted(double L) const;
    InitialProfile scaled(double lambda) const;

    std::string describe() const;

private:
    Kind kind_ = Kind::Box;
    std::vector<Piece> pieces_;
    std::vector<double> xs_, ys_;   // table only
    double L0_ = 0.0;
    double sup_ = 0.0;
    double edge_ = 0.0;             // step only
    double a_ = 0.0, b_ = 0.0, h_ = 0.0;

    void finish();
};

// 1 - exp(-psi). Exact for box and step; nodewise for tables.
InitialProfile hat_transform(const InitialProfile& psi);

} // namespace kppbbm
