#pragma once

#include <vector>

namespace kppbbm {

struct LinearFit {
    std::vector<double> coef;
    double rms = 0.0;        // root mean square residual
    double condition = 0.0;  // 2-norm condition number of the column-scaled design
};

// Least squares y ~ sum_j coef[j] * columns[j].
LinearFit least_squares(const std::vector<std::vector<double>>& columns, const std::vector<double>& y);

// Slope and intercept of y ~ a + b x.
LinearFit line_fit(const std::vector<double>& x, const std::vector<double>& y);

} // namespace kppbbm
