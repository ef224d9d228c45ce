#include "kppbbm/fit.hpp"

#include "kppbbm/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace kppbbm {

LinearFit least_squares(const std::vector<std::vector<double>>& columns, const std::vector<double>& y)
{
    const Eigen::Index n = static_cast<Eigen::Index>(y.size());
    const Eigen::Index p = static_cast<Eigen::Index>(columns.size());
    if (p == 0 || n < p)
        throw NumericError("least_squares: not enough samples");
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd b(n), scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (static_cast<Eigen::Index>(columns[j].size()) != n)
            throw UsageError("least_squares: column length mismatch");
        for (Eigen::Index i = 0; i < n; ++i)
            X(i, j) = columns[j][i];
        scale(j) = X.col(j).norm();
        if (scale(j) > 0.0)
            X.col(j) /= scale(j);
        else
            scale(j) = 1.0;
    }
    for (Eigen::Index i = 0; i < n; ++i)
        b(i) = y[i];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    LinearFit f;
    f.condition = s(p - 1) > 0.0 ? s(0) / s(p - 1) : INFINITY;
    const Eigen::VectorXd c = svd.solve(b);
    const Eigen::VectorXd r = X * c - b;
    f.rms = std::sqrt(r.squaredNorm() / n);
    f.coef.resize(p);
    for (Eigen::Index j = 0; j < p; ++j)
        f.coef[j] = c(j) / scale(j);
    return f;
}

LinearFit line_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    return least_squares({std::vector<double>(x.size(), 1.0), x}, y);
}

} // namespace kppbbm
