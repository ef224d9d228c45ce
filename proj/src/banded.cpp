#include "kppbbm/banded.hpp"

#include "kppbbm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kppbbm {

BandMatrix::BandMatrix(std::size_t n, int w)
{
    resize(n, w);
}

void BandMatrix::resize(std::size_t n, int w)
{
    n_ = n;
    w_ = w;
    a_.assign(n * (2 * w + 1), 0.0);
    factored_ = false;
}

void BandMatrix::zero()
{
    std::fill(a_.begin(), a_.end(), 0.0);
    factored_ = false;
}

bool BandMatrix::in_band(std::size_t i, std::size_t j) const
{
    const long d = static_cast<long>(j) - static_cast<long>(i);
    return i < n_ && j < n_ && d >= -w_ && d <= w_;
}

void BandMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const
{
    y.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i >= static_cast<std::size_t>(w_) ? i - w_ : 0;
        const std::size_t j1 = std::min(n_ - 1, i + w_);
        double s = 0.0;
        for (std::size_t j = j0; j <= j1; ++j)
            s += (*this)(i, j) * x[j];
        y[i] = s;
    }
}

void BandMatrix::factorize()
{
    auto& A = *this;
    for (std::size_t k = 0; k < n_; ++k) {
        const double p = A(k, k);
        if (p == 0.0 || !std::isfinite(p))
            throw NumericError("band LU: zero or non-finite pivot at row " + std::to_string(k));
        const std::size_t iend = std::min(n_ - 1, k + w_);
        for (std::size_t i = k + 1; i <= iend; ++i) {
            const double m = A(i, k) / p;
            A(i, k) = m;
            for (std::size_t j = k + 1; j <= std::min(n_ - 1, k + w_); ++j)
                A(i, j) -= m * A(k, j);
        }
    }
    factored_ = true;
}

void BandMatrix::solve(std::vector<double>& b) const
{
    const auto& A = *this;
    for (std::size_t i = 1; i < n_; ++i) {
        const std::size_t j0 = i >= static_cast<std::size_t>(w_) ? i - w_ : 0;
        double s = b[i];
        for (std::size_t j = j0; j < i; ++j)
            s -= A(i, j) * b[j];
        b[i] = s;
    }
    for (std::size_t ii = n_; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j <= std::min(n_ - 1, ii + w_); ++j)
            s -= A(ii, j) * b[j];
        b[ii] = s / A(ii, ii);
    }
}

void solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                       std::vector<double>& d)
{
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (b[i - 1] == 0.0)
            throw NumericError("tridiagonal solve: zero pivot at row " + std::to_string(i - 1));
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    if (b[n - 1] == 0.0)
        throw NumericError("tridiagonal solve: zero pivot at last row");
    d[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

} // namespace kppbbm
