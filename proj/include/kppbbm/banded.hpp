#pragma once

#include <cstddef>
#include <vector>

namespace kppbbm {

// Square band matrix with equal lower/upper bandwidth w (1 = tridiagonal,
// 2 = pentadiagonal). Row-major band storage, entry (i, j) at i*(2w+1) + (j-i+w).
class BandMatrix {
public:
    BandMatrix() = default;
    BandMatrix(std::size_t n, int w);

    void resize(std::size_t n, int w);
    void zero();

    std::size_t size() const { return n_; }
    int bandwidth() const { return w_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * (2 * w_ + 1) + (j + w_ - i)]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * (2 * w_ + 1) + (j + w_ - i)]; }
    bool in_band(std::size_t i, std::size_t j) const;

    // y = A x
    void multiply(const std::vector<double>& x, std::vector<double>& y) const;

    // In-place LU without pivoting; throws NumericError on a zero pivot.
    void factorize();
    // Solve with the factors; b is overwritten by x.
    void solve(std::vector<double>& b) const;

private:
    std::size_t n_ = 0;
    int w_ = 1;
    std::vector<double> a_;
    bool factored_ = false;
};

// Thomas algorithm: sub a[1..n-1], diag b, super c[0..n-2]; d overwritten by x.
void solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                       std::vector<double>& d);

} // namespace kppbbm
