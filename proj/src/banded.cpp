#include "tracescope/banded.hpp"

#include "tracescope/error.hpp"

namespace tracescope {

PentadiagonalLdlt::PentadiagonalLdlt(const SymmetricPentadiagonal& a)
    : d_(a.size(), 0.0), l1_(a.sub1.size(), 0.0), l2_(a.sub2.size(), 0.0) {
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        double di = a.diag[i];
        if (i >= 1) di -= l1_[i - 1] * l1_[i - 1] * d_[i - 1];
        if (i >= 2) di -= l2_[i - 2] * l2_[i - 2] * d_[i - 2];
        if (!(di > 0.0)) throw NumericalError("pentadiagonal matrix is not positive definite");
        d_[i] = di;

        if (i + 1 < n) {
            double v = a.sub1[i];
            if (i >= 1) v -= l2_[i - 1] * l1_[i - 1] * d_[i - 1];
            l1_[i] = v / di;
        }
        if (i + 2 < n) l2_[i] = a.sub2[i] / di;
    }
}

std::vector<double> PentadiagonalLdlt::solve(std::span<const double> rhs) const {
    const std::size_t n = d_.size();
    if (rhs.size() != n) throw ShapeError("right-hand side length does not match matrix");
    std::vector<double> x(rhs.begin(), rhs.end());
    // L y = b
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= 1) x[i] -= l1_[i - 1] * x[i - 1];
        if (i >= 2) x[i] -= l2_[i - 2] * x[i - 2];
    }
    for (std::size_t i = 0; i < n; ++i) x[i] /= d_[i];
    // L^T x = y
    for (std::size_t k = n; k-- > 0;) {
        if (k + 1 < n) x[k] -= l1_[k] * x[k + 1];
        if (k + 2 < n) x[k] -= l2_[k] * x[k + 2];
    }
    return x;
}

}  // namespace tracescope
