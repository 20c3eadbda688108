#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tracescope {

/// Symmetric positive-definite matrix with bandwidth 2, stored by diagonals:
/// diag[i] = A(i,i), sub1[i] = A(i+1,i), sub2[i] = A(i+2,i).
struct SymmetricPentadiagonal {
    std::vector<double> diag;
    std::vector<double> sub1;
    std::vector<double> sub2;

    explicit SymmetricPentadiagonal(std::size_t n)
        : diag(n, 0.0), sub1(n > 0 ? n - 1 : 0, 0.0), sub2(n > 1 ? n - 2 : 0, 0.0) {}

    std::size_t size() const noexcept { return diag.size(); }
};

/// LDL^T factorization of a SymmetricPentadiagonal matrix. O(n) time and
/// memory. Throws NumericalError if a pivot is not positive.
class PentadiagonalLdlt {
public:
    explicit PentadiagonalLdlt(const SymmetricPentadiagonal& a);

    std::vector<double> solve(std::span<const double> rhs) const;
    std::size_t size() const noexcept { return d_.size(); }

private:
    std::vector<double> d_;   // pivots
    std::vector<double> l1_;  // L(i+1,i)
    std::vector<double> l2_;  // L(i+2,i)
};

}  // namespace tracescope
