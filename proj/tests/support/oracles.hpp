#pragma once

// Independent reference implementations used to check the optimized code.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "tracescope/nn.hpp"
#include "tracescope/rng.hpp"

namespace oracle {

/// Dense solve of (w I + lambda D^T D) z = w y with D the (n-2) x n second-difference matrix.
inline std::vector<double> als_dense(std::span<const double> y, double lambda, double w) {
    const auto n = static_cast<Eigen::Index>(y.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 2, n);
    for (Eigen::Index r = 0; r + 2 < n; ++r) {
        d(r, r) = 1.0;
        d(r, r + 1) = -2.0;
        d(r, r + 2) = 1.0;
    }
    const Eigen::MatrixXd a = w * Eigen::MatrixXd::Identity(n, n) + lambda * d.transpose() * d;
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) b(i) = w * y[static_cast<std::size_t>(i)];
    const Eigen::VectorXd z = a.ldlt().solve(b);
    return {z.data(), z.data() + n};
}

/// Closed-form Mexican hat, written out independently of the library.
inline double mexican_hat(double t) {
    const double c = 2.0 / (std::sqrt(3.0) * std::pow(std::numbers::pi, 0.25));
    return c * (1.0 - t * t) * std::exp(-t * t / 2.0);
}

/// Direct double sum: W[s][n] = sum_k x[k] psi((k - n) dt / f_s).
inline std::vector<std::vector<double>> cwt_direct(std::span<const double> x,
                                                   std::span<const double> scales, double dt) {
    std::vector<std::vector<double>> out(scales.size(), std::vector<double>(x.size(), 0.0));
    for (std::size_t s = 0; s < scales.size(); ++s)
        for (std::size_t n = 0; n < x.size(); ++n) {
            double acc = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k)
                acc += x[k] * mexican_hat((static_cast<double>(k) - static_cast<double>(n)) * dt / scales[s]);
            out[s][n] = acc;
        }
    return out;
}

/// Repeatedly takes the tallest remaining local maximum of |r| and masks
/// everything closer than `spacing` samples to it.
inline std::vector<std::size_t> peaks_bruteforce(std::span<const double> r, double min_height,
                                                 std::size_t spacing) {
    std::vector<bool> alive(r.size(), false);
    for (std::size_t i = 1; i + 1 < r.size(); ++i)
        alive[i] = std::abs(r[i]) >= min_height && std::abs(r[i]) >= std::abs(r[i - 1]) &&
                   std::abs(r[i]) > std::abs(r[i + 1]);
    std::vector<std::size_t> out;
    for (;;) {
        std::size_t best = r.size();
        for (std::size_t i = 0; i < r.size(); ++i)
            if (alive[i] && (best == r.size() || std::abs(r[i]) > std::abs(r[best]))) best = i;
        if (best == r.size()) break;
        out.push_back(best);
        for (std::size_t i = 0; i < r.size(); ++i) {
            const std::size_t gap = i > best ? i - best : best - i;
            if (gap < spacing) alive[i] = false;
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Worst relative error between analytic gradients and central differences
/// of the mean loss, over every parameter. The step is applied to the float
/// parameter and the realized difference is used as the denominator.
inline double gradient_check(tracescope::CompactCnn& model, std::span<const std::vector<double>> inputs,
                             std::span<const std::size_t> labels, float eps = 1e-4f) {
    const auto g = tracescope::loss_and_gradient(model, inputs, labels);
    double worst = 0.0;
    auto& params = model.parameters();
    for (std::size_t b = 0; b < params.size(); ++b)
        for (std::size_t i = 0; i < params[b].size(); ++i) {
            const float p = params[b][i];
            const float hi = p + eps;
            const float lo = p - eps;
            params[b][i] = hi;
            const double l_hi = tracescope::batch_loss(model, inputs, labels);
            params[b][i] = lo;
            const double l_lo = tracescope::batch_loss(model, inputs, labels);
            params[b][i] = p;
            const double fd = (l_hi - l_lo) / (static_cast<double>(hi) - static_cast<double>(lo));
            const double an = g.gradients[b][i];
            const double rel = std::abs(fd - an) / std::max(1e-6, std::abs(fd) + std::abs(an));
            worst = std::max(worst, rel);
        }
    return worst;
}

inline std::vector<double> random_vector(tracescope::Rng& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

/// Fresh scratch directory for one test.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const char* env = std::getenv("TRACESCOPE_TEST_TMP");
    const std::filesystem::path root =
        env ? std::filesystem::path(env) : std::filesystem::temp_directory_path() / "tracescope_tests";
    const auto dir = root / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace oracle
