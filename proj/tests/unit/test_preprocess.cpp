#include <doctest.h>

#include "oracles.hpp"
#include "tracescope/banded.hpp"
#include "tracescope/error.hpp"
#include "tracescope/preprocess.hpp"
#include "tracescope/synth.hpp"

using namespace tracescope;

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Signal noisy_step(std::uint64_t seed, std::size_t n = 500) {
    StepRecipe r;
    r.dt = 0.1;
    r.duration = static_cast<double>(n) * r.dt;
    r.step_times = {r.duration * 0.3, r.duration * 0.7};
    r.step_levels = {0.9, 0.2};
    r.initial_level = 0.1;
    r.noise_sigma = 0.01;
    r.rng_seed = seed;
    return generate_step_trace(r);
}

}  // namespace

TEST_SUITE("preprocess") {
    TEST_CASE("normalize_minmax examples") {
        const auto a = normalize_minmax(Signal({2, 4, 6}, 1.0));
        CHECK(a[0] == 0.0);
        CHECK(a[1] == 0.5);
        CHECK(a[2] == 1.0);
        const auto b = normalize_minmax(Signal({5, 5, 5}, 1.0));
        for (std::size_t i = 0; i < 3; ++i) CHECK(b[i] == 0.0);
    }

    TEST_CASE("normalize_minmax hits exact extrema and is idempotent") {
        Rng rng(3);
        const Signal s(oracle::random_vector(rng, 1000, -7.0, 13.0), 0.1);
        const auto once = normalize_minmax(s);
        const auto [lo, hi] = std::minmax_element(once.values().begin(), once.values().end());
        CHECK(*lo == 0.0);
        CHECK(*hi == 1.0);
        const auto twice = normalize_minmax(once);
        CHECK(max_abs_diff(once.values(), twice.values()) == 0.0);
    }

    TEST_CASE("pentadiagonal solver matches a dense solve") {
        Rng rng(17);
        for (const std::size_t n : {1u, 2u, 3u, 5u, 64u}) {
            SymmetricPentadiagonal a(n);
            Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) {
                a.diag[i] = 6.0 + rng.uniform();
                dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = a.diag[i];
            }
            for (std::size_t i = 0; i + 1 < n; ++i) {
                a.sub1[i] = rng.uniform(-1, 1);
                dense(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = a.sub1[i];
                dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = a.sub1[i];
            }
            for (std::size_t i = 0; i + 2 < n; ++i) {
                a.sub2[i] = rng.uniform(-1, 1);
                dense(static_cast<Eigen::Index>(i + 2), static_cast<Eigen::Index>(i)) = a.sub2[i];
                dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 2)) = a.sub2[i];
            }
            const auto rhs = oracle::random_vector(rng, n);
            const auto x = PentadiagonalLdlt(a).solve(rhs);
            const Eigen::VectorXd ref =
                dense.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(n)));
            CHECK(max_abs_diff(x, std::span<const double>(ref.data(), n)) < 1e-12);
        }
    }

    TEST_CASE("indefinite matrix is reported") {
        SymmetricPentadiagonal a(3);
        a.diag = {1.0, -1.0, 1.0};
        CHECK_THROWS_AS(PentadiagonalLdlt{a}, NumericalError);
    }

    TEST_CASE("system matrix equals w I + lambda D^T D") {
        const AlsConfig cfg{250.0, 0.5};
        const std::size_t n = 9;
        const auto a = als_system_matrix(n, cfg);
        // Column j of the dense oracle applied to unit vectors.
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> e(n, 0.0);
            e[j] = 1.0;
            Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 2, n);
            for (std::size_t r = 0; r + 2 < n; ++r) {
                d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r)) = 1;
                d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r + 1)) = -2;
                d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r + 2)) = 1;
            }
            const Eigen::MatrixXd full =
                cfg.weight * Eigen::MatrixXd::Identity(n, n) + cfg.lambda * d.transpose() * d;
            for (std::size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                const auto jj = static_cast<Eigen::Index>(j);
                double v = 0.0;
                if (i == j) v = a.diag[i];
                else if (i == j + 1) v = a.sub1[j];
                else if (j == i + 1) v = a.sub1[i];
                else if (i == j + 2) v = a.sub2[j];
                else if (j == i + 2) v = a.sub2[i];
                CHECK(v == doctest::Approx(full(ii, jj)).epsilon(1e-14));
            }
        }
    }

    TEST_CASE("constant and affine inputs are their own baseline") {
        for (const double lambda : {1e2, 1e4, 1e6}) {
            const AlsConfig cfg{lambda, 0.5};
            std::vector<double> c(300, 0.37);
            std::vector<double> ramp(300);
            for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.002 * static_cast<double>(i) - 0.1;
            const auto bc = estimate_baseline_als(Signal(c, 0.1), cfg);
            const auto br = estimate_baseline_als(Signal(ramp, 0.1), cfg);
            CHECK(max_abs_diff(bc.values, c) < 1e-10);
            CHECK(max_abs_diff(br.values, ramp) < 1e-10);
        }
    }

    TEST_CASE("banded ALS equals dense ALS on a noisy step") {
        const auto s = noisy_step(9);
        const auto z = estimate_baseline_als(s, AlsConfig{});
        const auto ref = oracle::als_dense(s.values(), 1e4, 0.5);
        CHECK(max_abs_diff(z.values, ref) < 1e-8);
    }

    TEST_CASE("ALS result is a minimizer of the cost") {
        const auto s = normalize_minmax(noisy_step(21, 400));
        const AlsConfig cfg{};
        const auto z = estimate_baseline_als(s, cfg);
        const double f0 = als_cost(s.values(), z.values, cfg);
        Rng rng(77);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> delta(s.size());
            double norm = 0.0;
            for (auto& d : delta) {
                d = rng.normal();
                norm += d * d;
            }
            norm = std::sqrt(norm);
            std::vector<double> zp = z.values;
            for (std::size_t i = 0; i < zp.size(); ++i) zp[i] += 1e-4 * delta[i] / norm;
            CHECK(als_cost(s.values(), zp, cfg) >= f0 - 1e-9);
        }
    }

    TEST_CASE("ALS commutes with index reversal") {
        const auto s = noisy_step(5, 700);
        std::vector<double> rev(s.values().rbegin(), s.values().rend());
        const auto z = estimate_baseline_als(s, AlsConfig{});
        auto zr = estimate_baseline_als(Signal(rev, s.dt()), AlsConfig{}).values;
        std::reverse(zr.begin(), zr.end());
        CHECK(max_abs_diff(z.values, zr) < 1e-10);
    }

    TEST_CASE("ALS rejects short signals and bad settings") {
        CHECK_THROWS_AS(estimate_baseline_als(Signal({1, 2}, 0.1), AlsConfig{}), InvalidArgument);
        CHECK_THROWS_AS(estimate_baseline_als(Signal({1, 2, 3}, 0.1), AlsConfig{0.0, 0.5}), InvalidArgument);
        CHECK_THROWS_AS(estimate_baseline_als(Signal({1, 2, 3}, 0.1), AlsConfig{1.0, 0.0}), InvalidArgument);
    }

    TEST_CASE("subtract_baseline examples") {
        const Signal s({1.0, -2.0, 3.5}, 0.1);
        const auto zero = subtract_baseline(s, Baseline{{1.0, -2.0, 3.5}});
        for (std::size_t i = 0; i < 3; ++i) CHECK(zero[i] == 0.0);
        const auto same = subtract_baseline(s, Baseline{{0.0, 0.0, 0.0}});
        for (std::size_t i = 0; i < 3; ++i) CHECK(same[i] == s[i]);
        CHECK_THROWS_AS(subtract_baseline(s, Baseline{{0.0}}), ShapeError);
    }

    TEST_CASE("residual extrema sit at the true step indices") {
        StepRecipe r;
        r.step_times = {25.0, 55.0};
        r.step_levels = {0.8, 0.05};
        r.initial_level = 0.05;
        r.noise_sigma = 0.01;
        r.duration = 90.0;
        r.rng_seed = 4;
        const auto pre = preprocess(generate_step_trace(r), PreprocessConfig{});
        REQUIRE(pre.peaks.size() == 2);
        CHECK(std::abs(static_cast<double>(pre.peaks[0].index) - 250.0) <= 5.0);
        CHECK(std::abs(static_cast<double>(pre.peaks[1].index) - 550.0) <= 5.0);
        CHECK(pre.peaks[0].polarity == StepPolarity::Rising);
        CHECK(pre.peaks[1].polarity == StepPolarity::Falling);
    }

    TEST_CASE("detect_peaks examples") {
        const PeakConfig cfg{};
        CHECK(detect_peaks(Signal(std::vector<double>(1000, 0.0), 0.1), cfg).empty());

        std::vector<double> one(1000, 0.0);
        one[200] = 0.5;
        const auto p1 = detect_peaks(Signal(one, 0.1), cfg);
        REQUIRE(p1.size() == 1);
        CHECK(p1[0].index == 200);
        CHECK(p1[0].amplitude == 0.5);

        std::vector<double> two(1000, 0.0);
        two[300] = 0.4;
        two[330] = 0.6;
        const auto p2 = detect_peaks(Signal(two, 0.1), cfg);
        REQUIRE(p2.size() == 1);
        CHECK(p2[0].index == 330);
        CHECK(oracle::peaks_bruteforce(two, 0.1, 100) == std::vector<std::size_t>{330});
    }

    TEST_CASE("detect_peaks agrees with brute force on random residuals") {
        Rng rng(123);
        for (int trial = 0; trial < 30; ++trial) {
            auto r = oracle::random_vector(rng, 600, -0.3, 0.3);
            const auto got = detect_peaks(Signal(r, 0.1), PeakConfig{0.1, 2.0});
            std::vector<std::size_t> idx;
            for (const auto& p : got) idx.push_back(p.index);
            CHECK(idx == oracle::peaks_bruteforce(r, 0.1, 20));
            for (std::size_t k = 1; k < idx.size(); ++k) {
                CHECK(idx[k] > idx[k - 1]);
                CHECK(idx[k] - idx[k - 1] >= 20);
            }
        }
    }

    TEST_CASE("window geometry") {
        CHECK(window_length(10.0, 0.1) == 101);
        std::vector<double> v(500);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + static_cast<double>(i);
        const Signal s(v, 0.1);
        const auto w = extract_window(s, std::ptrdiff_t{10}, 10.0);
        REQUIRE(w.samples.size() == 101);
        for (std::size_t j = 0; j < 40; ++j) CHECK(w.samples[j] == 0.0);
        CHECK(w.samples[40] == 1.0);
        CHECK(w.samples[50] == s[10]);

        std::vector<double> r(500, 0.0);
        r[250] = 0.7;
        r[255] = -0.2;
        const Signal res(r, 0.1);
        const auto peaks = detect_peaks(res, PeakConfig{});
        REQUIRE(peaks.size() == 1);
        const auto pw = extract_window(res, peaks[0], 10.0);
        CHECK(*std::max_element(pw.samples.begin(), pw.samples.end()) == res[peaks[0].index]);
    }

    TEST_CASE("out-of-box windows") {
        Rng rng(8);
        const Signal quiet(oracle::random_vector(rng, 900, -0.01, 0.01), 0.1);
        const auto w = extract_oob_windows(quiet, {}, 10.0, 5, 42);
        CHECK(w.size() == 5);
        const auto again = extract_oob_windows(quiet, {}, 10.0, 5, 42);
        for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i].center_index == again[i].center_index);

        std::vector<PeakEvent> dense;
        for (std::size_t i = 0; i < 900; i += 50) dense.push_back({i, 0.5, StepPolarity::Rising});
        CHECK_THROWS_AS(extract_oob_windows(quiet, dense, 10.0, 1, 1), InvalidArgument);

        const std::vector<PeakEvent> one{{450, 0.5, StepPolarity::Rising}};
        for (const auto& win : extract_oob_windows(quiet, one, 10.0, 20, 3)) {
            CHECK(win.first_index() >= 0);
            CHECK(win.first_index() + 101 <= 900);
            CHECK(std::abs(win.center_index - 450) >= 50);
        }
    }
}
