#include <doctest.h>

#include "oracles.hpp"
#include "tracescope/cwt.hpp"
#include "tracescope/error.hpp"

using namespace tracescope;

namespace {

const ScaleGrid kGrid = ScaleGrid::log_spaced(0.2, 5.0, 32);

double max_diff(const Scalogram& s, const std::vector<std::vector<double>>& ref) {
    double m = 0.0;
    for (std::size_t r = 0; r < s.rows; ++r)
        for (std::size_t c = 0; c < s.cols; ++c) m = std::max(m, std::abs(s.at(r, c) - ref[r][c]));
    return m;
}

}  // namespace

TEST_SUITE("cwt") {
    TEST_CASE("ricker closed-form values") {
        CHECK(ricker(0.0) == doctest::Approx(0.8673250705840776).epsilon(1e-15));
        CHECK(ricker(1.0) == 0.0);
        CHECK(ricker(-1.0) == 0.0);
        // 0.8673 * (1 - 100) * exp(-50) = -1.656e-20
        CHECK(ricker(10.0) == doctest::Approx(-99.0 * oracle::mexican_hat(0.0) * std::exp(-50.0)).epsilon(1e-12));
        CHECK(std::abs(ricker(10.0)) < 2e-20);
        CHECK(ricker(0.7) == doctest::Approx(oracle::mexican_hat(0.7)).epsilon(1e-15));
        CHECK(ricker(2.0) == ricker(-2.0));
    }

    TEST_CASE("scale grid") {
        CHECK(kGrid.size() == 32);
        CHECK(kGrid[0] == doctest::Approx(0.2));
        CHECK(kGrid[31] == doctest::Approx(5.0));
        for (std::size_t i = 1; i < kGrid.size(); ++i)
            CHECK(kGrid[i] / kGrid[i - 1] == doctest::Approx(kGrid[1] / kGrid[0]));
        CHECK_THROWS_AS(ScaleGrid({1.0, 0.5}), InvalidArgument);
        CHECK_THROWS_AS(ScaleGrid({0.0, 0.5}), InvalidArgument);
        CHECK_THROWS_AS(ScaleGrid({}), InvalidArgument);
    }

    TEST_CASE("transform equals direct summation") {
        Rng rng(2024);
        for (int trial = 0; trial < 5; ++trial) {
            const auto x = oracle::random_vector(rng, 101);
            const auto s = cwt_transform(x, kGrid, 0.1);
            CHECK(s.rows == 32);
            CHECK(s.cols == 101);
            CHECK(max_diff(s, oracle::cwt_direct(x, kGrid.scales(), 0.1)) < 1e-10);
        }
    }

    TEST_CASE("impulse reproduces sampled wavelet") {
        std::vector<double> x(101, 0.0);
        const std::size_t n0 = 37;
        x[n0] = 1.0;
        const auto s = cwt_transform(x, kGrid, 0.1);
        double worst = 0.0;
        for (std::size_t r = 0; r < s.rows; ++r)
            for (std::size_t n = 0; n < s.cols; ++n) {
                const double expect =
                    oracle::mexican_hat((static_cast<double>(n0) - static_cast<double>(n)) * 0.1 / kGrid[r]);
                worst = std::max(worst, std::abs(s.at(r, n) - expect));
            }
        CHECK(worst < 1e-12);
    }

    TEST_CASE("zero input gives zero output and mid-gray image") {
        const auto s = cwt_transform(std::vector<double>(101, 0.0), kGrid, 0.1);
        CHECK(s.max_abs() == 0.0);
        const auto img = render_scalogram(s, 64);
        for (const auto p : img.pixels()) CHECK(p == 128);
    }

    TEST_CASE("linearity") {
        Rng rng(99);
        const auto x = oracle::random_vector(rng, 101);
        const auto y = oracle::random_vector(rng, 101);
        const double a = 1.7, b = -0.4;
        std::vector<double> z(101);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
        const auto sx = cwt_transform(x, kGrid, 0.1);
        const auto sy = cwt_transform(y, kGrid, 0.1);
        const auto sz = cwt_transform(z, kGrid, 0.1);
        double worst = 0.0;
        for (std::size_t i = 0; i < sz.coefficients.size(); ++i)
            worst = std::max(worst, std::abs(sz.coefficients[i] - (a * sx.coefficients[i] + b * sy.coefficients[i])));
        CHECK(worst < 1e-10);
    }

    TEST_CASE("time covariance away from the edges") {
        // A compact bump well inside the window; shifting it by m moves the columns by m.
        std::vector<double> x(201, 0.0), xs(201, 0.0);
        for (int i = -3; i <= 3; ++i) {
            x[static_cast<std::size_t>(90 + i)] = 1.0 - std::abs(i) / 4.0;
            xs[static_cast<std::size_t>(97 + i)] = 1.0 - std::abs(i) / 4.0;
        }
        const auto s = cwt_transform(x, kGrid, 0.1);
        const auto ss = cwt_transform(xs, kGrid, 0.1);
        double worst = 0.0;
        for (std::size_t r = 0; r < s.rows; ++r)
            for (std::size_t n = 0; n + 7 < s.cols; ++n) worst = std::max(worst, std::abs(ss.at(r, n + 7) - s.at(r, n)));
        CHECK(worst < 1e-12);
    }

    TEST_CASE("render geometry and colours") {
        Rng rng(4);
        const auto s = cwt_transform(oracle::random_vector(rng, 101), kGrid, 0.1);
        for (const int size : {16, 64, 100}) {
            const auto img = render_scalogram(s, size);
            CHECK(img.width() == size);
            CHECK(img.height() == size);
        }
        const auto small = cwt_transform(oracle::random_vector(rng, 7), ScaleGrid({0.3, 0.6}), 0.1);
        CHECK(render_scalogram(small, 64).width() == 64);

        std::uint8_t r, g, b;
        diverging_color(0.0, r, g, b);
        CHECK((r == 255 && g == 255 && b == 255));
        diverging_color(1.0, r, g, b);
        CHECK((r == 255 && g == 0 && b == 0));
        diverging_color(-1.0, r, g, b);
        CHECK((r == 0 && g == 0 && b == 255));
    }

    TEST_CASE("negation swaps red and blue") {
        Rng rng(12);
        auto s = cwt_transform(oracle::random_vector(rng, 101), kGrid, 0.1);
        const auto img = render_scalogram(s, 64);
        for (auto& c : s.coefficients) c = -c;
        const auto neg = render_scalogram(s, 64);
        int worst = 0;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                worst = std::max(worst, std::abs(img.at(x, y, 0) - neg.at(x, y, 2)));
                worst = std::max(worst, std::abs(img.at(x, y, 2) - neg.at(x, y, 0)));
                worst = std::max(worst, std::abs(img.at(x, y, 1) - neg.at(x, y, 1)));
            }
        CHECK(worst <= 1);
    }

    TEST_CASE("impulse column is the most saturated") {
        std::vector<double> x(101, 0.0);
        x[70] = 1.0;
        const auto img = render_scalogram(cwt_transform(x, kGrid, 0.1), 101);
        // With aligned corners and as many columns as samples, pixel column == sample index.
        int best_col = -1;
        long best = -1;
        for (int c = 0; c < 101; ++c) {
            long sat = 0;
            for (int y = 0; y < 101; ++y) sat += 255 - img.at(c, y, 1);
            if (sat > best) {
                best = sat;
                best_col = c;
            }
        }
        CHECK(best_col == 70);
    }

    TEST_CASE("per-image rendering ignores uniform scaling, global does not") {
        Rng rng(31);
        auto s = cwt_transform(oracle::random_vector(rng, 101), kGrid, 0.1);
        const auto a = render_scalogram(s, 64);
        const double amp = s.max_abs();
        const auto ga = render_scalogram(s, 64, 2.0 * amp);
        for (auto& c : s.coefficients) c *= 3.5;
        const auto b = render_scalogram(s, 64);
        int worst = 0;
        for (std::size_t i = 0; i < a.pixels().size(); ++i)
            worst = std::max(worst, std::abs(a.pixels()[i] - b.pixels()[i]));
        CHECK(worst <= 1);
        CHECK(!(render_scalogram(s, 64, 2.0 * amp) == ga));
    }

    TEST_CASE("smallest scale is the top row") {
        Scalogram s;
        s.rows = 2;
        s.cols = 3;
        s.coefficients = {1, 1, 1, -1, -1, -1};
        s.scales = {0.2, 5.0};
        s.dt = 0.1;
        const auto img = render_scalogram(s, 8);
        CHECK(img.at(4, 0, 0) == 255);
        CHECK(img.at(4, 0, 2) == 0);
        CHECK(img.at(4, 7, 0) == 0);
        CHECK(img.at(4, 7, 2) == 255);
    }
}
