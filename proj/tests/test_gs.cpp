#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "currentlab/gs.hpp"

using namespace currentlab::gs;

TEST_CASE("quartic measure moments: Gaussian closed form") {
    SiteLaw law = phi4_moments(0.0, -0.5);
    REQUIRE(law.m[2] == Catch::Approx(1.0).epsilon(1e-10));
    REQUIRE(law.m[4] == Catch::Approx(3.0).epsilon(1e-10));
    REQUIRE(law.m[6] == Catch::Approx(15.0).epsilon(1e-10));
    REQUIRE(law.m[8] == Catch::Approx(105.0).epsilon(1e-10));
    REQUIRE(law.m[1] == 0.0);
    REQUIRE(law.m[3] == 0.0);
    REQUIRE_THROWS_AS(phi4_moments(0.0, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(phi4_moments(-1.0, 0.0), std::invalid_argument);
}

TEST_CASE("quartic measure hard-limit trend: b = 2*lambda sharpens to +-1") {
    double prev_gap = 2.0;
    for (double lambda : {1.0, 10.0, 100.0}) {
        SiteLaw law = phi4_moments(lambda, 2.0 * lambda);
        double gap = std::abs(law.m[2] - 1.0);
        REQUIRE(gap < prev_gap);
        prev_gap = gap;
    }
    REQUIRE(prev_gap < 5e-3);
}

TEST_CASE("block law closed forms") {
    // N = 1: phi = +-alpha
    SiteLaw one = block_law_exact(1, 0.7, 1.5);
    REQUIRE(one.m[2] == Catch::Approx(1.5 * 1.5).epsilon(1e-14));
    REQUIRE(one.m[4] == Catch::Approx(std::pow(1.5, 4)).epsilon(1e-14));
    // g = 0: iid sum, m2 = N alpha^2, m4 = alpha^4 (3N^2 - 2N)
    for (int n : {2, 5, 17, 100}) {
        SiteLaw law = block_law_exact(n, 0.0, 0.3);
        REQUIRE(law.m[2] == Catch::Approx(n * 0.09).epsilon(1e-12));
        REQUIRE(law.m[4] ==
                Catch::Approx(std::pow(0.3, 4) * (3.0 * n * n - 2.0 * n)).epsilon(1e-12));
    }
}

TEST_CASE("block law matches brute-force enumeration up to N = 20") {
    for (int n : {1, 2, 3, 7, 12, 20}) {
        for (double g : {0.0, 0.5, 1.0, 2.5}) {
            for (double alpha : {0.2, 1.0}) {
                SiteLaw fast = block_law_exact(n, g, alpha);
                SiteLaw slow = block_law_bruteforce(n, g, alpha);
                for (int k = 2; k <= 8; k += 2)
                    REQUIRE(fast.m[k] == Catch::Approx(slow.m[k]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("block law reaches N = 10^6 without overflow") {
    SiteLaw law = block_law_exact(1000000, 1.0, 1e-3);
    REQUIRE(std::isfinite(law.m[8]));
    REQUIRE(law.m[2] > 0.0);
    REQUIRE(law.kurtosis_ratio() > 1.0);
    REQUIRE(law.kurtosis_ratio() < 3.0);
}

TEST_CASE("calibration hits quartic targets and g_N trends to 1") {
    double prev_gap = 10.0;
    double prev_dist = 1e300;
    for (std::int64_t n : {100, 1000, 10000}) {
        Calibration cal = calibrate_block(1.0, 0.0, n);
        REQUIRE(cal.exact_match);
        REQUIRE(cal.residual <= 1e-6);
        double gap = std::abs(cal.g - 1.0);
        REQUIRE(gap < prev_gap);
        prev_gap = gap;
        SiteLaw got = block_law_exact(n, cal.g, cal.alpha);
        SiteLaw target = phi4_moments(1.0, 0.0);
        double dist = 0.0;
        for (int k = 2; k <= 8; k += 2)
            dist = std::max(dist, std::abs(got.m[k] - target.m[k]));
        REQUIRE(dist < prev_dist);
        prev_dist = dist;
    }
    REQUIRE(prev_gap < 0.2);
}

TEST_CASE("calibration for Gaussian target stays below mean-field critical g") {
    Calibration cal = calibrate_block(0.0, -0.5, 10000);
    REQUIRE(cal.g < 1.0);
    REQUIRE(cal.residual < 1e-3);
}

TEST_CASE("convergence report is monotone for the quartic target") {
    auto rows = convergence_report(1.0, 0.0, {10, 100, 1000, 10000});
    for (std::size_t i = 1; i < rows.size(); ++i) REQUIRE(rows[i].distance < rows[i - 1].distance);
    for (auto& row : rows) REQUIRE(row.tail_proxy < 10.0);
}
