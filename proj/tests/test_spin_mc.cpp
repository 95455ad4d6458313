#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "currentlab/exact.hpp"
#include "currentlab/fft.hpp"
#include "currentlab/gs.hpp"
#include "currentlab/spin_mc.hpp"

using namespace currentlab;
using namespace currentlab::spin;

TEST_CASE("fft round trip and Parseval") {
    for (int d : {1, 2, 3}) {
        for (int side : {4, 6, 8}) {
            int v = 1;
            for (int k = 0; k < d; ++k) v *= side;
            std::vector<std::complex<double>> a(v), orig;
            for (int i = 0; i < v; ++i) a[i] = std::sin(0.37 * i) + 0.2 * std::cos(1.1 * i * i);
            orig = a;
            fftutil::fft_nd(a, d, side, false);
            double sum_f = 0, sum_x = 0;
            for (auto z : a) sum_f += std::norm(z);
            for (auto z : orig) sum_x += std::norm(z);
            REQUIRE(sum_f / double(v) == Catch::Approx(sum_x).epsilon(1e-10));
            fftutil::fft_nd(a, d, side, true);
            for (int i = 0; i < v; ++i) REQUIRE(std::abs(a[i] - orig[i]) < 1e-10);
        }
    }
}

TEST_CASE("beta = 0 two-point table is a delta at the origin") {
    ModelSpec m = ising(Torus(2, 4, 1.0), 0.0);
    TwoPointTable t = two_point(m, 8, 400, 101);
    REQUIRE(t.s[0] == Catch::Approx(1.0).margin(1e-12));
    for (int s = 1; s < t.n_sites(); ++s) REQUIRE(std::abs(t.s[s]) <= 4 * t.err[s] + 0.01);
}

TEST_CASE("two-point table matches spin oracle on 2D L=3") {
    Torus torus(2, 3, 1.0);
    double beta = 0.3;
    ModelSpec m = ising(torus, beta);
    TwoPointTable t = two_point(m, 8, 3000, 103);
    Graph g = torus.as_graph();
    for (int s = 0; s < torus.n_sites(); ++s) {
        int pair[2] = {0, s};
        double exact_v = s == 0 ? 1.0 : exact::spin_correlation(g, beta, pair);
        REQUIRE(std::abs(t.s[s] - exact_v) <= 4 * t.err[s] + 0.005);
        REQUIRE(t.s[s] >= -3 * t.err[s]);  // Griffiths positivity
    }
    // MMS-direction sanity on-axis
    REQUIRE(t.axis(1) >= t.s[torus.index({1, 1, 0, 0})] - 0.02);
}

TEST_CASE("table CSV round trip") {
    ModelSpec m = ising(Torus(2, 4, 1.0), 0.25);
    TwoPointTable t = two_point(m, 8, 300, 105);
    std::stringstream buf;
    write_table_csv(t, buf);
    TwoPointTable back = read_table_csv(buf, 2, 4, 0.25);
    for (int s = 0; s < t.n_sites(); ++s) {
        REQUIRE(back.s[s] == Catch::Approx(t.s[s]).epsilon(1e-4).margin(1e-6));
        REQUIRE(back.err[s] == Catch::Approx(t.err[s]).epsilon(1e-4).margin(1e-6));
    }
}

TEST_CASE("GS block with N=1 reduces to Ising") {
    Torus torus(2, 3, 1.0);
    double beta = 0.35;
    ModelSpec m = gs_block(torus, beta, 1, 1.0, 0.7);  // g is inert at N=1
    TwoPointTable t = two_point(m, 8, 2000, 107);
    Graph g = torus.as_graph();
    int pair[2] = {0, 1};
    double exact_v = exact::spin_correlation(g, beta, pair);
    REQUIRE(std::abs(t.s[1] - exact_v) <= 4 * t.err[1] + 0.01);
    REQUIRE(t.s[0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("decoupled GS blocks reproduce the exact block law") {
    // J = 0 torus: every block is an independent mean-field block
    Torus torus(1, 2, 0.0);
    int n = 6;
    double g = 0.8, alpha = 0.5;
    ModelSpec m = gs_block(torus, 1.0, n, alpha, g);
    gs::SiteLaw law = gs::block_law_exact(n, g, alpha);
    SpinSampler sampler(m, make_stream(1, "t-gsblock", 0));
    const long sweeps = 20000;
    for (long i = 0; i < sweeps / 10; ++i) sampler.sweep();
    KahanSum m2, m4;
    for (long i = 0; i < sweeps; ++i) {
        sampler.sweep();
        double p = sampler.phi(0);
        m2.add(p * p);
        m4.add(p * p * p * p);
    }
    double e2 = m2.value() / double(sweeps), e4 = m4.value() / double(sweeps);
    REQUIRE(e2 == Catch::Approx(law.m[2]).epsilon(0.05));
    REQUIRE(e4 == Catch::Approx(law.m[4]).epsilon(0.10));
}

TEST_CASE("ursell4 estimator: zero at beta=0, oracle match, Lebowitz sign") {
    Torus torus(2, 3, 1.0);
    ModelSpec free = ising(torus, 0.0);
    Estimate u0 = ursell4_mc(free, 0, 1, 3, 4, 8, 1500, 109);
    REQUIRE(u0.within(0.0, 4.0));

    double beta = 0.35;
    ModelSpec m = ising(torus, beta);
    Estimate u = ursell4_mc(m, 0, 4, 2, 6, 8, 4000, 111);
    Graph g = torus.as_graph();
    double exact_u = exact::ursell4_spin(g, beta, 0, 4, 2, 6);
    REQUIRE(std::abs(u.value - exact_u) <= 4 * u.stderr_ + 0.002);
    REQUIRE(u.value <= 3 * u.stderr_);
}

TEST_CASE("smeared moments at beta=0: unit variance and vanishing odd moments") {
    Torus torus(2, 4, 1.0);
    ModelSpec m = ising(torus, 0.0);
    std::vector<double> f(torus.n_sites(), 1.0);  // indicator of the whole box
    SmearedMoments sm = smeared_moments(m, f, 4, 8, 2000, 113);
    REQUIRE(sm.t_moment[1].within(1.0, 4.0));   // <T^2> = 1 by normalization
    REQUIRE(std::abs(sm.t_moment[0].value) <= 4 * sm.t_moment[0].stderr_ + 0.01);
    REQUIRE(std::abs(sm.t_moment[2].value) <= 4 * sm.t_moment[2].stderr_ + 0.05);
    // iid +-1 spins: <T^4> = 3 - 2/V, so the finite-volume Wick gap is 2/V
    double v = double(torus.n_sites());
    REQUIRE(std::abs(sm.wick_gap[0].value - 2.0 / v) <= 4 * sm.wick_gap[0].stderr_ + 0.02);
    REQUIRE(sm.r_f == torus.side() / 2);
}

TEST_CASE("binder locator: 2D crossing near the exact value, 1D none") {
    std::vector<double> betas;
    for (double b = 0.36; b <= 0.521; b += 0.02) betas.push_back(b);
    PseudoCritical pc =
        locate_pseudo_critical(2, {4, 8}, betas, 1, 1.0, 0.0, 8, 600, 115);
    REQUIRE(pc.found);
    double beta_c_2d = 0.5 * std::log(1.0 + std::sqrt(2.0));
    REQUIRE(std::abs(pc.beta_pc - beta_c_2d) <= pc.uncertainty + 0.03);

    std::vector<double> betas1;
    for (double b = 0.1; b <= 0.9; b += 0.2) betas1.push_back(b);
    PseudoCritical pc1 = locate_pseudo_critical(1, {8, 16}, betas1, 1, 1.0, 0.0, 8, 300, 117);
    REQUIRE_FALSE(pc1.found);
}
