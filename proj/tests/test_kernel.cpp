#include "tfim/kernel.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tfim;

TEST_CASE("product state kernel")
{
    const Kernel g = static_kernel(0.0, 9);
    CHECK(g.values.size() == 17);
    CHECK(g(0) == doctest::Approx(1.0));
    for (int j = -8; j <= 8; ++j)
        if (j != 0)
            CHECK(std::abs(g(j)) < 1e-14);
}

TEST_CASE("frozen values")
{
    const Kernel g = eval_kernel(build_modes({201, 1.5, 1.0}), 7.3);
    CHECK(g(-200) == doctest::Approx(-0.16834956726540493).epsilon(1e-12));
    CHECK(g(-7) == doctest::Approx(0.011101014752882155).epsilon(1e-12));
    CHECK(g(-1) == doctest::Approx(0.6169409631158741).epsilon(1e-12));
    CHECK(g(0) == doctest::Approx(0.6163211507979435).epsilon(1e-12));
    CHECK(g(2) == doctest::Approx(0.07525208744747786).epsilon(1e-12));
    CHECK(g(13) == doctest::Approx(-0.01052136575408404).epsilon(1e-12));

    const Kernel s = static_kernel(1.0, 401);
    CHECK(s(-1) == doctest::Approx(0.6366214004660165).epsilon(1e-12));
    CHECK(s(1) == doctest::Approx(-0.21221147515445046).epsilon(1e-12));
    CHECK(s(5) == doctest::Approx(-0.057892437691495914).epsilon(1e-12));
    CHECK(s(50) == doctest::Approx(0.006470656986583936).epsilon(1e-11));
    // decay away from the diagonal
    CHECK(std::abs(s(50)) < std::abs(s(5)));
    CHECK(std::abs(s(5)) < std::abs(s(1)));
}

TEST_CASE("fast path agrees with direct sum")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> lam(0.0, 3.0), tt(0.0, 60.0);
    std::uniform_int_distribution<int> nn(3, 100);
    for (int trial = 0; trial < 30; ++trial) {
        const Sector sec = trial % 3 == 0 ? Sector::Antiperiodic : Sector::Integer;
        const int N = 2 * nn(rng) + 1 + (sec == Sector::Antiperiodic && trial % 2 ? 1 : 0);
        const ModeSet m = build_modes({N, lam(rng), lam(rng), sec});
        const double t = tt(rng);
        const Kernel a = eval_kernel(m, t), b = eval_kernel_direct(m, t);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            CHECK(std::abs(a.values[i] - b.values[i]) < 1e-10);
            CHECK(std::abs(a.values[i]) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("no quench is time independent")
{
    const KernelEvaluator ev(build_modes({51, 0.8, 0.8}));
    const Kernel g0 = ev(0.0), g1 = ev(13.7);
    for (std::size_t i = 0; i < g0.values.size(); ++i)
        CHECK(g0.values[i] == g1.values[i]);
}

TEST_CASE("zero slope at t = 0")
{
    const KernelEvaluator ev(build_modes({51, 0.3, 1.7}));
    const Kernel g0 = ev(0.0);
    double prev = 1e9;
    for (double h : {1e-2, 1e-3, 1e-4}) {
        const Kernel gh = ev(h);
        double worst = 0;
        for (std::size_t i = 0; i < g0.values.size(); ++i)
            worst = std::max(worst, std::abs(gh.values[i] - g0.values[i]) / h);
        CHECK(worst < prev);
        CHECK(worst < 40 * h);
        prev = worst;
    }
}

TEST_CASE("negative time rejected")
{
    CHECK_THROWS_AS(eval_kernel(build_modes({9, 0.1, 0.2}), -1.0), domain_error);
}
