#include "tfim/spectrum.hpp"

#include <cmath>
#include <numbers>

namespace tfim {

namespace {

void check_coupling(double lambda, const char* name)
{
    if (!std::isfinite(lambda) || lambda < 0.0)
        throw domain_error(std::string(name) + " must be finite and non-negative");
}

}  // namespace

std::string to_string(Sector s)
{
    return s == Sector::Integer ? "integer" : "antiperiodic";
}

Sector parse_sector(std::string_view name)
{
    if (name == "integer" || name == "paper-integer")
        return Sector::Integer;
    if (name == "antiperiodic" || name == "antiperiodic-half-integer")
        return Sector::Antiperiodic;
    throw std::invalid_argument("unknown sector '" + std::string(name) + "'");
}

void QuenchSpec::validate() const
{
    if (N < 3)
        throw domain_error("chain length must be at least 3");
    check_coupling(lambda1, "lambda1");
    check_coupling(lambda2, "lambda2");
    if (sector == Sector::Integer && N % 2 == 0)
        throw sector_mismatch("integer momentum grid needs odd N, got N = " + std::to_string(N));
}

BdgBlock bdg_block(double lambda, double k)
{
    return {-2.0 * (lambda * std::cos(k) + 1.0), 2.0 * lambda * std::sin(k)};
}

double dispersion(double lambda, double k)
{
    auto [A, B] = bdg_block(lambda, k);
    return std::hypot(A, B);
}

double bogoliubov_angle(double lambda, double k, bool paired)
{
    auto [A, B] = bdg_block(lambda, k);
    if (!paired)
        return A < 0.0 ? 0.5 * std::numbers::pi : 0.0;
    if (A == 0.0 && std::abs(B) < 1e-12)
        return -0.25 * std::numbers::pi;  // lambda = 1, k -> pi limit
    return 0.5 * std::atan2(-B, A);
}

ModeSet build_modes(const QuenchSpec& spec)
{
    spec.validate();
    const int N = spec.N;
    const double pi = std::numbers::pi;

    ModeSet ms;
    ms.N = N;
    ms.sector = spec.sector;

    auto push = [&](double k, bool paired) {
        ms.k.push_back(k);
        ms.paired.push_back(paired);
        ms.weight.push_back((paired ? 2.0 : 1.0) / N);
    };
    if (spec.sector == Sector::Integer) {
        for (int m = 0; m <= (N - 1) / 2; ++m)
            push(2.0 * pi * m / N, m != 0);
    } else {
        for (int m = 0; 2 * m + 1 <= N; ++m)
            push((2 * m + 1) * pi / N, 2 * m + 1 != N);
    }

    for (std::size_t i = 0; i < ms.k.size(); ++i) {
        const double k = ms.k[i];
        const bool p = ms.paired[i];
        // unpaired modes sit at k = 0 or pi where B vanishes exactly
        auto energy = [&](double lambda) {
            auto [A, B] = bdg_block(lambda, k);
            return p ? std::hypot(A, B) : std::abs(A);
        };
        ms.eps1.push_back(energy(spec.lambda1));
        ms.eps2.push_back(energy(spec.lambda2));
        ms.theta1.push_back(bogoliubov_angle(spec.lambda1, k, p));
        ms.theta2.push_back(bogoliubov_angle(spec.lambda2, k, p));
        ms.phi.push_back(ms.theta2.back() - ms.theta1.back());
        if (ms.eps1.back() == 0.0 || ms.eps2.back() == 0.0)
            ms.gapless = true;
    }
    return ms;
}

double max_group_velocity(double lambda)
{
    check_coupling(lambda, "lambda");
    return lambda <= 1.0 ? 2.0 * lambda : 2.0;
}

std::optional<double> revival_time_prediction(const QuenchSpec& spec)
{
    spec.validate();
    const double v = max_group_velocity(spec.lambda2);
    if (v == 0.0)
        return std::nullopt;
    return spec.N / (2.0 * v);
}

std::optional<CriticalTimes> dqpt_critical_times(const QuenchSpec& spec, int n_max)
{
    spec.validate();
    if (n_max < 1)
        throw domain_error("n_max must be at least 1");
    const double l1 = spec.lambda1, l2 = spec.lambda2;
    if (l1 + l2 == 0.0)
        return std::nullopt;
    const double c = -(1.0 + l1 * l2) / (l1 + l2);
    if (!(std::abs(c) <= 1.0) || l1 == l2)
        return std::nullopt;

    CriticalTimes ct;
    ct.k_star = std::acos(c);
    const double e = dispersion(l2, ct.k_star);
    if (!(e > 0.0))
        return std::nullopt;
    ct.t_star = std::numbers::pi / e;
    for (int n = 0; n < n_max; ++n)
        ct.times.push_back(ct.t_star * (n + 0.5));
    return ct;
}

}  // namespace tfim
