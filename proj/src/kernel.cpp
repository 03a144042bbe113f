#include "tfim/kernel.hpp"

#include <cmath>

namespace tfim {

namespace {

void check_time(double t)
{
    if (!(t >= 0.0) || !std::isfinite(t))
        throw domain_error("time must be finite and non-negative");
}

}  // namespace

Kernel eval_kernel_direct(const ModeSet& modes, double t)
{
    check_time(t);
    const int N = modes.N;
    Kernel g{N, t, std::vector<double>(2 * N - 1, 0.0)};
    for (int j = -(N - 1); j <= N - 1; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            const double a = modes.k[i] * j + 2.0 * modes.theta2[i];
            s += modes.weight[i] * (std::cos(2.0 * modes.phi[i]) * std::cos(a)
                 + std::sin(2.0 * modes.phi[i]) * std::sin(a) * std::cos(2.0 * modes.eps2[i] * t));
        }
        g(j) = -s;
    }
    return g;
}

KernelEvaluator::KernelEvaluator(ModeSet modes)
    : modes_(std::move(modes))
    , period_sign_(modes_.sector == Sector::Integer ? 1 : -1)
{
    const int N = modes_.N;
    const std::size_t M = modes_.size();
    for (std::size_t i = 0; i < M; ++i)
        if (std::sin(2.0 * modes_.phi[i]) != 0.0)
            active_.push_back(i);

    base_.assign(N, 0.0);
    table_.assign(static_cast<std::size_t>(N) * active_.size(), 0.0);
    for (int j = 0; j < N; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            const double a = modes_.k[i] * j + 2.0 * modes_.theta2[i];
            s += modes_.weight[i] * std::cos(2.0 * modes_.phi[i]) * std::cos(a);
        }
        base_[j] = -s;
        for (std::size_t q = 0; q < active_.size(); ++q) {
            const std::size_t i = active_[q];
            const double a = modes_.k[i] * j + 2.0 * modes_.theta2[i];
            table_[j * active_.size() + q] = modes_.weight[i] * std::sin(2.0 * modes_.phi[i]) * std::sin(a);
        }
    }
    for (std::size_t i : active_)
        omega_.push_back(2.0 * modes_.eps2[i]);
}

Kernel KernelEvaluator::operator()(double t) const
{
    check_time(t);
    const int N = modes_.N;
    const std::size_t A = active_.size();
    std::vector<double> c(A);
    for (std::size_t q = 0; q < A; ++q)
        c[q] = std::cos(omega_[q] * t);

    Kernel g{N, t, std::vector<double>(2 * N - 1, 0.0)};
    for (int j = 0; j < N; ++j) {
        const double* row = table_.data() + j * A;
        double s = 0.0;
        for (std::size_t q = 0; q < A; ++q)
            s += row[q] * c[q];
        g(j) = base_[j] - s;
    }
    for (int j = 1; j < N; ++j)
        g(j - N) = period_sign_ * g(j);
    return g;
}

Kernel eval_kernel(const ModeSet& modes, double t)
{
    return KernelEvaluator(modes)(t);
}

Kernel static_kernel(double lambda, int N, Sector sector)
{
    return eval_kernel(build_modes({N, lambda, lambda, sector}), 0.0);
}

}  // namespace tfim
