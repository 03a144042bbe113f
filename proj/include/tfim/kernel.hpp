#pragma once

#include "tfim/spectrum.hpp"

#include <vector>

namespace tfim {

// G_j(t) for j = -(N-1) .. N-1
struct Kernel {
    int N = 0;
    double t = 0.0;
    std::vector<double> values;

    double operator()(int j) const { return values[static_cast<std::size_t>(j + N - 1)]; }
    double& operator()(int j) { return values[static_cast<std::size_t>(j + N - 1)]; }
};

// O(N * modes) per call, one cos/sin per term
Kernel eval_kernel_direct(const ModeSet& modes, double t);

// Precomputes the static part and the per-mode phase table once per quench;
// each time point then costs a single table contraction.
class KernelEvaluator {
public:
    explicit KernelEvaluator(ModeSet modes);

    Kernel operator()(double t) const;
    const ModeSet& modes() const { return modes_; }

private:
    ModeSet modes_;
    int period_sign_;              // G_{j-N} = period_sign * G_j
    std::vector<double> base_;     // time-independent part, j = 0..N-1
    std::vector<double> table_;    // w_k sin(2Phi_k) sin(k j + 2theta2_k), row-major [j][k]
    std::vector<double> omega_;    // 2 eps2_k
    std::vector<std::size_t> active_;  // modes with sin(2Phi_k) != 0
};

Kernel eval_kernel(const ModeSet& modes, double t);

Kernel static_kernel(double lambda, int N, Sector sector = Sector::Integer);

}  // namespace tfim
