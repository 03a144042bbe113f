#pragma once

#include "tfim/kernel.hpp"

#include <string>
#include <vector>

namespace tfim {

enum class Direction { X, Y, Z };

std::string to_string(Direction d);

struct MinorStats {
    int fallback_order = 0;  // first order computed by the fallback, 0 if none
};

// process-wide number of fallbacks to bordered QR so far
long fallback_count();

// Leading principal minors det T_n, n = 1..size, of T(i, j) = c_{i-j}
// with col[i] = c_i and row[j] = c_{-j} (col[0] == row[0]).
// Levinson recursion in extended, then double-double precision, each checked
// against the pass below it; bordered QR takes over where neither is trusted.
std::vector<double> leading_minors(const std::vector<double>& col, const std::vector<double>& row,
                                   MinorStats* stats = nullptr);

// One partial-pivot LU per order; reference only.
std::vector<double> dense_leading_minors(const std::vector<double>& col, const std::vector<double>& row);

// Bordered Givens QR; backward stable, O(n^3) for all orders.
std::vector<double> bordered_leading_minors(const std::vector<double>& col, const std::vector<double>& row);

std::vector<double> xx_minor_sequence(const Kernel& g, MinorStats* stats = nullptr);
std::vector<double> yy_minor_sequence(const Kernel& g, MinorStats* stats = nullptr);
std::vector<double> zz_sequence(const Kernel& g);

struct VarianceTriple {
    double t = 0.0;
    double Vx = 0.0, Vy = 0.0, Vz = 0.0;
    double zExp = 0.0;
    Direction argmax = Direction::X;
};

Direction argmax_direction(double Vx, double Vy, double Vz);

VarianceTriple variances(const Kernel& g);

}  // namespace tfim
