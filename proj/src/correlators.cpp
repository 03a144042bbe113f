#include "tfim/correlators.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace tfim {

std::string to_string(Direction d)
{
    switch (d) {
    case Direction::X: return "X";
    case Direction::Y: return "Y";
    case Direction::Z: return "Z";
    }
    return "?";
}

namespace {

std::atomic<long> fallback_counter{0};

void check_generator(const std::vector<double>& col, const std::vector<double>& row)
{
    if (col.size() != row.size() || col.empty())
        throw std::invalid_argument("Toeplitz generator: col/row size mismatch or empty");
    if (col[0] != row[0])
        throw std::invalid_argument("Toeplitz generator: col[0] != row[0]");
}

Eigen::MatrixXd toeplitz(const std::vector<double>& col, const std::vector<double>& row, int n)
{
    Eigen::MatrixXd T(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            T(i, j) = i >= j ? col[i - j] : row[j - i];
    return T;
}

}  // namespace

std::vector<double> dense_leading_minors(const std::vector<double>& col, const std::vector<double>& row)
{
    check_generator(col, row);
    const int n = static_cast<int>(col.size());
    const Eigen::MatrixXd T = toeplitz(col, row, n);
    std::vector<double> out(n);
    for (int m = 1; m <= n; ++m)
        out[m - 1] = T.topLeftCorner(m, m).partialPivLu().determinant();
    return out;
}

std::vector<double> bordered_leading_minors(const std::vector<double>& col, const std::vector<double>& row)
{
    check_generator(col, row);
    const int n = static_cast<int>(col.size());
    // T_m = Q R, Q stored transposed so that Qt * u is a row sweep
    Eigen::MatrixXd Qt = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd u(n), last(n);
    std::vector<double> out(n);

    for (int m = 0; m < n; ++m) {
        // border: new column u = T(0..m-1, m), new row T(m, 0..m)
        for (int i = 0; i < m; ++i)
            u(i) = row[m - i];
        R.col(m).head(m) = Qt.topLeftCorner(m, m) * u.head(m);
        for (int j = 0; j < m; ++j)
            last(j) = col[m - j];
        last(m) = col[0];
        Qt.row(m).setZero();
        Qt.col(m).setZero();
        Qt(m, m) = 1.0;

        for (int j = 0; j < m; ++j) {
            const double a = R(j, j), b = last(j);
            if (b == 0.0)
                continue;
            const double r = std::hypot(a, b);
            const double c = a / r, s = b / r;
            for (int q = j; q <= m; ++q) {
                const double top = q < m ? R(j, q) : R(j, m);
                const double bot = last(q);
                R(j, q) = c * top + s * bot;
                last(q) = -s * top + c * bot;
            }
            for (int q = 0; q <= m; ++q) {
                const double top = Qt(j, q), bot = Qt(m, q);
                Qt(j, q) = c * top + s * bot;
                Qt(m, q) = -s * top + c * bot;
            }
        }
        R(m, m) = last(m);

        double det = 1.0;
        for (int i = 0; i <= m; ++i)
            det *= R(i, i);
        out[m] = det;
    }
    return out;
}

long fallback_count() { return fallback_counter.load(); }

namespace {

// double-double arithmetic, about 32 significant digits
struct DoubleDouble {
    double hi = 0.0, lo = 0.0;
    DoubleDouble() = default;
    DoubleDouble(double x) : hi(x) {}
    DoubleDouble(double h, double l) : hi(h), lo(l) {}
    explicit operator double() const { return hi + lo; }
};

DoubleDouble quick_two_sum(double a, double b)
{
    const double s = a + b;
    return {s, b - (s - a)};
}

DoubleDouble two_sum(double a, double b)
{
    const double s = a + b, v = s - a;
    return {s, (a - (s - v)) + (b - v)};
}

DoubleDouble operator+(DoubleDouble a, DoubleDouble b)
{
    DoubleDouble s = two_sum(a.hi, b.hi);
    const DoubleDouble t = two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return quick_two_sum(s.hi, s.lo);
}

DoubleDouble operator-(DoubleDouble a) { return {-a.hi, -a.lo}; }
DoubleDouble operator-(DoubleDouble a, DoubleDouble b) { return a + -b; }

DoubleDouble operator*(DoubleDouble a, DoubleDouble b)
{
    const double p = a.hi * b.hi;
    return quick_two_sum(p, std::fma(a.hi, b.hi, -p) + (a.hi * b.lo + a.lo * b.hi));
}

DoubleDouble operator/(DoubleDouble a, DoubleDouble b)
{
    const double q1 = a.hi / b.hi;
    DoubleDouble r = a - b * q1;
    const double q2 = r.hi / b.hi;
    r = r - b * q2;
    return quick_two_sum(q1, q2) + r.hi / b.hi;
}

DoubleDouble& operator+=(DoubleDouble& a, DoubleDouble b) { return a = a + b; }
DoubleDouble& operator-=(DoubleDouble& a, DoubleDouble b) { return a = a - b; }
DoubleDouble& operator*=(DoubleDouble& a, DoubleDouble b) { return a = a * b; }

// Levinson recursion for the leading minors; returns the first order it could not reach.
template <class Real>
int levinson(const std::vector<double>& col, const std::vector<double>& row, double tiny, std::vector<Real>& out)
{
    const int n = static_cast<int>(col.size());
    out.assign(n, Real(0));
    if (std::abs(col[0]) <= tiny)
        return 0;

    // x, y: first and last columns of T_m^{-1}
    std::vector<Real> x{Real(1) / col[0]}, y{Real(1) / col[0]}, xn, yn;
    x.reserve(n);
    y.reserve(n);
    xn.reserve(n);
    yn.reserve(n);
    Real rho = col[0];  // det T_m / det T_{m-1}
    Real det = col[0];
    out[0] = det;

    for (int m = 1; m < n; ++m) {
        Real ex = 0, ey = 0;
        for (int j = 0; j < m; ++j) {
            ex += col[m - j] * x[j];
            ey += row[j + 1] * y[j];
        }
        const Real d = 1 - ex * ey;
        const Real rho_next = rho * d;
        if (!std::isfinite(double(rho_next)) || std::abs(double(rho_next)) <= tiny)
            return m;

        xn.assign(m + 1, Real(0));
        yn.assign(m + 1, Real(0));
        for (int j = 0; j < m; ++j) {
            xn[j] += x[j] / d;
            xn[j + 1] -= ex * y[j] / d;
            yn[j + 1] += y[j] / d;
            yn[j] -= ey * x[j] / d;
        }
        x.swap(xn);
        y.swap(yn);
        rho = rho_next;
        det *= rho;
        out[m] = det;
    }
    return n;
}

}  // namespace

std::vector<double> leading_minors(const std::vector<double>& col, const std::vector<double>& row,
                                   MinorStats* stats)
{
    check_generator(col, row);
    const int n = static_cast<int>(col.size());
    std::vector<double> out(n, 0.0);
    if (stats)
        stats->fallback_order = 0;

    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        scale = std::max({scale, std::abs(col[i]), std::abs(row[i])});
    if (scale == 0.0)
        return out;
    const double tiny = 1e-7 * scale;

    // Each pass is trusted while its error, estimated from the discrepancy with the
    // previous lower-precision pass scaled by the ratio of epsilons, stays below 5e-10.
    std::vector<double> p64;
    std::vector<long double> p80;
    std::vector<DoubleDouble> p106;
    auto agree = [](double low, double high, double eps_ratio) {
        return std::abs(low - high) * eps_ratio <= 5e-10 * std::abs(high);
    };
    const int r64 = levinson(col, row, tiny, p64);
    const int r80 = levinson(col, row, tiny, p80);
    int good = 0;
    for (; good < std::min(r64, r80) && agree(p64[good], double(p80[good]), 0x1p-11); ++good)
        out[good] = double(p80[good]);
    if (good < n) {
        const int r106 = levinson(col, row, tiny, p106);
        for (; good < std::min(r80, r106) && agree(double(p80[good]), double(p106[good]), 0x1p-41); ++good)
            out[good] = double(p106[good]);
    }
    if (good == n)
        return out;

    if (fallback_counter.fetch_add(1) == 0)
        std::cerr << "tfim: Toeplitz minors from order " << good + 1
                  << " computed by bordered QR (reported once)\n";
    if (stats)
        stats->fallback_order = good + 1;
    const auto rest = bordered_leading_minors(col, row);
    std::copy(rest.begin() + good, rest.end(), out.begin() + good);
    return out;
}

namespace {

std::vector<double> string_minors(const Kernel& g, int shift, MinorStats* stats)
{
    const int n = g.N - 1;
    std::vector<double> col(n), row(n);
    for (int i = 0; i < n; ++i) {
        col[i] = g(i + shift);
        row[i] = g(-i + shift);
    }
    return leading_minors(col, row, stats);
}

}  // namespace

std::vector<double> xx_minor_sequence(const Kernel& g, MinorStats* stats)
{
    return string_minors(g, -1, stats);
}

std::vector<double> yy_minor_sequence(const Kernel& g, MinorStats* stats)
{
    return string_minors(g, 1, stats);
}

std::vector<double> zz_sequence(const Kernel& g)
{
    std::vector<double> out(g.N - 1);
    const double g0 = g(0);
    for (int n = 1; n < g.N; ++n)
        out[n - 1] = g0 * g0 - g(n) * g(-n);
    return out;
}

Direction argmax_direction(double Vx, double Vy, double Vz)
{
    // rounding-level differences count as ties
    const double tol = 1e-12 * std::max({std::abs(Vx), std::abs(Vy), std::abs(Vz), 1.0});
    if (Vx >= Vy - tol && Vx >= Vz - tol)
        return Direction::X;
    if (Vy >= Vz - tol)
        return Direction::Y;
    return Direction::Z;
}

VarianceTriple variances(const Kernel& g)
{
    const double N = g.N;
    const double tol = 1e-8 * N * N;
    auto collective = [&](const std::vector<double>& seq) {
        double s = 1.0;
        for (double v : seq)
            s += v;
        return N * s;
    };
    auto clamp = [&](double v, const char* name) {
        if (v < -tol)
            throw std::runtime_error(std::string("negative variance ") + name + " = " + std::to_string(v));
        return std::max(v, 0.0);
    };

    VarianceTriple vt;
    vt.t = g.t;
    vt.zExp = N * g(0);
    vt.Vx = clamp(collective(xx_minor_sequence(g)), "Vx");
    vt.Vy = clamp(collective(yy_minor_sequence(g)), "Vy");
    vt.Vz = clamp(collective(zz_sequence(g)) - vt.zExp * vt.zExp, "Vz");
    vt.argmax = argmax_direction(vt.Vx, vt.Vy, vt.Vz);
    return vt;
}

}  // namespace tfim
