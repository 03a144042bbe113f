#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tfim {

class domain_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class sector_mismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// integer: k = 2 pi m / N, m = 0..(N-1)/2 (odd N only)
// antiperiodic: k = (2m+1) pi / N
enum class Sector { Integer, Antiperiodic };

std::string to_string(Sector s);
Sector parse_sector(std::string_view name);

struct QuenchSpec {
    int N = 201;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    Sector sector = Sector::Integer;

    void validate() const;
};

struct ModeSet {
    int N = 0;
    Sector sector = Sector::Integer;
    std::vector<double> k;
    std::vector<double> weight;   // 2/N for +-k pairs, 1/N for k = 0 or pi
    std::vector<bool> paired;
    std::vector<double> eps1, eps2;
    std::vector<double> theta1, theta2;
    std::vector<double> phi;
    bool gapless = false;  // a grid mode sits exactly at eps = 0

    std::size_t size() const { return k.size(); }
};

struct BdgBlock {
    double A = 0.0;
    double B = 0.0;
};

BdgBlock bdg_block(double lambda, double k);
double dispersion(double lambda, double k);

// Bogoliubov angle theta with cos 2theta = A/eps, sin 2theta = -B/eps
double bogoliubov_angle(double lambda, double k, bool paired = true);

ModeSet build_modes(const QuenchSpec& spec);

double max_group_velocity(double lambda);

// nullopt means no revival (lambda2 = 0)
std::optional<double> revival_time_prediction(const QuenchSpec& spec);

struct CriticalTimes {
    double k_star = 0.0;
    double t_star = 0.0;
    std::vector<double> times;
};

// nullopt means no critical mode, so no DQPT cusps are expected
std::optional<CriticalTimes> dqpt_critical_times(const QuenchSpec& spec, int n_max);

}  // namespace tfim
