#pragma once

#include "tfim/spectrum.hpp"

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <vector>

namespace tfim::oracle {

class size_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

constexpr int max_ed_sites = 12;

// basis bit n set means sigma^z_n = -1
struct SpinState {
    int N = 0;
    double energy = 0.0;
    int parity = 0;  // popcount parity of the occupied basis states
    Eigen::VectorXcd amplitudes;
};

SpinState ed_ground_state(double lambda, int N);

struct EdObservables {
    double t = 0.0;
    double Vx = 0.0, Vy = 0.0, Vz = 0.0;
    double zExp = 0.0;
    double le = 1.0;
    double fq = 0.0;
    // assumptions behind the variance formula, all expected to vanish
    double xExp = 0.0, yExp = 0.0, xzSym = 0.0, yzSym = 0.0, xySym = 0.0;
};

std::vector<EdObservables> ed_quench_observables(double lambda1, double lambda2, int N,
                                                 const std::vector<double>& times);

// (1/2) sum_k eps_k minimum over the fermion sector matching the ground-state parity
double bdg_ground_energy(double lambda, int N);

// Two-level evolution of each +-k pair; the reference Loschmidt echo.
double mode_pair_echo(double lambda1, double lambda2, int N, double t, Sector sector = Sector::Integer);

enum class WickMode {
    Full,         // exact: all Majorana contractions
    Contraction,  // AA and BB blocks dropped, the Toeplitz-determinant contraction
};

struct MajoranaCorrelators {
    double t = 0.0;
    std::vector<double> kernel;   // G_j-equivalents, j = -(N-1) .. N-1
    std::vector<double> xx, yy, zz;  // index n = 0..N-1, n = 0 entries are 1
    double zExp = 0.0;            // <sigma^z> per site
    double Vx = 0.0, Vy = 0.0, Vz = 0.0;
    bool careful = false;         // small Pfaffian pivots forced the pivoted path
};

// Majorana order (a_0, b_0, a_1, b_1, ...), H = (i/4) sum h_pq gamma_p gamma_q
Eigen::MatrixXd majorana_hamiltonian(double lambda, int N);

// Gamma with <gamma_p gamma_q> = delta_pq + i Gamma_pq
Eigen::MatrixXd ground_covariance(const Eigen::MatrixXd& h);

Eigen::MatrixXd evolve_covariance(const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& h, double t);

double pfaffian(Eigen::MatrixXd a);

MajoranaCorrelators majorana_correlators(const QuenchSpec& spec, double t, WickMode mode = WickMode::Contraction);

}  // namespace tfim::oracle
