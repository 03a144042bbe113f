#pragma once

#include "tfim/correlators.hpp"
#include "tfim/kernel.hpp"
#include "tfim/spectrum.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfim {

struct MqfiResult {
    double fq = 0.0;
    double nEff = 0.0;
    Direction argmax = Direction::X;
};

MqfiResult mqfi(const VarianceTriple& v, int N);

// |<psi0| exp(-i H2 t) |psi0>| accumulated as a log-sum over modes
double loschmidt_echo(const ModeSet& modes, double t);

// -(1/N) log(value^2); nullopt is the divergent-rate marker
std::optional<double> rate_le(double le, int N);
std::optional<double> rate_fq(double fq, int N);

struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.01;
    int count = 0;

    double at(int i) const { return t0 + dt * i; }
    double end() const { return at(count - 1); }
    static TimeGrid span(double t_max, double dt, double t0 = 0.0);
};

struct CoherencePoint {
    double t = 0.0;
    double fq = 0.0;
    double nEff = 0.0;
    double le = 1.0;
    std::optional<double> rLe;
    std::optional<double> rFq;
    Direction argmax = Direction::X;
    double Vx = 0.0, Vy = 0.0, Vz = 0.0;
};

enum class EventKind { DqptCusp, MqfiCusp, Revival, Decay, RfqFirstMin };

std::string to_string(EventKind k);

struct Event {
    EventKind kind;
    double time = 0.0;
    std::map<std::string, double> meta;
};

struct CoherenceSeries {
    QuenchSpec spec;
    TimeGrid grid;
    std::vector<CoherencePoint> points;
    std::vector<Event> events;
};

struct DetectorSettings {
    double curvature_factor = 10.0;  // spike threshold in units of median |second difference|
    double cluster_gap = 0.2;        // spikes closer than this form one cusp

    bool operator==(const DetectorSettings&) const = default;
};

struct SeriesOptions {
    int threads = 0;  // 0: TFIM_THREADS or hardware concurrency
    bool detect = true;
    DetectorSettings detector;
};

int default_threads();

// Runs fn(i) for i in [0, count) over worker threads, static interleaved split.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

CoherencePoint coherence_point(const KernelEvaluator& kernel, double t);

CoherenceSeries run_series(const QuenchSpec& spec, const TimeGrid& grid, const SeriesOptions& opt = {});

class detector_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<Event> detect_mqfi_cusps(const CoherenceSeries& s);
std::vector<Event> detect_dqpt_cusps(const CoherenceSeries& s, const DetectorSettings& opt = {});
Event detect_revival_or_decay(const CoherenceSeries& s, double prediction);
Event rfq_first_minimum(const CoherenceSeries& s);

struct StaticScan {
    std::vector<double> lambda;
    std::vector<double> fq;
    std::vector<double> dfq;   // forward difference, lambda midpoints
    double lambda_m = 0.0;
    bool coarse = false;       // derivative peak sits on the grid edge
};

double static_fq(double lambda, int N, Sector sector = Sector::Integer);

StaticScan static_scan(const std::vector<double>& lambda_grid, int N, Sector sector = Sector::Integer,
                       int threads = 0);

// Successive zooms of width 4 grid steps around the derivative peak.
double refine_lambda_m(int N, double lo, double hi, int points = 21, int levels = 6,
                       Sector sector = Sector::Integer, int threads = 0);

struct PowerFit {
    double slope = 0.0;
    double intercept = 0.0;
};

PowerFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// slope of log max(Vx, Vy, Vz) against log N
double p_index(double lambda, const std::vector<int>& sizes, Sector sector = Sector::Integer);

struct LongTimeSweep {
    double lambda1 = 0.0;
    double t_ltr = 0.0;
    double window = 0.0;
    std::vector<double> lambda2;
    std::vector<double> static_fq;
    std::vector<double> long_time_fq;
    std::vector<double> derivative;      // forward difference of long_time_fq
    std::vector<double> log_derivative;  // forward difference of log long_time_fq
    double dephased_from = 0.0;          // smallest lambda2 whose window spans the dephasing time
    double transition = 0.0;             // midpoint of the steepest |log| step among dephased points
    double transition_linear = 0.0;      // midpoint of the largest forward difference
};

LongTimeSweep long_time_sweep(double lambda1, const std::vector<double>& lambda2_grid, int N, double t_ltr,
                              double window, double dt = 0.05, Sector sector = Sector::Integer,
                              int threads = 0);

}  // namespace tfim
