#include "tfim/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>
#include <thread>

namespace tfim {

MqfiResult mqfi(const VarianceTriple& v, int N)
{
    const double n2 = static_cast<double>(N) * N;
    MqfiResult r;
    r.argmax = argmax_direction(v.Vx, v.Vy, v.Vz);
    r.fq = std::clamp(std::max({v.Vx, v.Vy, v.Vz}) / n2, 0.0, 1.0);
    r.nEff = N * r.fq;
    return r;
}

double loschmidt_echo(const ModeSet& modes, double t)
{
    if (!(t >= 0.0))
        throw domain_error("time must be non-negative");
    double log_le = 0.0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const double c = std::cos(modes.phi[i]), s = std::sin(modes.phi[i]);
        const std::complex<double> f = c * c + s * s * std::polar(1.0, -2.0 * t * modes.eps2[i]);
        log_le += std::log(std::abs(f));
    }
    return std::clamp(std::exp(log_le), 0.0, 1.0);
}

namespace {

std::optional<double> rate(double v, int N)
{
    if (!(v > 1e-300))
        return std::nullopt;
    return std::max(0.0, -2.0 * std::log(v) / N);
}

}  // namespace

std::optional<double> rate_le(double le, int N) { return rate(le, N); }
std::optional<double> rate_fq(double fq, int N) { return rate(fq, N); }

TimeGrid TimeGrid::span(double t_max, double dt, double t0)
{
    if (!(dt > 0.0) || !(t_max >= t0))
        throw std::invalid_argument("time grid needs dt > 0 and t_max >= t0");
    return {t0, dt, static_cast<int>(std::floor((t_max - t0) / dt + 1e-9)) + 1};
}

std::string to_string(EventKind k)
{
    switch (k) {
    case EventKind::DqptCusp: return "dqpt-cusp";
    case EventKind::MqfiCusp: return "mqfi-cusp";
    case EventKind::Revival: return "revival";
    case EventKind::Decay: return "decay";
    case EventKind::RfqFirstMin: return "rfq-first-min";
    }
    return "?";
}

int default_threads()
{
    if (const char* env = std::getenv("TFIM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn)
{
    if (threads <= 0)
        threads = default_threads();
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < count; i += threads)
                    fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

CoherencePoint coherence_point(const KernelEvaluator& kernel, double t)
{
    const int N = kernel.modes().N;
    const VarianceTriple v = variances(kernel(t));
    const MqfiResult m = mqfi(v, N);
    CoherencePoint p;
    p.t = t;
    p.fq = m.fq;
    p.nEff = m.nEff;
    p.argmax = m.argmax;
    p.Vx = v.Vx;
    p.Vy = v.Vy;
    p.Vz = v.Vz;
    p.le = loschmidt_echo(kernel.modes(), t);
    p.rLe = rate_le(p.le, N);
    p.rFq = rate_fq(p.fq, N);
    return p;
}

CoherenceSeries run_series(const QuenchSpec& spec, const TimeGrid& grid, const SeriesOptions& opt)
{
    if (grid.count < 1)
        throw std::invalid_argument("empty time grid");
    const KernelEvaluator kernel(build_modes(spec));
    CoherenceSeries s{spec, grid, std::vector<CoherencePoint>(grid.count), {}};
    parallel_for(grid.count, opt.threads, [&](int i) { s.points[i] = coherence_point(kernel, grid.at(i)); });

    if (!opt.detect)
        return s;
    auto append = [&](std::vector<Event> ev) { s.events.insert(s.events.end(), ev.begin(), ev.end()); };
    append(detect_dqpt_cusps(s, opt.detector));
    append(detect_mqfi_cusps(s));
    try {
        append({rfq_first_minimum(s)});
    } catch (const detector_error&) {
    }
    if (spec.lambda2 == 1.0 && spec.lambda1 != 1.0) {
        const auto pred = revival_time_prediction(spec);
        if (pred && grid.end() >= 1.25 * *pred)
            append({detect_revival_or_decay(s, *pred)});
    }
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
    return s;
}

namespace {

double variance_of(const CoherencePoint& p, Direction d)
{
    return d == Direction::X ? p.Vx : d == Direction::Y ? p.Vy : p.Vz;
}

double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    const auto mid = v.begin() + v.size() / 2;
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2)
        return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

// vertex of the parabola through three points; nullopt if not concave/convex as asked
std::optional<double> parabola_vertex(const double* x, const double* y, bool maximum)
{
    const double d1 = (y[1] - y[0]) / (x[1] - x[0]);
    const double d2 = (y[2] - y[1]) / (x[2] - x[1]);
    const double a = (d2 - d1) / (x[2] - x[0]);
    if (a == 0.0 || (maximum ? a > 0.0 : a < 0.0))
        return std::nullopt;
    const double b = d1 - a * (x[0] + x[1]);
    return -b / (2.0 * a);
}

}  // namespace

std::vector<Event> detect_mqfi_cusps(const CoherenceSeries& s)
{
    std::vector<Event> out;
    const auto& p = s.points;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const Direction a = p[i].argmax, b = p[i + 1].argmax;
        if (a == b)
            continue;
        const double d0 = variance_of(p[i], a) - variance_of(p[i], b);
        const double d1 = variance_of(p[i + 1], a) - variance_of(p[i + 1], b);
        double frac = 0.5;
        if (d0 - d1 != 0.0)
            frac = std::clamp(d0 / (d0 - d1), 0.0, 1.0);
        const double t = p[i].t + frac * (p[i + 1].t - p[i].t);
        out.push_back({EventKind::MqfiCusp, t,
                       {{"from", static_cast<double>(a)}, {"to", static_cast<double>(b)}}});
    }
    return out;
}

std::vector<Event> detect_dqpt_cusps(const CoherenceSeries& s, const DetectorSettings& opt)
{
    if (!dqpt_critical_times(s.spec, 1))
        return {};
    const auto& p = s.points;
    const std::size_t n = p.size();
    if (n < 5)
        return {};
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!p[i].rLe)
            throw detector_error("divergent rate function at t = " + std::to_string(p[i].t));
        r[i] = *p[i].rLe;
    }
    // d2[i] is the second difference centred on point i
    std::vector<double> d2(n, 0.0), mag;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d2[i] = r[i - 1] - 2.0 * r[i] + r[i + 1];
        mag.push_back(std::abs(d2[i]));
    }
    const double thr = opt.curvature_factor * median(mag);

    std::vector<std::size_t> cand;
    for (std::size_t i = 2; i + 2 < n; ++i)
        if (d2[i] < d2[i - 1] && d2[i] <= d2[i + 1] && -d2[i] > thr)
            cand.push_back(i);

    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i : cand) {
        if (clusters.empty() || p[i].t - p[clusters.back().back()].t >= opt.cluster_gap)
            clusters.emplace_back();
        clusters.back().push_back(i);
    }

    std::vector<Event> out;
    for (auto& c : clusters) {
        std::sort(c.begin(), c.end(), [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
        double t = p[c.front()].t;
        if (c.size() >= 3) {
            const double x[3] = {p[c[0]].t, p[c[1]].t, p[c[2]].t};
            const double y[3] = {r[c[0]], r[c[1]], r[c[2]]};
            std::size_t o[3] = {0, 1, 2};
            std::sort(o, o + 3, [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
            const double xs[3] = {x[o[0]], x[o[1]], x[o[2]]}, ys[3] = {y[o[0]], y[o[1]], y[o[2]]};
            if (auto v = parabola_vertex(xs, ys, true))
                t = *v;
        }
        out.push_back({EventKind::DqptCusp, t, {{"spikes", static_cast<double>(c.size())}}});
    }
    return out;
}

Event detect_revival_or_decay(const CoherenceSeries& s, double prediction)
{
    const double lo = 0.75 * prediction, hi = 1.25 * prediction;
    if (s.points.empty() || s.points.front().t > lo || s.points.back().t < hi)
        throw detector_error("time grid must span [" + std::to_string(lo) + ", " + std::to_string(hi)
                             + "]; extend t-max");
    const bool revival = s.spec.lambda1 > 1.0;
    const CoherencePoint* best = nullptr;
    for (const auto& p : s.points) {
        if (p.t < lo || p.t > hi)
            continue;
        if (!best || (revival ? p.fq < best->fq : p.fq > best->fq))
            best = &p;
    }
    return {revival ? EventKind::Revival : EventKind::Decay, best->t,
            {{"prediction", prediction}, {"ratio", best->t / prediction}, {"fq", best->fq}}};
}

Event rfq_first_minimum(const CoherenceSeries& s)
{
    const auto& p = s.points;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
        if (!p[i - 1].rFq || !p[i].rFq || !p[i + 1].rFq)
            continue;
        const double a = *p[i - 1].rFq, b = *p[i].rFq, c = *p[i + 1].rFq;
        if (b < a && b <= c) {
            const double x[3] = {p[i - 1].t, p[i].t, p[i + 1].t}, y[3] = {a, b, c};
            const double t = parabola_vertex(x, y, false).value_or(p[i].t);
            return {EventKind::RfqFirstMin, std::clamp(t, x[0], x[2]), {{"rfq", b}}};
        }
    }
    throw detector_error("r_FQ has no local minimum in the series span");
}

double static_fq(double lambda, int N, Sector sector)
{
    return mqfi(variances(static_kernel(lambda, N, sector)), N).fq;
}

StaticScan static_scan(const std::vector<double>& grid, int N, Sector sector, int threads)
{
    if (grid.empty())
        throw std::invalid_argument("empty lambda grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("lambda grid must be strictly increasing");

    StaticScan sc;
    sc.lambda = grid;
    sc.fq.assign(grid.size(), 0.0);
    parallel_for(static_cast<int>(grid.size()), threads, [&](int i) { sc.fq[i] = static_fq(grid[i], N, sector); });
    if (grid.size() < 2) {
        sc.lambda_m = grid.front();
        sc.coarse = true;
        return sc;
    }
    std::size_t best = 0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        sc.dfq.push_back((sc.fq[i + 1] - sc.fq[i]) / (grid[i + 1] - grid[i]));
        if (sc.dfq[i] > sc.dfq[best])
            best = i;
    }
    sc.lambda_m = 0.5 * (grid[best] + grid[best + 1]);
    sc.coarse = best == 0 || best + 2 == grid.size();
    return sc;
}

double refine_lambda_m(int N, double lo, double hi, int points, int levels, Sector sector, int threads)
{
    if (points < 3 || levels < 1 || !(hi > lo))
        throw std::invalid_argument("refine_lambda_m: bad bracket or resolution");
    double lm = 0.5 * (lo + hi);
    for (int level = 0; level < levels; ++level) {
        std::vector<double> grid(points);
        for (int i = 0; i < points; ++i)
            grid[i] = lo + (hi - lo) * i / (points - 1);
        lm = static_scan(grid, N, sector, threads).lambda_m;
        const double h = (hi - lo) / (points - 1);
        lo = lm - 2.0 * h;
        hi = lm + 2.0 * h;
    }
    return lm;
}

PowerFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_loglog needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    PowerFit f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

double p_index(double lambda, const std::vector<int>& sizes, Sector sector)
{
    std::vector<double> x, y;
    for (int N : sizes) {
        const VarianceTriple v = variances(static_kernel(lambda, N, sector));
        x.push_back(N);
        y.push_back(std::max({v.Vx, v.Vy, v.Vz}));
    }
    return fit_loglog(x, y).slope;
}

LongTimeSweep long_time_sweep(double lambda1, const std::vector<double>& grid, int N, double t_ltr,
                              double window, double dt, Sector sector, int threads)
{
    if (!(window > 0.0) || !(window <= t_ltr) || !(dt > 0.0))
        throw std::invalid_argument("long-time window must satisfy 0 < window <= T_ltr");
    if (grid.empty())
        throw std::invalid_argument("empty lambda2 grid");

    LongTimeSweep sw;
    sw.lambda1 = lambda1;
    sw.t_ltr = t_ltr;
    sw.window = window;
    sw.lambda2 = grid;
    sw.static_fq.assign(grid.size(), 0.0);
    sw.long_time_fq.assign(grid.size(), 0.0);

    const TimeGrid tg = TimeGrid::span(t_ltr, dt, t_ltr - window);
    parallel_for(static_cast<int>(grid.size()), threads, [&](int i) {
        const QuenchSpec spec{N, lambda1, grid[i], sector};
        const KernelEvaluator kernel(build_modes(spec));
        double acc = 0.0;
        for (int q = 0; q < tg.count; ++q)
            acc += mqfi(variances(kernel(tg.at(q))), N).fq;
        sw.long_time_fq[i] = acc / tg.count;
        sw.static_fq[i] = static_fq(grid[i], N, sector);
    });

    // Post-quench bandwidth is 4 min(lambda2, 1); below this the relative phases
    // do not spread over 2 pi within the window and the average is not stationary.
    sw.dephased_from = std::numbers::pi / (4.0 * window);
    std::size_t best = 0, best_lin = 0;
    bool have = false;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double h = grid[i + 1] - grid[i];
        sw.derivative.push_back((sw.long_time_fq[i + 1] - sw.long_time_fq[i]) / h);
        const double a = std::max(sw.long_time_fq[i], 1e-300), b = std::max(sw.long_time_fq[i + 1], 1e-300);
        sw.log_derivative.push_back((std::log(b) - std::log(a)) / h);
        const bool resolved = std::min({grid[i], grid[i + 1], 1.0}) >= sw.dephased_from;
        if (resolved && (!have || std::abs(sw.log_derivative[i]) > std::abs(sw.log_derivative[best]))) {
            best = i;
            have = true;
        }
        if (sw.derivative[i] > sw.derivative[best_lin])
            best_lin = i;
    }
    if (grid.size() >= 2) {
        sw.transition = 0.5 * (grid[best] + grid[best + 1]);
        sw.transition_linear = 0.5 * (grid[best_lin] + grid[best_lin + 1]);
    } else {
        sw.transition = sw.transition_linear = grid.front();
    }
    return sw;
}

}  // namespace tfim
