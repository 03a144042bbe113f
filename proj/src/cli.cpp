#include "tfim/cli.hpp"

#include "tfim/oracle.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <sstream>

namespace tfim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const RunConfig& c)
{
    j = json{{"command", c.command},
             {"preset", c.preset},
             {"N", c.N},
             {"lambda1", c.lambda1},
             {"lambda2", c.lambda2},
             {"sector", to_string(c.sector)},
             {"t_max", c.t_max},
             {"dt", c.dt},
             {"sizes", c.sizes},
             {"lambda1s", c.lambda1s},
             {"lambda_min", c.lambda_min},
             {"lambda_max", c.lambda_max},
             {"lambda_step", c.lambda_step},
             {"refine_levels", c.refine_levels},
             {"t_ltr", c.t_ltr},
             {"window_fraction", c.window_fraction},
             {"detector", {{"curvature_factor", c.detector.curvature_factor},
                           {"cluster_gap", c.detector.cluster_gap}}},
             {"out", c.out},
             {"format", c.format},
             {"threads", c.threads},
             {"deterministic", c.deterministic},
             {"strict", c.strict},
             {"corrupt_kernel", c.corrupt_kernel}};
}

void from_json(const json& j, RunConfig& c)
{
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key))
            j.at(key).get_to(field);
    };
    get("command", c.command);
    get("preset", c.preset);
    get("N", c.N);
    get("lambda1", c.lambda1);
    get("lambda2", c.lambda2);
    if (j.contains("sector"))
        c.sector = parse_sector(j.at("sector").get<std::string>());
    get("t_max", c.t_max);
    get("dt", c.dt);
    get("sizes", c.sizes);
    get("lambda1s", c.lambda1s);
    get("lambda_min", c.lambda_min);
    get("lambda_max", c.lambda_max);
    get("lambda_step", c.lambda_step);
    get("refine_levels", c.refine_levels);
    get("t_ltr", c.t_ltr);
    get("window_fraction", c.window_fraction);
    if (j.contains("detector")) {
        const json& d = j.at("detector");
        if (d.contains("curvature_factor"))
            d.at("curvature_factor").get_to(c.detector.curvature_factor);
        if (d.contains("cluster_gap"))
            d.at("cluster_gap").get_to(c.detector.cluster_gap);
    }
    get("out", c.out);
    get("format", c.format);
    get("threads", c.threads);
    get("deterministic", c.deterministic);
    get("strict", c.strict);
    get("corrupt_kernel", c.corrupt_kernel);
}

std::vector<std::string> preset_names()
{
    return {"fig1", "fig2a", "fig2b", "fig2c", "fig3c", "fig4a", "fig5", "fig6", "fig7", "fig8a", "fig8b", "oracle"};
}

RunConfig preset(const std::string& name)
{
    RunConfig c;
    c.preset = name;
    auto quench = [&](int N, double l1, double l2, double t_max, double dt) {
        c.command = "quench";
        c.N = N;
        c.lambda1 = l1;
        c.lambda2 = l2;
        c.t_max = t_max;
        c.dt = dt;
    };
    if (name == "fig1") {
        c.command = "static-scan";
        c.sizes = {21, 101, 401, 1001};
        c.lambda_min = 0.0;
        c.lambda_max = 3.0;
        c.lambda_step = 0.01;
        c.refine_levels = 6;
    } else if (name == "fig2a") {
        quench(201, 1.5, 1.0, 120.0, 0.05);
    } else if (name == "fig2b") {
        quench(201, 0.5, 1.0, 120.0, 0.05);
    } else if (name == "fig2c") {
        quench(201, 1.5, 1.0, 0.0, 0.05);
        c.sizes = {61, 101, 201, 401};
        c.lambda1s = {1.5, 0.5};
    } else if (name == "fig3c") {
        quench(201, 0.0, 1.0, 0.0, 0.05);
        c.sizes = {61, 101, 201, 401};
        c.lambda1s = {0.0, 0.5, 0.7, 0.9};
    } else if (name == "fig4a") {
        quench(201, 2.0, 0.2, 300.0, 0.05);
    } else if (name == "fig5" || name == "fig6") {
        quench(201, 2.0, 0.2, 4.0, 0.01);
    } else if (name == "fig7") {
        quench(201, 0.2, 2.0, 4.0, 0.01);
    } else if (name == "fig8a" || name == "fig8b") {
        c.command = "sweep-final";
        c.N = 401;
        c.lambda1 = name == "fig8a" ? 2.0 : 0.2;
        c.t_ltr = name == "fig8a" ? 20.0 : 80.0;
        c.window_fraction = 0.2;
        c.lambda_min = 0.0;
        c.lambda_max = 3.0;
        c.lambda_step = 0.02;
        c.dt = 0.05;
    } else if (name == "oracle") {
        c.command = "oracle-check";
        c.N = 9;
    } else {
        throw usage_error("unknown preset '" + name + "'");
    }
    return c;
}

std::string config_hash(const RunConfig& c)
{
    json j = c;
    j.erase("out");
    j.erase("threads");
    j.erase("format");
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<double> lambda_grid(double lo, double hi, double step)
{
    if (!(step > 0.0) || !(hi >= lo))
        throw usage_error("lambda grid needs step > 0 and max >= min");
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = std::round((lo + step * i) * 1e12) / 1e12;
    return g;
}

namespace {

std::string fmt(double v)
{
    if (std::isnan(v))
        return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

std::string cell_text(const Cell& c)
{
    if (auto d = std::get_if<double>(&c))
        return fmt(*d);
    if (auto s = std::get_if<std::string>(&c))
        return *s;
    const auto& o = std::get<std::optional<double>>(c);
    return o ? fmt(*o) : "divergent";
}

json cell_json(const Cell& c)
{
    if (auto d = std::get_if<double>(&c))
        return std::isfinite(*d) ? json(*d) : json(nullptr);
    if (auto s = std::get_if<std::string>(&c))
        return *s;
    const auto& o = std::get<std::optional<double>>(c);
    return o ? json(*o) : json(nullptr);
}

std::string with_suffix(const std::string& path, const std::string& suffix)
{
    const fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

json metadata(const RunConfig& c)
{
    return json{{"command", c.command}, {"preset", c.preset}, {"config", c}, {"config_hash", config_hash(c)}};
}

}  // namespace

void write_csv(std::ostream& os, const Table& t, const json& meta)
{
    os << "#";
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "; " : " ") << t.columns[i].name << ": " << t.columns[i].description << ", "
           << t.columns[i].units;
    os << "\n# meta: " << meta.dump() << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "," : "") << t.columns[i].name;
    os << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << cell_text(row[i]);
        os << "\n";
    }
}

void write_json(std::ostream& os, const Table& t, const json& meta)
{
    json cols = json::object(), docs = json::array();
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        json arr = json::array();
        for (const auto& row : t.rows)
            arr.push_back(cell_json(row[i]));
        cols[t.columns[i].name] = std::move(arr);
        docs.push_back({{"name", t.columns[i].name},
                        {"description", t.columns[i].description},
                        {"units", t.columns[i].units}});
    }
    json m = meta;
    m["columns"] = docs;
    os << json{{"metadata", m}, {"data", cols}}.dump(1) << "\n";
}

void emit(const std::vector<std::pair<std::string, Table>>& files, const RunConfig& c)
{
    std::vector<std::pair<fs::path, fs::path>> staged;
    auto cleanup = [&] {
        std::error_code ec;
        for (auto& [tmp, dst] : staged)
            fs::remove(tmp, ec);
    };
    const json meta = metadata(c);
    for (const auto& [path, table] : files) {
        const fs::path dst(path);
        const fs::path tmp = dst.string() + ".partial";
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) {
            cleanup();
            throw io_error("cannot write '" + path + "'");
        }
        staged.emplace_back(tmp, dst);
        json m = meta;
        m["table"] = dst.filename().string();
        if (c.format == "json")
            write_json(os, table, m);
        else
            write_csv(os, table, m);
        os.close();
        if (!os) {
            cleanup();
            throw io_error("write failed for '" + path + "'");
        }
    }
    for (auto& [tmp, dst] : staged) {
        std::error_code ec;
        fs::rename(tmp, dst, ec);
        if (ec) {
            cleanup();
            throw io_error("cannot move output into '" + dst.string() + "': " + ec.message());
        }
    }
}

Table series_table(const CoherenceSeries& s)
{
    Table t;
    t.columns = {{"t", "time after the quench", "1/J"},
                 {"fq", "maximal quantum Fisher information per N^2", "dimensionless"},
                 {"n_eff", "effective size N*fq", "sites"},
                 {"le", "Loschmidt echo magnitude", "dimensionless"},
                 {"r_le", "echo rate function -(1/N)log(le^2)", "dimensionless"},
                 {"r_fq", "MQFI rate function -(1/N)log(fq^2)", "dimensionless"},
                 {"argmax", "direction maximizing the variance", "label"},
                 {"vx", "collective variance of X", "dimensionless"},
                 {"vy", "collective variance of Y", "dimensionless"},
                 {"vz", "collective variance of Z", "dimensionless"}};
    for (const auto& p : s.points)
        t.rows.push_back({p.t, p.fq, p.nEff, p.le, p.rLe, p.rFq, to_string(p.argmax), p.Vx, p.Vy, p.Vz});
    return t;
}

Table events_table(const std::vector<Event>& ev)
{
    Table t;
    t.columns = {{"kind", "event type", "label"},
                 {"time", "event time", "1/J"},
                 {"metadata", "key=value pairs", "mixed"}};
    for (const auto& e : ev) {
        std::string meta;
        for (const auto& [k, v] : e.meta)
            meta += (meta.empty() ? "" : ";") + k + "=" + fmt(v);
        t.rows.push_back({to_string(e.kind), e.time, meta});
    }
    return t;
}

namespace {

std::string output_path(const RunConfig& c)
{
    if (!c.out.empty())
        return c.out;
    return (c.preset.empty() ? c.command : c.preset) + (c.format == "json" ? ".json" : ".csv");
}

void check_format(const RunConfig& c)
{
    if (c.format != "csv" && c.format != "json")
        throw usage_error("format must be csv or json");
}

std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

int revival_table(const RunConfig& c, std::ostream& log)
{
    const std::vector<int> sizes = c.sizes.empty() ? std::vector<int>{c.N} : c.sizes;
    const std::vector<double> l1s = c.lambda1s.empty() ? std::vector<double>{c.lambda1} : c.lambda1s;
    if (c.lambda2 != 1.0)
        throw usage_error("revival/decay tables need lambda2 = 1");

    Table t, fit;
    t.columns = {{"N", "chain length", "sites"},
                 {"lambda1", "initial coupling", "dimensionless"},
                 {"kind", "revival (FM start) or decay (PM start)", "label"},
                 {"measured", "extremum of fq within 25% of the prediction", "1/J"},
                 {"predicted", "N/(2 v_max)", "1/J"},
                 {"ratio", "measured/predicted", "dimensionless"}};
    fit.columns = {{"lambda1", "initial coupling", "dimensionless"},
                   {"slope", "linear fit of measured time against N", "1/J per site"},
                   {"intercept", "linear fit intercept", "1/J"}};
    std::vector<double> all_n, all_t;
    for (double l1 : l1s) {
        std::vector<double> xs, ys;
        for (int N : sizes) {
            const QuenchSpec spec{N, l1, c.lambda2, c.sector};
            const double pred = *revival_time_prediction(spec);
            SeriesOptions opt;
            opt.threads = c.threads;
            opt.detect = false;
            const CoherenceSeries s = run_series(spec, TimeGrid::span(1.5 * pred, c.dt), opt);
            const Event e = detect_revival_or_decay(s, pred);
            t.rows.push_back({double(N), l1, to_string(e.kind), e.time, pred, e.time / pred});
            log << "N=" << N << " lambda1=" << l1 << " " << to_string(e.kind) << " at " << e.time
                << " (predicted " << pred << ")\n";
            xs.push_back(N);
            ys.push_back(e.time);
        }
        all_n.insert(all_n.end(), xs.begin(), xs.end());
        all_t.insert(all_t.end(), ys.begin(), ys.end());
        if (xs.size() >= 2) {
            const auto [slope, icpt] = linear_fit(xs, ys);
            fit.rows.push_back({l1, slope, icpt});
        }
    }
    std::vector<std::pair<std::string, Table>> files{{output_path(c), t}};
    if (all_n.size() >= 2) {
        const auto [slope, icpt] = linear_fit(all_n, all_t);
        fit.rows.push_back({std::string("all"), slope, icpt});
        log << "slope of T against N: " << slope << "\n";
        files.emplace_back(with_suffix(output_path(c), ".fit"), fit);
    }
    emit(files, c);
    return ok;
}

}  // namespace

int cmd_quench(const RunConfig& c, std::ostream& log)
{
    check_format(c);
    if (!c.sizes.empty() || !c.lambda1s.empty())
        return revival_table(c, log);

    const QuenchSpec spec{c.N, c.lambda1, c.lambda2, c.sector};
    spec.validate();
    if (c.lambda2 == 1.0 && c.lambda1 != 1.0) {
        const double pred = *revival_time_prediction(spec);
        if (c.t_max < 1.25 * pred)
            throw detector_error("revival/decay detection needs t-max >= " + fmt(1.25 * pred));
    }
    SeriesOptions opt;
    opt.threads = c.threads;
    opt.detector = c.detector;
    const CoherenceSeries s = run_series(spec, TimeGrid::span(c.t_max, c.dt), opt);
    for (const auto& e : s.events)
        log << to_string(e.kind) << " at t = " << e.time << "\n";
    emit({{output_path(c), series_table(s)}, {with_suffix(output_path(c), ".events"), events_table(s.events)}}, c);
    return ok;
}

int cmd_static_scan(const RunConfig& c, std::ostream& log)
{
    check_format(c);
    const std::vector<int> sizes = c.sizes.empty() ? std::vector<int>{c.N} : c.sizes;
    const auto grid = lambda_grid(c.lambda_min, c.lambda_max, c.lambda_step);
    for (int N : sizes)
        QuenchSpec{N, grid.front(), grid.back(), c.sector}.validate();

    Table curve, summary, pidx;
    curve.columns = {{"N", "chain length", "sites"},
                     {"lambda", "coupling", "dimensionless"},
                     {"fq", "static MQFI per N^2", "dimensionless"},
                     {"dfq", "forward difference dfq/dlambda", "dimensionless"}};
    summary.columns = {{"N", "chain length", "sites"},
                       {"lambda_m", "steepest rise of fq", "dimensionless"},
                       {"one_minus_lambda_m", "distance of lambda_m from 1", "dimensionless"},
                       {"coarse", "1 if the grid did not bracket the peak", "flag"}};
    pidx.columns = {{"lambda", "coupling", "dimensionless"},
                    {"p", "slope of log max variance against log N", "dimensionless"}};

    std::vector<StaticScan> scans;
    std::vector<double> ns, gaps;
    for (int N : sizes) {
        StaticScan sc = static_scan(grid, N, c.sector, c.threads);
        double lm = sc.lambda_m;
        if (grid.size() >= 2 && !sc.coarse && c.refine_levels > 0)
            lm = refine_lambda_m(N, lm - 2 * c.lambda_step, lm + 2 * c.lambda_step, 21, c.refine_levels, c.sector,
                                 c.threads);
        for (std::size_t i = 0; i < grid.size(); ++i)
            curve.rows.push_back({double(N), grid[i], sc.fq[i], i < sc.dfq.size() ? sc.dfq[i] : NAN});
        summary.rows.push_back({double(N), grid.size() >= 2 ? lm : NAN, grid.size() >= 2 ? 1.0 - lm : NAN,
                                sc.coarse ? 1.0 : 0.0});
        if (sc.coarse)
            log << "warning: lambda grid too coarse to bracket lambda_m for N = " << N << "\n";
        log << "N=" << N << " lambda_m=" << lm << "\n";
        if (lm < 1.0 && !sc.coarse) {
            ns.push_back(N);
            gaps.push_back(1.0 - lm);
        }
        scans.push_back(std::move(sc));
    }
    std::vector<std::pair<std::string, Table>> files{{output_path(c), curve},
                                                     {with_suffix(output_path(c), ".summary"), summary}};
    if (sizes.size() >= 2) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            std::vector<double> x, y;
            for (std::size_t s = 0; s < sizes.size(); ++s) {
                x.push_back(sizes[s]);
                y.push_back(std::max(scans[s].fq[i], 1e-300) * double(sizes[s]) * sizes[s]);
            }
            pidx.rows.push_back({grid[i], fit_loglog(x, y).slope});
        }
        files.emplace_back(with_suffix(output_path(c), ".pindex"), pidx);
    }
    if (ns.size() >= 2) {
        const double e = fit_loglog(ns, gaps).slope;
        summary.rows.push_back({std::string("fit"), NAN, e, 0.0});
        files[1].second = summary;
        log << "exponent of 1 - lambda_m against N: " << e << "\n";
    }
    emit(files, c);
    return ok;
}

int cmd_sweep_final(const RunConfig& c, std::ostream& log)
{
    check_format(c);
    const auto grid = lambda_grid(c.lambda_min, c.lambda_max, c.lambda_step);
    QuenchSpec{c.N, c.lambda1, grid.back(), c.sector}.validate();
    const LongTimeSweep sw = long_time_sweep(c.lambda1, grid, c.N, c.t_ltr, c.window_fraction * c.t_ltr, c.dt,
                                             c.sector, c.threads);
    Table t;
    t.columns = {{"lambda2", "final coupling", "dimensionless"},
                 {"static_fq", "fq of the lambda2 ground state", "dimensionless"},
                 {"long_time_fq", "fq averaged over the trailing window", "dimensionless"},
                 {"derivative", "forward difference of long_time_fq", "dimensionless"},
                 {"log_derivative", "forward difference of log long_time_fq", "dimensionless"}};
    for (std::size_t i = 0; i < grid.size(); ++i)
        t.rows.push_back({grid[i], sw.static_fq[i], sw.long_time_fq[i],
                          i < sw.derivative.size() ? sw.derivative[i] : NAN,
                          i < sw.log_derivative.size() ? sw.log_derivative[i] : NAN});
    Table s;
    s.columns = {{"quantity", "summary entry", "label"}, {"value", "value", "mixed"}};
    s.rows = {{std::string("transition"), sw.transition},
              {std::string("transition_linear"), sw.transition_linear},
              {std::string("dephased_from"), sw.dephased_from},
              {std::string("t_ltr"), sw.t_ltr},
              {std::string("window"), sw.window}};
    log << "transition estimate lambda2 = " << sw.transition << " (linear-derivative peak "
        << sw.transition_linear << ")\n";
    emit({{output_path(c), t}, {with_suffix(output_path(c), ".summary"), s}}, c);
    return ok;
}

namespace {

struct Check {
    std::string name;
    std::string observable;
    double deviation = 0.0;
    double tolerance = 0.0;
    bool enforced = true;
    bool pass() const { return deviation <= tolerance; }
};

}  // namespace

int cmd_oracle_check(const RunConfig& c, std::ostream& log)
{
    if (c.N > oracle::max_ed_sites)
        throw oracle::size_error("exact diagonalization is capped at N = " + std::to_string(oracle::max_ed_sites));
    const int ned = c.N;
    const double n2 = double(ned) * ned;
    std::vector<Check> checks;
    auto pipeline = [&](const QuenchSpec& spec, double t) {
        Kernel g = eval_kernel(build_modes(spec), t);
        g(0) += c.corrupt_kernel;
        return variances(g);
    };
    auto fq_of = [](double vx, double vy, double vz, double nn) { return std::max({vx, vy, vz}) / nn; };

    // a comparison that throws counts as a failed check
    auto guard = [&](const std::string& name, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const std::runtime_error& e) {
            log << name << ": " << e.what() << "\n";
            checks.push_back({name, "exception", INFINITY, 0.0});
        }
    };

    // static: ground state of every coupling is exact
    const Sector ed_sector = ned % 2 ? Sector::Integer : Sector::Antiperiodic;
    guard("ed-static", [&] {
        double worst = 0;
        for (double l : {0.0, 0.5, 1.0, 2.0}) {
            const auto ed = oracle::ed_quench_observables(l, l, ned, {0.0})[0];
            const VarianceTriple v = pipeline({ned, l, l, ed_sector}, 0.0);
            worst = std::max({worst, std::abs(ed.Vx - v.Vx) / n2, std::abs(ed.Vy - v.Vy) / n2,
                              std::abs(ed.Vz - v.Vz) / n2, std::abs(ed.zExp - v.zExp) / ned});
        }
        checks.push_back({"ed-static", "variances/N^2", worst, 1e-8});
    });
    const std::vector<double> ed_times{0.3, 1.1, 2.7};
    const auto ed = oracle::ed_quench_observables(1.5, 0.5, ned, ed_times);
    guard("ed-assumptions", [&] {
        double assume = 0, xy = 0;
        for (const auto& o : ed) {
            assume = std::max({assume, o.xExp, o.yExp, o.xzSym, o.yzSym});
            xy = std::max(xy, o.xySym / n2);
        }
        checks.push_back({"ed-assumptions", "<X>,<Y>,<XZ+ZX>,<YZ+ZY>", assume, 1e-9});
        checks.push_back({"ed-assumptions", "<XY+YX>/N^2", xy, 1e-9, c.strict});
    });
    if (ed_sector == Sector::Integer) {
        guard("ed-vs-majorana-full", [&] {
            double worst = 0;
            for (std::size_t i = 0; i < ed_times.size(); ++i) {
                const auto m = oracle::majorana_correlators({ned, 1.5, 0.5}, ed_times[i], oracle::WickMode::Full);
                worst = std::max({worst, std::abs(m.Vx - ed[i].Vx) / n2, std::abs(m.Vy - ed[i].Vy) / n2,
                                  std::abs(m.Vz - ed[i].Vz) / n2});
            }
            checks.push_back({"ed-vs-majorana-full", "variances/N^2", worst, 1e-8});
        });
        guard("ed-vs-toeplitz", [&] {
            double worst = 0;
            for (std::size_t i = 0; i < ed_times.size(); ++i) {
                const VarianceTriple v = pipeline({ned, 1.5, 0.5}, ed_times[i]);
                worst = std::max(worst, std::abs(fq_of(v.Vx, v.Vy, v.Vz, n2) - ed[i].fq));
            }
            checks.push_back({"ed-vs-toeplitz", "fq", worst, 0.05, c.strict});
        });
    }
    guard("echo-vs-mode-pairs", [&] {
        double le = 0;
        for (int N : {9, 21})
            for (auto [l1, l2] : {std::pair{1.5, 0.5}, {0.2, 2.0}, {2.0, 0.2}})
                for (double t : {0.3, 1.1, 2.7})
                    le = std::max(le, std::abs(loschmidt_echo(build_modes({N, l1, l2}), t)
                                               - oracle::mode_pair_echo(l1, l2, N, t)));
        checks.push_back({"echo-vs-mode-pairs", "le", le, 1e-10});
    });
    guard("majorana-vs-toeplitz", [&] {
        const int N = 51;
        const double nn = double(N) * N;
        double gk = 0, corr = 0, var = 0;
        for (auto [l1, l2] : {std::pair{2.0, 0.2}, {0.2, 2.0}, {1.5, 1.0}})
            for (double t : {0.0, 0.7, 3.7}) {
                const QuenchSpec spec{N, l1, l2};
                Kernel g = eval_kernel(build_modes(spec), t);
                g(0) += c.corrupt_kernel;
                const auto m = oracle::majorana_correlators(spec, t, oracle::WickMode::Contraction);
                for (std::size_t j = 0; j < g.values.size(); ++j)
                    gk = std::max(gk, std::abs(g.values[j] - m.kernel[j]));
                const auto xx = xx_minor_sequence(g), yy = yy_minor_sequence(g), zz = zz_sequence(g);
                for (int n = 1; n < N; ++n)
                    corr = std::max({corr, std::abs(xx[n - 1] - m.xx[n]), std::abs(yy[n - 1] - m.yy[n]),
                                     std::abs(zz[n - 1] - m.zz[n])});
                const VarianceTriple v = variances(g);
                var = std::max({var, std::abs(v.Vx - m.Vx) / nn, std::abs(v.Vy - m.Vy) / nn,
                                std::abs(v.Vz - m.Vz) / nn});
            }
        checks.push_back({"majorana-vs-toeplitz", "kernel", gk, 1e-8});
        checks.push_back({"majorana-vs-toeplitz", "xx,yy,zz correlators", corr, 1e-8});
        checks.push_back({"majorana-vs-toeplitz", "variances/N^2", var, 1e-8});
    });

    Table t;
    t.columns = {{"check", "comparison", "label"},
                 {"observable", "compared quantity", "label"},
                 {"max_deviation", "largest absolute deviation", "dimensionless"},
                 {"tolerance", "allowed deviation", "dimensionless"},
                 {"enforced", "1 if the check sets the exit status", "flag"},
                 {"status", "pass or fail", "label"}};
    bool failed = false;
    for (const auto& ch : checks) {
        const char* status = ch.pass() ? "pass" : ch.enforced ? "FAIL" : "report";
        if (!ch.pass() && ch.enforced)
            failed = true;
        log << ch.name << " [" << ch.observable << "] max deviation " << fmt(ch.deviation) << " (tol "
            << fmt(ch.tolerance) << ") " << status << "\n";
        t.rows.push_back({ch.name, ch.observable, ch.deviation, ch.tolerance, ch.enforced ? 1.0 : 0.0,
                          std::string(status)});
    }
    if (!c.out.empty())
        emit({{c.out, t}}, c);
    return failed ? failure : ok;
}

int run(int argc, char** argv)
{
    CLI::App app{"Post-quench coherence dynamics of the transverse-field Ising chain"};
    app.require_subcommand(1);

    RunConfig cli_cfg;
    std::string config_file, preset_name, sector_name;
    std::optional<int> n;
    std::optional<double> l1, l2, t_max, dt;
    std::optional<std::string> out, format;
    std::optional<int> threads;
    bool strict = false;
    double corrupt = 0.0;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"static-scan", "static MQFI against lambda, lambda_m and p-index"},
        {"quench", "coherence series after a sudden quench, or revival tables"},
        {"sweep-final", "long-time MQFI against the final coupling"},
        {"oracle-check", "compare the pipeline with exact diagonalization and Majorana oracles"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--n", n, "chain length");
        sub->add_option("--lambda1", l1, "pre-quench coupling");
        sub->add_option("--lambda2", l2, "post-quench coupling");
        sub->add_option("--sector", sector_name, "momentum grid: integer | antiperiodic");
        sub->add_option("--t-max", t_max, "last time point");
        sub->add_option("--dt", dt, "time step");
        sub->add_option("--preset", preset_name, "named experiment")
            ->check(CLI::IsMember(preset_names()));
        sub->add_option("--out", out, "output file; sidecars share its stem");
        sub->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--threads", threads, "worker threads (default: TFIM_THREADS or all cores)");
        sub->add_option("--config", config_file, "JSON run configuration")->check(CLI::ExistingFile);
        if (name == "oracle-check") {
            sub->add_flag("--strict", strict, "also enforce the exact-diagonalization dynamic rows");
            sub->add_option("--corrupt-kernel", corrupt, "fault injection: shift G_0 by this amount")
                ->group("");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        const std::string command = app.get_subcommands().front()->get_name();
        RunConfig c;
        c.command = command;
        if (command == "oracle-check")
            c.N = 9;
        if (!config_file.empty()) {
            std::ifstream is(config_file);
            json j;
            try {
                is >> j;
                c = j.get<RunConfig>();
            } catch (const json::exception& e) {
                throw usage_error(std::string("bad config file: ") + e.what());
            }
        }
        if (!preset_name.empty())
            c = preset(preset_name);
        if (c.command != command)
            throw usage_error("preset/config describes '" + c.command + "', not '" + command + "'");
        if (n) c.N = *n;
        if (l1) c.lambda1 = *l1;
        if (l2) c.lambda2 = *l2;
        if (!sector_name.empty()) c.sector = parse_sector(sector_name);
        if (t_max) c.t_max = *t_max;
        if (dt) c.dt = *dt;
        if (out) c.out = *out;
        if (format) c.format = *format;
        if (threads) c.threads = *threads;
        if (strict) c.strict = true;
        if (corrupt != 0.0) c.corrupt_kernel = corrupt;

        if (command == "static-scan")
            return cmd_static_scan(c, std::cout);
        if (command == "quench")
            return cmd_quench(c, std::cout);
        if (command == "sweep-final")
            return cmd_sweep_final(c, std::cout);
        return cmd_oracle_check(c, std::cout);
    } catch (const detector_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const usage_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
}

}  // namespace tfim::cli
