#pragma once

#include "tfim/coherence.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace tfim::cli {

enum Exit { ok = 0, failure = 1, usage = 2 };

class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command = "quench";  // static-scan | quench | sweep-final | oracle-check
    std::string preset;
    int N = 201;
    double lambda1 = 0.2;
    double lambda2 = 2.0;
    Sector sector = Sector::Integer;
    double t_max = 4.0;
    double dt = 0.01;
    std::vector<int> sizes;          // static-scan sizes, revival tables
    std::vector<double> lambda1s;    // revival tables
    double lambda_min = 0.0, lambda_max = 3.0, lambda_step = 0.01;  // static-scan / sweep grid
    int refine_levels = 6;
    double t_ltr = 20.0;
    double window_fraction = 0.2;
    DetectorSettings detector;
    std::string out;
    std::string format = "csv";
    int threads = 0;
    bool deterministic = true;
    bool strict = false;             // oracle-check: enforce the ED dynamic rows as well
    double corrupt_kernel = 0.0;     // oracle-check fault injection

    bool operator==(const RunConfig&) const = default;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

std::vector<std::string> preset_names();
RunConfig preset(const std::string& name);

// FNV-1a of the canonical JSON dump
std::string config_hash(const RunConfig& c);

std::vector<double> lambda_grid(double lo, double hi, double step);

struct Column {
    std::string name;
    std::string description;
    std::string units;
};

// nullopt cells mark divergent rates
using Cell = std::variant<double, std::string, std::optional<double>>;

struct Table {
    std::vector<Column> columns;
    std::vector<std::vector<Cell>> rows;
};

void write_csv(std::ostream& os, const Table& t, const nlohmann::json& meta);
void write_json(std::ostream& os, const Table& t, const nlohmann::json& meta);

// All tables land or none do: each goes to a temporary first, then renamed.
void emit(const std::vector<std::pair<std::string, Table>>& files, const RunConfig& c);

Table series_table(const CoherenceSeries& s);
Table events_table(const std::vector<Event>& ev);

int cmd_static_scan(const RunConfig& c, std::ostream& log);
int cmd_quench(const RunConfig& c, std::ostream& log);
int cmd_sweep_final(const RunConfig& c, std::ostream& log);
int cmd_oracle_check(const RunConfig& c, std::ostream& log);

int run(int argc, char** argv);

}  // namespace tfim::cli
