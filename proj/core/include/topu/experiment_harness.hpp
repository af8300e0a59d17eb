#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "topu/sim_engine.hpp"

namespace topu {

inline constexpr int kFormatVersion = 1;

struct ScenarioConfig {
    std::string name = "scenario";
    EnvironmentMap environment{Rect{0.0, 0.0, 10.0, 10.0}, {}};
    std::string environment_file;  // set when the environment came from a file
    std::vector<TaskSpec> tasks;
    std::vector<RobotSpec> robots;
    std::vector<Strategy> strategies{Strategy::Trg, Strategy::Cfnu};
    std::vector<std::uint64_t> seeds{1};
    SimParams sim;
    HmmParams hmm = HmmParams::defaults();
    PlannerConfig planner;
    MdpSettings mdp;
    double pll_gamma = 1.5;
    std::size_t hmm_window = 50;
    UnavailabilityMode unavailability = UnavailabilityMode::Normalize;

    /// Throws ValidationError with a dotted field path.
    void validate() const;

    /// Scheduler settings for one run. The roadmap sampling seed follows the
    /// run seed so that repeated seeds differ in more than message loss.
    SchedulerConfig scheduler_config(std::uint64_t seed) const;

    int task_count() const { return static_cast<int>(tasks.size()); }
    int robot_count() const { return static_cast<int>(robots.size()); }
    /// Largest visit requirement over the tasks.
    int visits() const;
};

/// Average task load per robot.
double load_value(int tasks, int robots, int visits);
double load_value(const ScenarioConfig& config);

/// Parse and validate. Relative environment files resolve against `base_dir`.
ScenarioConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ScenarioConfig& config);

struct RunResult {
    std::string scenario;
    double load = 0.0;
    Strategy strategy = Strategy::Trg;
    std::uint64_t seed = 0;
    SimTrace trace;
};

RunResult run_single(const ScenarioConfig& config, Strategy strategy, std::uint64_t seed);

/// One run per (strategy, seed), strategies in config order, seeds ascending.
std::vector<RunResult> run_suite(const ScenarioConfig& config);

/// Per-run totals over robots.
struct RunMetrics {
    double distance = 0.0;
    double switching = 0.0;
    double non_switching = 0.0;
    double replans = 0.0;
    double planning_time = 0.0;    // seconds, wall clock
    double locomotion_time = 0.0;  // seconds, simulated
    double total_time() const { return planning_time + locomotion_time; }
};
RunMetrics run_metrics(const RunResult& run);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for one value
    std::size_t n = 0;
};
MeanStd mean_std(const std::vector<double>& values);

struct ComparisonRow {
    std::string scenario;
    double load = 0.0;
    Strategy strategy = Strategy::Trg;
    MeanStd distance, switching, non_switching, replans, planning_time, locomotion_time, total_time;
};

/// Percentage change of TRG relative to CFNU; empty when CFNU's mean is 0
/// and TRG's is not.
struct DeltaRow {
    std::string scenario;
    double load = 0.0;
    std::optional<double> distance, switching, non_switching, replans, planning_time, locomotion_time, total_time;
};

struct Comparison {
    std::vector<ComparisonRow> rows;  // sorted by load, scenario, strategy
    std::vector<DeltaRow> deltas;     // one per scenario
};

std::optional<double> percent_delta(double trg, double cfnu);

/// Throws MissingStrategy unless every scenario has runs of both strategies.
Comparison compare(const std::vector<RunResult>& runs);

std::string comparison_csv(const Comparison& c);
std::string deltas_csv(const Comparison& c);

/// Canonical trace document: wall-clock timings are left out unless asked for,
/// so that identical runs serialize identically.
std::string trace_to_json(const RunResult& run, bool include_wall_time = false);
RunResult trace_from_json(const std::string& json_text);
/// One row per event: tick, robot, kind, payload.
std::string trace_events_csv(const SimTrace& trace);
/// One row per run and robot with the flat metrics.
std::string metrics_csv(const std::vector<RunResult>& runs);

/// SVG drawing of obstacles, tasks, robot trajectories and replan points.
std::string render_svg(const SimTrace& trace, const EnvironmentMap& environment, const std::vector<TaskSpec>& tasks);

/// The shipped scenarios: eight (tasks, robots, visits) load settings, a two-robot wall
/// scenario and an obstacle-free single-robot control.
std::vector<ScenarioConfig> scenario_library();

/// Fraction of a lone CFNU robot's replans that switched task, used when
/// placing tasks.
double cfnu_switch_fraction(const ScenarioConfig& config, std::uint64_t seed);

}  // namespace topu
