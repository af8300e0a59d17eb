#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "topu/errors.hpp"
#include "topu/experiment_harness.hpp"

namespace fs = std::filesystem;
using namespace topu;

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kRunFailure = 2, kInternal = 3 };

struct TimedRun {
    RunResult run;
    double wall_seconds = 0.0;
};

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("<file>", "cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string run_stem(const RunResult& r) {
    return r.scenario + "_" + to_string(r.strategy) + "_seed" + std::to_string(r.seed);
}

TimedRun timed(const ScenarioConfig& c, Strategy s, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    TimedRun t{run_single(c, s, seed)};
    t.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return t;
}

std::string timing_csv(const std::vector<TimedRun>& runs) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6);
    os << "scenario,strategy,seed,robot,planning_calls,planning_seconds,run_wall_seconds\n";
    for (const auto& t : runs)
        for (const auto& r : t.run.trace.robots)
            os << t.run.scenario << "," << to_string(t.run.strategy) << "," << t.run.seed << "," << r.id << ","
               << r.planning_calls << "," << r.planning_seconds << "," << t.wall_seconds << "\n";
    return os.str();
}

std::string timing_key(const std::string& scenario, const std::string& strategy, const std::string& seed,
                       const std::string& robot) {
    return scenario + "|" + strategy + "|" + seed + "|" + robot;
}

std::string timing_key(const RunResult& r, RobotId robot) {
    return timing_key(r.scenario, to_string(r.strategy), std::to_string(r.seed), std::to_string(robot));
}

// Planning wall time lives in the timing sidecar, not in canonical traces.
void read_timing(const std::string& text, std::map<std::string, double>& seconds) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream row(line);
        for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
        if (cells.size() < 6) continue;
        seconds[timing_key(cells[0], cells[1], cells[2], cells[3])] = std::stod(cells[5]);
    }
}

bool failed(const RunResult& r) {
    return r.trace.outcome == Outcome::Timeout || r.trace.outcome == Outcome::JointPlanFailure;
}

void write_runs(const fs::path& out, const std::vector<TimedRun>& runs) {
    std::vector<RunResult> plain;
    for (const auto& t : runs) {
        write_file(out / "traces" / (run_stem(t.run) + ".json"), trace_to_json(t.run));
        write_file(out / "events" / (run_stem(t.run) + ".csv"), trace_events_csv(t.run.trace));
        plain.push_back(t.run);
    }
    write_file(out / "metrics.csv", metrics_csv(plain));
    write_file(out / "timing.csv", timing_csv(runs));
}

int report(const std::vector<TimedRun>& runs, bool strict) {
    int failures = 0;
    for (const auto& t : runs) {
        std::cout << run_stem(t.run) << ": " << to_string(t.run.trace.outcome) << " at tick "
                  << t.run.trace.completion_tick;
        if (!t.run.trace.failure.empty()) std::cout << " (" << t.run.trace.failure << ")";
        std::cout << "\n";
        if (failed(t.run)) ++failures;
    }
    return strict && failures > 0 ? kRunFailure : kOk;
}

ScenarioConfig load(const std::string& path, std::optional<std::uint64_t> max_ticks) {
    auto c = load_config(path);
    if (max_ticks) c.sim.max_ticks = *max_ticks;
    return c;
}

void print_deltas(const Comparison& c) {
    std::cout << std::fixed << std::setprecision(1);
    std::cout << "scenario                     load   distance  switching  replans  planning  locomotion\n";
    auto pct = [](const std::optional<double>& v) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(1);
        if (v)
            os << std::showpos << *v << "%";
        else
            os << "n/a";
        return os.str();
    };
    for (const auto& d : c.deltas)
        std::cout << std::left << std::setw(28) << d.scenario << std::right << std::setw(6) << d.load << std::setw(11)
                  << pct(d.distance) << std::setw(11) << pct(d.switching) << std::setw(9) << pct(d.replans)
                  << std::setw(10) << pct(d.planning_time) << std::setw(12) << pct(d.locomotion_time) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-robot task ordering simulator"};
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> configs;
    std::string out = "out";
    std::string strategy_name;
    std::uint64_t seed = 1;
    std::optional<std::uint64_t> max_ticks;
    bool strict = false;

    auto* run = app.add_subcommand("run", "Run one scenario for one seed");
    run->add_option("--config", config, "Scenario file")->required();
    run->add_option("--seed", seed, "Run seed");
    run->add_option("--strategy", strategy_name, "trg or cfnu (default: every strategy in the config)");
    run->add_option("--max-ticks", max_ticks, "Override sim.max_ticks");
    run->add_option("--out", out, "Output directory");
    run->add_flag("--strict", strict, "Exit 2 on Timeout or JointPlanFailure");

    auto* suite = app.add_subcommand("suite", "Run scenarios over their seeds and strategies");
    suite->add_option("--config", configs, "Scenario files")->required();
    suite->add_option("--max-ticks", max_ticks, "Override sim.max_ticks");
    suite->add_option("--out", out, "Output directory");
    suite->add_flag("--strict", strict, "Exit 2 on Timeout or JointPlanFailure");

    std::vector<std::string> trace_dirs;
    auto* cmp = app.add_subcommand("compare", "Tabulate TRG against CFNU from trace directories");
    cmp->add_option("dirs", trace_dirs, "Directories holding trace JSON files")->required();
    cmp->add_option("--out", out, "Output directory");

    std::string trace_path;
    auto* render = app.add_subcommand("render", "Draw a trace as SVG");
    render->add_option("--trace", trace_path, "Trace JSON")->required();
    render->add_option("--config", config, "Scenario file the trace came from")->required();
    render->add_option("--out", out, "SVG path")->required();

    auto* validate = app.add_subcommand("validate", "Check scenario files");
    validate->add_option("--config", configs, "Scenario files")->required();

    auto* exporter = app.add_subcommand("export-scenarios", "Write the built-in scenario library");
    exporter->add_option("--out", out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*run) {
            const auto c = load(config, max_ticks);
            std::vector<Strategy> strategies = c.strategies;
            if (!strategy_name.empty()) strategies = {strategy_from_string(strategy_name)};
            std::vector<TimedRun> runs;
            for (Strategy s : strategies) runs.push_back(timed(c, s, seed));
            write_runs(out, runs);
            return report(runs, strict);
        }
        if (*suite) {
            std::vector<TimedRun> runs;
            std::vector<RunResult> plain;
            for (const auto& path : configs) {
                const auto c = load(path, max_ticks);
                c.validate();
                auto seeds = c.seeds;
                std::sort(seeds.begin(), seeds.end());
                for (Strategy s : c.strategies)
                    for (auto sd : seeds) {
                        runs.push_back(timed(c, s, sd));
                        plain.push_back(runs.back().run);
                    }
            }
            write_runs(out, runs);
            bool both = true;
            for (Strategy s : {Strategy::Trg, Strategy::Cfnu})
                both = both && std::any_of(plain.begin(), plain.end(), [&](const auto& r) { return r.strategy == s; });
            if (both) {
                const auto comparison = compare(plain);
                write_file(fs::path(out) / "comparison.csv", comparison_csv(comparison));
                write_file(fs::path(out) / "deltas.csv", deltas_csv(comparison));
                print_deltas(comparison);
            }
            return report(runs, strict);
        }
        if (*cmp) {
            std::vector<fs::path> files;
            for (const auto& dir : trace_dirs)
                for (const auto& entry : fs::recursive_directory_iterator(dir))
                    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
            std::sort(files.begin(), files.end());
            std::vector<RunResult> runs;
            for (const auto& f : files) runs.push_back(trace_from_json(read_file(f)));
            std::map<std::string, double> seconds;
            for (const auto& dir : trace_dirs)
                for (const fs::path& p : {fs::path(dir) / "timing.csv", fs::path(dir) / ".." / "timing.csv"})
                    if (fs::exists(p)) read_timing(read_file(p), seconds);
            for (auto& r : runs)
                for (auto& robot : r.trace.robots) {
                    auto it = seconds.find(timing_key(r, robot.id));
                    if (it != seconds.end()) robot.planning_seconds = it->second;
                }
            const auto comparison = compare(runs);
            write_file(fs::path(out) / "comparison.csv", comparison_csv(comparison));
            write_file(fs::path(out) / "deltas.csv", deltas_csv(comparison));
            print_deltas(comparison);
            return kOk;
        }
        if (*render) {
            const auto c = load_config(config);
            const auto r = trace_from_json(read_file(trace_path));
            write_file(out, render_svg(r.trace, c.environment, c.tasks));
            return kOk;
        }
        if (*validate) {
            int code = kOk;
            for (const auto& path : configs) {
                try {
                    const auto c = load_config(path);
                    std::cout << path << ": ok (" << c.name << ", load " << load_value(c) << ")\n";
                } catch (const ValidationError& e) {
                    std::cout << path << ": " << e.what() << "\n";
                    code = kValidation;
                }
            }
            return code;
        }
        if (*exporter) {
            for (const auto& c : scenario_library()) {
                const fs::path file = fs::path(out) / (c.name + ".json");
                write_file(file, config_to_json(c));
                std::cout << file.string() << "\n";
            }
            return kOk;
        }
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const MissingStrategy& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kInternal;
}
