#pragma once

#include "slung/controller.hpp"
#include "slung/dynamics.hpp"
#include "slung/extensions.hpp"
#include "slung/metrics.hpp"
#include "slung/wind.hpp"

#include <json.hpp>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace slung {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string variant = "custom";
    SimParams sim;
    ControllerParams ctrl;
    ModeFlags modes;
    ReferenceParams ref;
    DrydenParams wind;
    L1Params l1;
    MpcConfig mpc;
    bool d_rope_auto = true; // slot elevation follows the rope geometry
    double reshape_t_trans = 5.0;
    double reshape_threshold = 0.5;
    double reshape_window = 0.1;
    FaultSchedule faults;
    Window window;
    double slack_eps = 0.1;
    double trace_rate = 100.0; // Hz for trace.csv
    bool full_rate_trace = false;
};

/// Parses "key = value" lines. '#' starts a comment. Unknown keys throw ConfigError.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path);
/// Every key with its resolved value, in schema order.
std::string serialize_config(const RunConfig& c);

struct ConfigKey {
    std::string name;
    std::string type;
    std::string doc;
};
std::vector<ConfigKey> config_schema();

/// Fills derived fields (controller copies of plant constants, L1 gains).
void resolve(RunConfig& c);

struct RunStats {
    double wall_seconds = 0.0;
    long wind_evals = 0;
    long clip_events = 0;
    double clip_rate = 0.0;
    long mpc_solves = 0;
    long mpc_failures = 0;
    long mpc_max_iterations = 0;
    double mpc_max_slack = 0.0;
    long l1_projection_hits = 0;
    int reshape_messages = 0;
    long reshape_bits = 0;
    int reshape_bits_per_message = 0;
    std::vector<double> latch_times;
    double ff_residual_ratio_max = 0.0; // T(1-cos theta)/T over ticks with theta <= 0.75
    double ff_residual_bound = 0.0;     // 1 - cos(0.75)
    double fidelity_max_deviation = 0.0; // drone-side vs lumped, taut samples in window
    std::vector<double> fault_ticks;     // snapped times
};

struct RunArtifacts {
    RunConfig config;
    bool ok = false;
    std::string error;
    double t_end = 0.0;
    Trace trace;
    RunMetrics metrics;
    RunStats stats;
    std::string csv;      // decimated trace
    std::string csv_full; // full-rate metric inputs (when enabled)
    std::uint64_t hash = 0;
};

/// Optional observer called after each tick with the world (tests use this).
using TickHook = std::function<void(const WorldState&, const std::vector<ControlOutput>&)>;

RunArtifacts run(const RunConfig& cfg, const TickHook& hook = {});

MetricsOptions metrics_options(const RunConfig& cfg);
std::vector<FaultEvent> snapped_faults(const RunConfig& cfg);

nlohmann::json metrics_json(const RunMetrics& m);
nlohmann::json run_json(const RunArtifacts& a);
nlohmann::json gates_json(const RunArtifacts& a);

/// Writes config.cfg, trace.csv, optional trace_full.csv, metrics.json, run.json.
void write_artifacts(const RunArtifacts& a, const std::string& dir);

/// Reads a full-rate (or decimated) trace CSV back into a Trace.
Trace read_trace_csv(const std::string& text);
std::string full_trace_csv(const Trace& tr);

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ULL);

// ---------------------------------------------------------------- campaign

struct CampaignEntry {
    std::string tag;
    std::string group; // V, P2A, P2B, P2C, P2D, DWELL, GAMMA
    RunConfig cfg;
    double sweep = 0.0;
    std::string mode;
};

/// selection: "all" or a comma list of groups or tags.
std::vector<CampaignEntry> campaign_matrix(const std::string& selection = "all");

RunConfig variant_config(const std::string& tag);

struct CampaignRun {
    CampaignEntry entry;
    bool ok = false;
    std::string error;
    RunMetrics metrics;
    RunStats stats;
    std::uint64_t hash = 0;
    std::string dir;
    double time_over_ceiling = 0.0; // fraction of window samples above mpc_t_max
    double wall_seconds = 0.0;
};

/// Runs entries on a worker pool. Writes artifacts when out_dir is non-empty.
std::vector<CampaignRun> run_campaign(const std::vector<CampaignEntry>& entries,
                                      const std::string& out_dir, int jobs,
                                      const std::function<void(const CampaignRun&)>& progress = {});

nlohmann::json campaign_summary(const std::vector<CampaignRun>& runs);

/// True when V1-V6 meet the tracking thresholds and domain gates.
bool campaign_pass(const std::vector<CampaignRun>& runs);

nlohmann::json certificate_json(const ControllerParams& c, const SimParams& s, double gamma,
                                double l1_ts, double omega_c);

} // namespace slung
