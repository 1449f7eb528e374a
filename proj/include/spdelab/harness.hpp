#ifndef SPDELAB_HARNESS_HPP
#define SPDELAB_HARNESS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdelab/regularity.hpp"
#include "spdelab/spde.hpp"
#include "spdelab/split.hpp"

namespace spdelab {

inline constexpr const char* kVersion = "spdelab 0.1.0";

/// Raised on malformed configs and bad CLI usage; mapped to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat, typed key=value configuration. Unknown keys are rejected; scenario
/// presets fill defaults for keys the file does not set. The canonical hash
/// of the fully resolved configuration is embedded in every output artifact.
class ExperimentConfig {
  public:
    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_string(const std::string& text);
    /// preset without a config file ("heat", "additive", ...)
    static ExperimentConfig preset(const std::string& scenario);

    void override_seed(std::uint64_t seed);
    void override_replicas(std::size_t replicas);

    const std::string& scenario() const { return scenario_; }
    std::string get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;

    std::string canonical() const;  // sorted key=value lines
    std::string hash() const;       // fnv1a-64 of canonical(), hex

    // resolved model builders
    SpatialGrid grid() const;
    TimeGrid times() const;
    CoefficientSet coefficients() const;
    NoiseModel noise_model() const;
    std::function<double(double)> u0_profile() const;
    SpdeRunConfig run_config(std::uint64_t replica_seed) const;

    std::uint64_t master_seed() const { return get_u64("noise.seed"); }
    std::size_t replicas() const { return get_size("replicas"); }
    std::size_t threads() const;
    std::uint64_t replica_seed(std::size_t replica_index) const;

  private:
    std::string scenario_ = "custom";
    std::map<std::string, std::string> kv_;
    void validate_keys() const;
    void apply_preset_defaults();
};

/// Per-replica scalar metrics, persisted so aggregates stay recomputable.
struct ReplicaRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::map<std::string, double> metrics;
};

struct Aggregate {
    double mean = 0.0, stddev = 0.0, min_v = 0.0, max_v = 0.0;
    double q25 = 0.0, median = 0.0, q75 = 0.0;
    std::size_t count = 0;
};

/// One-pass (Welford) aggregation plus exact quantiles from a sorted copy.
Aggregate aggregate(const std::vector<double>& values);
/// Two-pass reference used to validate the one-pass path.
Aggregate aggregate_two_pass(const std::vector<double>& values);

struct CheckVerdict {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct ScenarioOutcome {
    std::string command;
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::vector<ReplicaRecord> records;
    std::map<std::string, Aggregate> aggregates;  // per metric
    std::vector<CheckVerdict> verdicts;
    std::vector<RegularityReport> regularity;     // cli_regularity only
    bool all_pass = true;

    void add_verdict(std::string name, bool pass, double value, std::string detail = "");
    void finalize_aggregates();
};

// CLI operations; out_dir empty suppresses file output.
ScenarioOutcome cli_simulate(const ExperimentConfig& config, const std::string& out_dir);
ScenarioOutcome cli_decompose(const ExperimentConfig& config, const std::string& out_dir);
ScenarioOutcome cli_regularity(const ExperimentConfig& config, const std::string& out_dir);
ScenarioOutcome cli_converge(const ExperimentConfig& config, const std::string& out_dir);
ScenarioOutcome cli_checks(const ExperimentConfig& config, const std::string& out_dir);

/// map a finished outcome to the documented exit code (0 pass / 1 fail)
int exit_code(const ScenarioOutcome& outcome);

namespace detail {
/// run fn(replica_index) for every replica on a bounded pool; results must be
/// written into preallocated per-replica slots so the merge is deterministic
void for_each_replica(std::size_t replicas, std::size_t threads,
                      const std::function<void(std::size_t)>& fn);
std::uint64_t fnv1a64(const std::string& data);
void write_text_atomic(const std::string& path, const std::string& text);
}  // namespace detail

}  // namespace spdelab

#endif
