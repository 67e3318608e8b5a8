#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hedgemix/agent.hpp"
#include "hedgemix/domain.hpp"
#include "hedgemix/injector.hpp"

namespace hedgemix {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An operator action applied at a step boundary.
struct Command {
  enum class Kind { kInject, kRetire };
  Kind kind = Kind::kInject;
  std::size_t t = 0;  // scripted commands: boundary before step t
  InjectionCommand inject;
  SpecialistId id = 0;  // retire target

  json to_json() const;
};

// Parses {"kind": "inject", "specs": [...], "pretrain": bool, "drop": id | "lowest"}
// or {"kind": "retire", "id": n}; a "t" key is accepted for scripted commands.
// Specs are validated against the registry; errors are SpecError with the
// offending field paths.
Command parse_command(const json& j, const PredicateRegistry& registry, bool allow_time);

struct ExperimentConfig {
  std::string domain = "rps";
  std::size_t steps = 1000;
  std::vector<std::uint64_t> seeds{1};
  std::string policy = "agent";  // agent | random | fixed
  Action fixed_action = 0;
  json agent = json::object();     // overrides of the domain defaults
  json env = json::object();
  json schedule = json::object();  // overrides of the domain defaults
  std::string injection_mode = "simulated";  // simulated | live | both
  json commands = json::array();   // scripted operator commands
  std::size_t smoothing = 500;
  std::string output = "runs/out";
  bool start_paused = false;      // serve only
  std::size_t step_delay_ms = 0;  // serve only

  static ExperimentConfig from_json(const json& j);
  json to_json() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
AgentConfig resolve_agent(const AgentConfig& defaults, const json& overrides);
InjectionSchedule resolve_schedule(const InjectionSchedule& defaults, const json& overrides);

// A non-negative JSON integer, signed or unsigned.
bool is_natural(const json& v);

// Shortest round-trip decimal form.
std::string format_double(double x);
std::string csv_escape(const std::string& s);

struct CommandResult {
  int status = 200;  // HTTP-style: 200 ok, 400 invalid, 404 unknown id, 409 conflict
  json body = json::object();
};

// One seeded run: environment, agent, injector and logs. Both the batch
// runner and the control server drive it one step at a time.
class Session {
 public:
  Session(const ExperimentConfig& config, std::uint64_t seed, std::optional<std::filesystem::path> out_dir);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  std::size_t t() const { return agent_->time(); }
  bool done() const { return t() >= config_.steps; }
  const ExperimentConfig& config() const { return config_; }
  const Domain& domain() const { return domain_; }
  Agent& agent() { return *agent_; }
  const Agent& agent() const { return *agent_; }
  std::uint64_t seed() const { return seed_; }

  // Applies an operator command at the current boundary and logs it.
  CommandResult apply(const Command& c);
  const StepRecord& step();
  void run();

  double smoothed_reward() const;
  double mean_reward() const { return t() ? reward_total_ / static_cast<double>(t()) : 0.0; }
  const std::vector<double>& rewards() const { return rewards_; }
  json status() const;
  json step_event(const StepRecord& rec) const;

  void flush();

  std::function<void(const StepRecord&)> on_step;
  // admit/retire events as they are logged
  std::function<void(std::size_t t, const std::string& kind, SpecialistId id, const std::string& detail)> on_event;

 private:
  void boundary();
  SpecialistId admit(const InjectionCommand& c, std::size_t t);
  void log_event(std::size_t t, const std::string& kind, SpecialistId id, const std::string& detail);

  ExperimentConfig config_;
  std::uint64_t seed_;
  Domain domain_;
  std::unique_ptr<Environment> env_;
  std::unique_ptr<Agent> agent_;
  std::unique_ptr<Injector> injector_;
  Rng policy_rng_;
  std::vector<Command> scripted_;
  std::size_t next_scripted_ = 0;
  std::size_t boundary_done_ = static_cast<std::size_t>(-1);
  StepRecord last_;
  std::vector<double> rewards_;
  std::deque<double> window_;
  double window_sum_ = 0.0;
  double reward_total_ = 0.0;

  std::optional<std::filesystem::path> out_;
  std::ofstream steps_csv_, weights_csv_, events_csv_, losses_csv_, commands_log_;
};

struct RunSummary {
  std::filesystem::path output;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> rewards;  // per seed, per step
};

// Runs every seed, writes per-seed logs under output/seed_<s>/, the
// resolved config and aggregate.csv (mean/std of smoothed reward).
RunSummary run_experiment(const ExperimentConfig& config);

// Trailing mean over `window` steps (shorter at the start).
std::vector<double> smooth(const std::vector<double>& x, std::size_t window);

// Reads commands.jsonl into a scripted command list.
json load_command_log(const std::filesystem::path& path);

}  // namespace hedgemix
