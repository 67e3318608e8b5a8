#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hedgemix/core.hpp"
#include "hedgemix/graph.hpp"
#include "hedgemix/random.hpp"

namespace hedgemix {

struct Percept {
  std::vector<std::uint16_t> observation;
  double reward = 0.0;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual const HistoryLayout& layout() const = 0;
  virtual Percept step(Action a) = 0;
};

// -- Biased rock-paper-scissors -----------------------------------------------

enum RpsMove : std::uint16_t { kRock = 0, kPaper = 1, kScissors = 2 };

// +1 if `agent` beats `env`, 0 on a draw, -1 otherwise.
double rps_payoff(std::uint16_t agent, std::uint16_t env);

struct RpsRound {
  std::uint16_t env_move;
  std::uint16_t agent_move;
};

struct RpsOutcome {
  std::uint16_t env_move;
  double reward;
};

// The opponent repeats rock after winning with rock; otherwise it is uniform.
RpsOutcome rps_step(const std::optional<RpsRound>& previous, Action agent, Rng& rng);
HistoryLayout rps_layout();

class RpsEnvironment : public Environment {
 public:
  explicit RpsEnvironment(std::uint64_t seed);
  const HistoryLayout& layout() const override { return layout_; }
  Percept step(Action a) override;

 private:
  HistoryLayout layout_;
  Rng rng_;
  std::optional<RpsRound> previous_;
};

// -- 2x5 taxi --------------------------------------------------------------------

enum TaxiAction : Action { kNorth = 0, kSouth, kEast, kWest, kPickup, kDropoff };
inline constexpr std::array<std::array<int, 2>, 4> kTaxiCorners{{{0, 0}, {1, 0}, {0, 4}, {1, 4}}};
inline constexpr int kTaxiRows = 2;
inline constexpr int kTaxiCols = 5;

struct TaxiState {
  int x = 0;  // row, 0..1
  int y = 0;  // column, 0..4
  int passenger = 0;    // corner index of the waiting passenger
  int destination = 1;  // corner index
  bool in_taxi = false;
  bool operator==(const TaxiState&) const = default;
};

struct TaxiOutcome {
  TaxiState next;
  double reward = 0.0;
  bool delivered = false;
};

TaxiOutcome taxi_step(const TaxiState& state, Action action, Rng& rng);
TaxiState taxi_reset(Rng& rng);
std::vector<std::uint16_t> taxi_observation(const TaxiState& state);
HistoryLayout taxi_layout();

class TaxiEnvironment : public Environment {
 public:
  explicit TaxiEnvironment(std::uint64_t seed);
  const HistoryLayout& layout() const override { return layout_; }
  Percept step(Action a) override;
  const TaxiState& state() const { return state_; }

 private:
  HistoryLayout layout_;
  Rng rng_;
  TaxiState state_;
};

// -- SEIRS epidemic on a contact network ------------------------------------------

enum class Label : std::uint8_t { S = 0, E = 1, I = 2, R = 3 };
enum EpidemicObs : std::uint16_t { kPositive = 0, kNegative = 1, kUnknown = 2 };

struct EpidemicParams {
  double beta = 0.2;
  double sigma = 0.3;
  double gamma = 0.08;
  double rho = 0.1;
  std::array<double, 4> alpha{0.1, 0.1, 0.8, 0.05};  // test rate per label S,E,I,R
  std::array<double, 4> mu{0.1, 0.9, 0.9, 0.1};      // positive rate per label
};

struct EpidemicConfig {
  EpidemicParams params;
  std::array<double, 3> immunity{1.0, 2.0, 4.0};
  double quarantine_cost = 0.10;
  double vaccinate_cost = 0.05;
  double initial_exposed = 0.05;
  double terminal_bonus = 2.0;  // per node
};

struct EpidemicAction {
  enum class Kind { kDoNothing, kQuarantine, kVaccinate };
  Kind kind = Kind::kDoNothing;
  double lo = 0.0;  // Quarantine: unused; Vaccinate: lower percentile
  double hi = 0.0;  // Quarantine: fraction; Vaccinate: upper percentile
};

inline constexpr std::uint32_t kEpidemicActions = 11;
EpidemicAction decode_epidemic_action(Action a);
std::string epidemic_action_name(Action a);
double epidemic_action_cost(Action a, std::size_t n, const EpidemicConfig& config);

// P(next label | label, k infectious neighbours, immunity omega) in S,E,I,R order.
std::array<double, 4> transition_row(Label from, unsigned k, double omega, const EpidemicParams& p);
// P(+), P(-), P(?) for a node with this label.
std::array<double, 3> observation_row(Label label, const EpidemicParams& p);

struct EpidemicState {
  std::vector<Label> label;
  std::vector<std::uint8_t> immunity;  // index into EpidemicConfig::immunity
  std::vector<char> quarantined;
};

// The immutable description shared by the environment and by model-based
// predicates: graph, ranking and action semantics.
class EpidemicModel {
 public:
  EpidemicModel(std::shared_ptr<const ContactGraph> graph, EpidemicConfig config);

  const ContactGraph& graph() const { return *graph_; }
  const EpidemicConfig& config() const { return config_; }
  std::size_t size() const { return graph_->n; }
  HistoryLayout layout(std::uint32_t reward_levels = 64) const;
  RewardCodec reward_codec(std::uint32_t levels = 64) const;

  EpidemicState initial_state(Rng& rng) const;
  // Clears the previous quarantine and applies this step's action.
  void apply_action(EpidemicState& state, Action a) const;
  std::vector<unsigned> infectious_neighbours(const EpidemicState& state) const;
  // Synchronous transition of every node under `params`.
  void evolve(EpidemicState& state, const EpidemicParams& params, Rng& rng) const;
  std::vector<std::uint16_t> observe(const EpidemicState& state, const EpidemicParams& params,
                                     Rng& rng) const;
  static bool terminated(const EpidemicState& state);

 private:
  std::shared_ptr<const ContactGraph> graph_;
  EpidemicConfig config_;
};

class EpidemicEnvironment : public Environment {
 public:
  EpidemicEnvironment(std::shared_ptr<const EpidemicModel> model, std::uint64_t seed,
                      std::uint32_t reward_levels = 64);
  const HistoryLayout& layout() const override { return layout_; }
  Percept step(Action a) override;
  const EpidemicState& state() const { return state_; }
  std::size_t episodes_completed() const { return episodes_; }

 private:
  std::shared_ptr<const EpidemicModel> model_;
  HistoryLayout layout_;
  Rng rng_;
  EpidemicState state_;
  std::size_t episodes_ = 0;
};

}  // namespace hedgemix
