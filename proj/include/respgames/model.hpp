#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "respgames/errors.hpp"

namespace respgames {

using AgentId = int;
using StateId = int;
using ActionId = int;  // index into the owning agent's action list
using AtomId = int;

// Distributions must sum to 1 within this bound; nothing is renormalized.
inline constexpr double kProbTolerance = 1e-9;

// Hard cap on coalition enumeration (2^12 subsets).
inline constexpr int kMaxCoalitionAgents = 12;

struct TransitionEntry {
  StateId state;
  double prob;  // > 0
};
using Distribution = std::vector<TransitionEntry>;  // sorted by state

// One action per agent, in agent order.
using JointAction = std::vector<ActionId>;

// Agent set encoded as a bitmask; agent ids index the bits.
class Coalition {
 public:
  Coalition() = default;
  explicit Coalition(uint32_t mask) : mask_(mask) {}
  static Coalition of(std::initializer_list<AgentId> agents) {
    Coalition c;
    for (AgentId a : agents) c.mask_ |= 1u << a;
    return c;
  }
  static Coalition of(const std::vector<AgentId>& agents) {
    Coalition c;
    for (AgentId a : agents) c.mask_ |= 1u << a;
    return c;
  }
  static Coalition all(int num_agents) {
    return Coalition(num_agents >= 32 ? ~0u : (1u << num_agents) - 1);
  }

  uint32_t mask() const { return mask_; }
  bool empty() const { return mask_ == 0; }
  bool contains(AgentId a) const { return (mask_ >> a) & 1u; }
  int size() const { return __builtin_popcount(mask_); }
  Coalition with(AgentId a) const { return Coalition(mask_ | (1u << a)); }
  Coalition without(AgentId a) const { return Coalition(mask_ & ~(1u << a)); }
  Coalition complement(int num_agents) const {
    return Coalition(all(num_agents).mask() & ~mask_);
  }
  bool subset_of(Coalition other) const { return (mask_ & ~other.mask_) == 0; }
  std::vector<AgentId> members() const {
    std::vector<AgentId> out;
    for (AgentId a = 0; a < 32; ++a)
      if (contains(a)) out.push_back(a);
    return out;
  }
  bool operator==(const Coalition& o) const { return mask_ == o.mask_; }
  bool operator!=(const Coalition& o) const { return mask_ != o.mask_; }

 private:
  uint32_t mask_ = 0;
};

// Name-based, unchecked description of a game; validate_game interns and checks it.
struct GameDescription {
  std::vector<std::string> agents;
  std::vector<std::vector<std::string>> actions;  // per agent, same order
  std::vector<std::string> atoms;                 // empty: derived from labels

  struct StateEntry {
    std::string name;
    bool initial = false;
    std::vector<std::string> labels;
  };
  std::vector<StateEntry> states;

  struct AvailabilityEntry {
    std::string state;
    std::string agent;
    std::vector<std::string> actions;
  };
  std::vector<AvailabilityEntry> availability;

  struct TransitionDecl {
    std::string state;
    std::vector<std::string> actions;  // per agent; "*" ranges over availability
    std::vector<std::pair<std::string, double>> dist;
  };
  std::vector<TransitionDecl> transitions;
};

// Validated, immutable concurrent stochastic game.
class Game {
 public:
  int num_agents() const { return (int)agent_names_.size(); }
  int num_states() const { return (int)state_names_.size(); }
  int num_atoms() const { return (int)atom_names_.size(); }
  StateId initial_state() const { return initial_; }

  const std::string& agent_name(AgentId a) const { return agent_names_[a]; }
  const std::string& state_name(StateId s) const { return state_names_[s]; }
  const std::string& atom_name(AtomId a) const { return atom_names_[a]; }
  const std::string& action_name(AgentId agent, ActionId action) const {
    return action_names_[agent][action];
  }
  int num_actions(AgentId a) const { return (int)action_names_[a].size(); }

  // Lookups throw UnknownIdentifier for names not in the game.
  AgentId agent_id(const std::string& name) const;
  StateId state_id(const std::string& name) const;
  AtomId atom_id(const std::string& name) const;
  ActionId action_id(AgentId agent, const std::string& name) const;

  bool has_atom(const std::string& name) const;
  bool label(StateId s, AtomId a) const { return labels_[s][a]; }
  const std::vector<AtomId>& labels_of(StateId s) const { return label_list_[s]; }

  const std::vector<ActionId>& available(StateId s, AgentId a) const {
    return available_[s][a];
  }

  // Availability product at s, agent-major / action-index-minor order.
  const std::vector<JointAction>& joint_actions(StateId s) const {
    return joint_actions_[s];
  }
  // Index of a joint action within joint_actions(s); -1 when some entry
  // is not available at s.
  int joint_index(StateId s, const JointAction& joint) const;

  const Distribution& transition(StateId s, int joint_idx) const {
    return transitions_[s][joint_idx];
  }
  const Distribution& transition(StateId s, const JointAction& joint) const;

  std::string format_joint(StateId s, const JointAction& joint) const;

 private:
  friend Game validate_game(const GameDescription&);
  Game() = default;

  std::vector<std::string> agent_names_;
  std::vector<std::vector<std::string>> action_names_;
  std::vector<std::string> state_names_;
  std::vector<std::string> atom_names_;
  StateId initial_ = 0;
  std::vector<std::vector<bool>> labels_;            // [state][atom]
  std::vector<std::vector<AtomId>> label_list_;      // [state], sorted
  std::vector<std::vector<std::vector<ActionId>>> available_;  // [state][agent]
  std::vector<std::vector<JointAction>> joint_actions_;        // [state]
  std::vector<std::vector<Distribution>> transitions_;         // [state][joint idx]
};

// Checks every invariant and throws ValidationError listing all violations.
Game validate_game(const GameDescription& desc);

// Memoryless randomized strategy of one agent. probs[s] is aligned with
// Game::available(s, agent) and sums to 1 within kProbTolerance.
struct Strategy {
  AgentId agent = -1;
  std::vector<std::vector<double>> probs;

  static Strategy uniform(const Game& game, AgentId agent);
  // Probability of the available action at position pos in state s.
  double at(StateId s, int pos) const { return probs[s][pos]; }
};

// Throws ValidationError when shapes or sums are off.
void validate_strategy(const Game& game, const Strategy& strategy);

// Assignment of strategies to a subset of agents (its scope).
class StrategyProfile {
 public:
  StrategyProfile() = default;
  explicit StrategyProfile(int num_agents) : entries_(num_agents) {}

  int num_agents() const { return (int)entries_.size(); }
  Coalition scope() const;
  bool full() const { return scope().size() == num_agents(); }
  bool has(AgentId a) const { return entries_[a].has_value(); }
  const Strategy& at(AgentId a) const;  // throws AgentNotInScope
  void set(Strategy s);
  StrategyProfile restricted(Coalition c) const;

 private:
  std::vector<std::optional<Strategy>> entries_;
};

// Additive reward structure: per-state rewards plus pattern-matched
// joint-action rewards. All matching action rules sum.
struct RewardStructure {
  struct ActionRule {
    std::optional<StateId> state;                  // nullopt: any state
    std::vector<std::optional<ActionId>> pattern;  // per agent, nullopt: any
    double value = 0;
  };

  std::string name;
  std::vector<double> state_reward;  // dense, one per state
  std::vector<ActionRule> rules;

  double action_reward(StateId s, const JointAction& joint) const;
};

// r_s(state) plus the sum of matching action rules for the joint action.
double reward_of(const RewardStructure& r, StateId state, const JointAction& joint);

// Finite path s0 a0 s1 ... a{k-1} sk with positive transition probabilities.
class History {
 public:
  // Validates availability and positive probability of every step.
  History(const Game& game, StateId start,
          const std::vector<std::pair<JointAction, StateId>>& steps);

  int length() const { return (int)actions_.size(); }  // number of steps k
  StateId state(int i) const { return states_[i]; }    // 0..k
  const JointAction& action(int i) const { return actions_[i]; }  // 0..k-1

 private:
  std::vector<StateId> states_;
  std::vector<JointAction> actions_;
};

// Probability of the history under a full profile:
// prod_j [prod_i sigma_i(s_j)(a_i^j)] * delta(s_j, a^j)(s_{j+1}).
// Throws PartialProfile when the profile is not full and
// IncompatibleHistory when a strategy factor is zero.
double path_probability(const Game& game, const StrategyProfile& profile,
                        const History& history);

}  // namespace respgames
