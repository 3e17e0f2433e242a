#include "respgames/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace respgames {

namespace {

int find_name(const std::vector<std::string>& names, const std::string& name) {
  for (int i = 0; i < (int)names.size(); ++i)
    if (names[i] == name) return i;
  return -1;
}

}  // namespace

AgentId Game::agent_id(const std::string& name) const {
  int id = find_name(agent_names_, name);
  if (id < 0) throw UnknownIdentifier("unknown agent: " + name);
  return id;
}

StateId Game::state_id(const std::string& name) const {
  int id = find_name(state_names_, name);
  if (id < 0) throw UnknownIdentifier("unknown state: " + name);
  return id;
}

AtomId Game::atom_id(const std::string& name) const {
  int id = find_name(atom_names_, name);
  if (id < 0) throw UnknownAtom("unknown atom: " + name);
  return id;
}

ActionId Game::action_id(AgentId agent, const std::string& name) const {
  int id = find_name(action_names_[agent], name);
  if (id < 0)
    throw UnknownIdentifier("unknown action for agent " + agent_names_[agent] +
                            ": " + name);
  return id;
}

bool Game::has_atom(const std::string& name) const {
  return find_name(atom_names_, name) >= 0;
}

int Game::joint_index(StateId s, const JointAction& joint) const {
  int idx = 0;
  for (AgentId a = 0; a < num_agents(); ++a) {
    const auto& avail = available_[s][a];
    int pos = -1;
    for (int p = 0; p < (int)avail.size(); ++p)
      if (avail[p] == joint[a]) {
        pos = p;
        break;
      }
    if (pos < 0) return -1;
    idx = idx * (int)avail.size() + pos;
  }
  return idx;
}

const Distribution& Game::transition(StateId s, const JointAction& joint) const {
  int idx = joint_index(s, joint);
  if (idx < 0)
    throw UnknownIdentifier("joint action " + format_joint(s, joint) +
                            " not available in state " + state_names_[s]);
  return transitions_[s][idx];
}

std::string Game::format_joint(StateId, const JointAction& joint) const {
  std::string out = "(";
  for (AgentId a = 0; a < num_agents(); ++a) {
    if (a) out += ",";
    out += joint[a] >= 0 && joint[a] < num_actions(a) ? action_names_[a][joint[a]]
                                                      : "?";
  }
  return out + ")";
}

Game validate_game(const GameDescription& desc) {
  std::vector<Violation> bad;
  auto flag = [&bad](Violation::Kind k, const std::string& msg) {
    bad.push_back({k, msg});
  };

  Game g;

  // Agents and their action alphabets.
  for (const auto& name : desc.agents) {
    if (find_name(g.agent_names_, name) >= 0)
      flag(Violation::Kind::Duplicate, "duplicate agent: " + name);
    else
      g.agent_names_.push_back(name);
  }
  if (g.agent_names_.empty())
    flag(Violation::Kind::EmptyAvailability, "game declares no agents");
  g.action_names_.resize(g.agent_names_.size());
  if (desc.actions.size() != desc.agents.size())
    flag(Violation::Kind::EmptyAvailability,
         "every agent needs an action list (" +
             std::to_string(desc.actions.size()) + " lists for " +
             std::to_string(desc.agents.size()) + " agents)");
  for (size_t a = 0; a < desc.actions.size() && a < g.action_names_.size(); ++a) {
    for (const auto& act : desc.actions[a]) {
      if (find_name(g.action_names_[a], act) >= 0)
        flag(Violation::Kind::Duplicate,
             "duplicate action " + act + " for agent " + g.agent_names_[a]);
      else
        g.action_names_[a].push_back(act);
    }
    if (g.action_names_[a].empty())
      flag(Violation::Kind::EmptyAvailability,
           "agent " + g.agent_names_[a] + " has no actions");
  }

  // States, initial marker, labels.
  int initial_count = 0;
  for (const auto& st : desc.states) {
    if (find_name(g.state_names_, st.name) >= 0) {
      flag(Violation::Kind::Duplicate, "duplicate state: " + st.name);
      continue;
    }
    g.state_names_.push_back(st.name);
    if (st.initial) {
      g.initial_ = (StateId)g.state_names_.size() - 1;
      ++initial_count;
    }
  }
  if (g.state_names_.empty())
    flag(Violation::Kind::BadInitialState, "game declares no states");
  else if (initial_count != 1)
    flag(Violation::Kind::BadInitialState,
         std::to_string(initial_count) + " initial states (need exactly 1)");

  // Atom alphabet: declared order, or sorted union of labels when undeclared.
  if (!desc.atoms.empty()) {
    for (const auto& atom : desc.atoms) {
      if (find_name(g.atom_names_, atom) >= 0)
        flag(Violation::Kind::Duplicate, "duplicate atom: " + atom);
      else
        g.atom_names_.push_back(atom);
    }
  } else {
    std::set<std::string> seen;
    for (const auto& st : desc.states) seen.insert(st.labels.begin(), st.labels.end());
    g.atom_names_.assign(seen.begin(), seen.end());
  }

  int n_states = (int)g.state_names_.size();
  int n_agents = (int)g.agent_names_.size();
  g.labels_.assign(n_states, std::vector<bool>(g.atom_names_.size(), false));
  g.label_list_.resize(n_states);
  for (const auto& st : desc.states) {
    int s = find_name(g.state_names_, st.name);
    if (s < 0) continue;
    for (const auto& atom : st.labels) {
      int a = find_name(g.atom_names_, atom);
      if (a < 0) {
        flag(Violation::Kind::UnknownIdentifier,
             "state " + st.name + " labeled with undeclared atom " + atom);
        continue;
      }
      if (!g.labels_[s][a]) {
        g.labels_[s][a] = true;
        g.label_list_[s].push_back(a);
      }
    }
    std::sort(g.label_list_[s].begin(), g.label_list_[s].end());
  }

  // Availability: full action set unless overridden.
  g.available_.assign(n_states, {});
  for (int s = 0; s < n_states; ++s) {
    g.available_[s].resize(n_agents);
    for (int a = 0; a < n_agents; ++a) {
      g.available_[s][a].resize(g.action_names_[a].size());
      for (int i = 0; i < (int)g.action_names_[a].size(); ++i)
        g.available_[s][a][i] = i;
    }
  }
  std::set<std::pair<int, int>> avail_seen;
  for (const auto& av : desc.availability) {
    int s = find_name(g.state_names_, av.state);
    int a = find_name(g.agent_names_, av.agent);
    if (s < 0 || a < 0) {
      flag(Violation::Kind::UnknownIdentifier,
           "availability for unknown state/agent " + av.state + "/" + av.agent);
      continue;
    }
    if (!avail_seen.insert({s, a}).second) {
      flag(Violation::Kind::Duplicate,
           "availability re-declared for " + av.state + "/" + av.agent);
      continue;
    }
    std::vector<ActionId> acts;
    bool ok = true;
    for (const auto& name : av.actions) {
      int id = find_name(g.action_names_[a], name);
      if (id < 0) {
        flag(Violation::Kind::UnknownIdentifier,
             "availability names unknown action " + name + " for agent " + av.agent);
        ok = false;
        continue;
      }
      if (std::find(acts.begin(), acts.end(), id) == acts.end()) acts.push_back(id);
    }
    std::sort(acts.begin(), acts.end());
    if (acts.empty()) {
      flag(Violation::Kind::EmptyAvailability,
           "empty availability for " + av.agent + " in state " + av.state);
      ok = false;
    }
    if (ok) g.available_[s][a] = std::move(acts);
  }

  // Joint action products per state.
  g.joint_actions_.assign(n_states, {});
  for (int s = 0; s < n_states; ++s) {
    long long count = 1;
    for (int a = 0; a < n_agents; ++a) count *= (long long)g.available_[s][a].size();
    if (count <= 0) continue;
    std::vector<int> pos(n_agents, 0);
    for (long long c = 0; c < count; ++c) {
      JointAction ja(n_agents);
      for (int a = 0; a < n_agents; ++a) ja[a] = g.available_[s][a][pos[a]];
      g.joint_actions_[s].push_back(std::move(ja));
      for (int a = n_agents - 1; a >= 0; --a) {
        if (++pos[a] < (int)g.available_[s][a].size()) break;
        pos[a] = 0;
      }
    }
  }

  // Transitions: expand wildcards, intern names, check distributions.
  g.transitions_.assign(n_states, {});
  std::vector<std::vector<char>> defined(n_states);
  for (int s = 0; s < n_states; ++s) {
    g.transitions_[s].resize(g.joint_actions_[s].size());
    defined[s].assign(g.joint_actions_[s].size(), 0);
  }
  for (const auto& tr : desc.transitions) {
    int s = find_name(g.state_names_, tr.state);
    if (s < 0) {
      flag(Violation::Kind::UnknownIdentifier,
           "transition from unknown state " + tr.state);
      continue;
    }
    if ((int)tr.actions.size() != n_agents) {
      flag(Violation::Kind::UnknownIdentifier,
           "transition in " + tr.state + " lists " +
               std::to_string(tr.actions.size()) + " actions for " +
               std::to_string(n_agents) + " agents");
      continue;
    }
    // Per-agent candidate action lists ("*" ranges over availability).
    std::vector<std::vector<ActionId>> span(n_agents);
    bool ok = true;
    for (int a = 0; a < n_agents; ++a) {
      if (tr.actions[a] == "*") {
        span[a] = g.available_[s][a];
      } else {
        int id = find_name(g.action_names_[a], tr.actions[a]);
        if (id < 0) {
          flag(Violation::Kind::UnknownIdentifier,
               "transition in " + tr.state + " names unknown action " + tr.actions[a]);
          ok = false;
          break;
        }
        if (std::find(g.available_[s][a].begin(), g.available_[s][a].end(), id) ==
            g.available_[s][a].end()) {
          flag(Violation::Kind::UnknownIdentifier,
               "transition in " + tr.state + " uses action " + tr.actions[a] +
                   " not available to " + g.agent_names_[a]);
          ok = false;
          break;
        }
        span[a] = {id};
      }
    }
    if (!ok) continue;

    // Distribution body: intern, forbid negatives, require sum 1.
    Distribution dist;
    double sum = 0;
    bool dist_ok = true;
    for (const auto& [name, p] : tr.dist) {
      int to = find_name(g.state_names_, name);
      if (to < 0) {
        flag(Violation::Kind::UnknownIdentifier,
             "transition targets unknown state " + name);
        dist_ok = false;
        continue;
      }
      if (p < 0) {
        flag(Violation::Kind::DistributionNotNormalized,
             "negative probability " + std::to_string(p) + " for target " + name);
        dist_ok = false;
        continue;
      }
      sum += p;
      if (p > 0) {
        auto it = std::find_if(dist.begin(), dist.end(),
                               [to](const TransitionEntry& e) { return e.state == to; });
        if (it != dist.end())
          it->prob += p;
        else
          dist.push_back({to, p});
      }
    }
    if (dist_ok && std::abs(sum - 1.0) > kProbTolerance) {
      flag(Violation::Kind::DistributionNotNormalized,
           "distribution from " + tr.state + " " +
               (tr.actions.empty() ? "" : "(" + tr.actions[0] +
                                              (n_agents > 1 ? ",..." : "") + ") ") +
               "sums to " + std::to_string(sum));
      dist_ok = false;
    }
    if (!dist_ok) continue;
    std::sort(dist.begin(), dist.end(),
              [](const TransitionEntry& a, const TransitionEntry& b) {
                return a.state < b.state;
              });

    // Write the distribution to every joint action the pattern covers.
    std::vector<int> pos(n_agents, 0);
    while (true) {
      JointAction ja(n_agents);
      for (int a = 0; a < n_agents; ++a) ja[a] = span[a][pos[a]];
      int idx = g.joint_index(s, ja);
      if (defined[s][idx])
        flag(Violation::Kind::Duplicate, "transition re-defined for " + tr.state +
                                             " " + g.format_joint(s, ja));
      else {
        defined[s][idx] = 1;
        g.transitions_[s][idx] = dist;
      }
      int a = n_agents - 1;
      for (; a >= 0; --a) {
        if (++pos[a] < (int)span[a].size()) break;
        pos[a] = 0;
      }
      if (a < 0) break;
    }
  }

  for (int s = 0; s < n_states; ++s)
    for (size_t j = 0; j < defined[s].size(); ++j)
      if (!defined[s][j])
        flag(Violation::Kind::MissingTransition,
             "no transition for " + g.state_names_[s] + " " +
                 g.format_joint(s, g.joint_actions_[s][j]));

  if (!bad.empty()) throw ValidationError(std::move(bad));
  return g;
}

Strategy Strategy::uniform(const Game& game, AgentId agent) {
  Strategy s;
  s.agent = agent;
  s.probs.resize(game.num_states());
  for (StateId st = 0; st < game.num_states(); ++st) {
    int n = (int)game.available(st, agent).size();
    s.probs[st].assign(n, 1.0 / n);
  }
  return s;
}

void validate_strategy(const Game& game, const Strategy& strategy) {
  std::vector<Violation> bad;
  if (strategy.agent < 0 || strategy.agent >= game.num_agents()) {
    bad.push_back({Violation::Kind::BadStrategy, "strategy has no valid agent"});
    throw ValidationError(std::move(bad));
  }
  if ((int)strategy.probs.size() != game.num_states())
    bad.push_back({Violation::Kind::BadStrategy,
                   "strategy of " + game.agent_name(strategy.agent) +
                       " does not cover every state"});
  for (StateId s = 0; s < (StateId)strategy.probs.size() && s < game.num_states();
       ++s) {
    const auto& avail = game.available(s, strategy.agent);
    const auto& probs = strategy.probs[s];
    if (probs.size() != avail.size()) {
      bad.push_back({Violation::Kind::BadStrategy,
                     "strategy of " + game.agent_name(strategy.agent) + " in " +
                         game.state_name(s) + " has " + std::to_string(probs.size()) +
                         " entries for " + std::to_string(avail.size()) +
                         " available actions"});
      continue;
    }
    double sum = 0;
    bool neg = false;
    for (double p : probs) {
      if (p < -kProbTolerance) neg = true;
      sum += p;
    }
    if (neg || std::abs(sum - 1.0) > kProbTolerance)
      bad.push_back({Violation::Kind::BadStrategy,
                     "strategy of " + game.agent_name(strategy.agent) + " in " +
                         game.state_name(s) + " is not a distribution (sum " +
                         std::to_string(sum) + ")"});
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

Coalition StrategyProfile::scope() const {
  Coalition c;
  for (int a = 0; a < (int)entries_.size(); ++a)
    if (entries_[a]) c = c.with(a);
  return c;
}

const Strategy& StrategyProfile::at(AgentId a) const {
  if (a < 0 || a >= (int)entries_.size() || !entries_[a])
    throw AgentNotInScope("profile has no strategy for agent id " + std::to_string(a));
  return *entries_[a];
}

void StrategyProfile::set(Strategy s) {
  if (s.agent < 0 || s.agent >= (int)entries_.size())
    throw AgentNotInScope("strategy agent id " + std::to_string(s.agent) +
                          " outside profile range");
  entries_[s.agent] = std::move(s);
}

StrategyProfile StrategyProfile::restricted(Coalition c) const {
  StrategyProfile out((int)entries_.size());
  for (int a = 0; a < (int)entries_.size(); ++a) {
    if (!c.contains(a)) continue;
    if (!entries_[a])
      throw AgentNotInScope("cannot restrict profile to agent id " +
                            std::to_string(a) + " outside its scope");
    out.entries_[a] = entries_[a];
  }
  return out;
}

double RewardStructure::action_reward(StateId s, const JointAction& joint) const {
  double total = 0;
  for (const auto& rule : rules) {
    if (rule.state && *rule.state != s) continue;
    bool match = true;
    for (size_t a = 0; a < rule.pattern.size() && match; ++a)
      if (rule.pattern[a] && *rule.pattern[a] != joint[a]) match = false;
    if (match) total += rule.value;
  }
  return total;
}

double reward_of(const RewardStructure& r, StateId state, const JointAction& joint) {
  return r.state_reward[state] + r.action_reward(state, joint);
}

History::History(const Game& game, StateId start,
                 const std::vector<std::pair<JointAction, StateId>>& steps) {
  states_.push_back(start);
  for (const auto& [joint, next] : steps) {
    StateId cur = states_.back();
    const Distribution& dist = game.transition(cur, joint);  // checks availability
    bool positive = false;
    for (const auto& e : dist)
      if (e.state == next && e.prob > 0) positive = true;
    if (!positive)
      throw IncompatibleHistory("zero-probability step " + game.state_name(cur) + " " +
                                game.format_joint(cur, joint) + " -> " +
                                game.state_name(next));
    actions_.push_back(joint);
    states_.push_back(next);
  }
}

double path_probability(const Game& game, const StrategyProfile& profile,
                        const History& history) {
  if (!profile.full())
    throw PartialProfile("path probability needs a full strategy profile");
  double p = 1.0;
  for (int j = 0; j < history.length(); ++j) {
    StateId s = history.state(j);
    const JointAction& joint = history.action(j);
    for (AgentId a = 0; a < game.num_agents(); ++a) {
      const auto& avail = game.available(s, a);
      int pos = -1;
      for (int i = 0; i < (int)avail.size(); ++i)
        if (avail[i] == joint[a]) pos = i;
      double pa = pos >= 0 ? profile.at(a).at(s, pos) : 0.0;
      if (pa <= 0)
        throw IncompatibleHistory("agent " + game.agent_name(a) +
                                  " never plays " + game.action_name(a, joint[a]) +
                                  " in state " + game.state_name(s));
      p *= pa;
    }
    double d = 0;
    for (const auto& e : game.transition(s, joint))
      if (e.state == history.state(j + 1)) d = e.prob;
    p *= d;
  }
  return p;
}

}  // namespace respgames
