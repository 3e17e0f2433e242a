#include "respgames/prob_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <tuple>

#include "respgames/matrix_game.hpp"

namespace respgames {

namespace {

// Per-state layout of the availability product: sizes and mixed-radix
// strides, agent-major as in Game::joint_actions.
struct StateLayout {
  std::vector<int> sizes;
  std::vector<int> strides;
};

std::vector<StateLayout> layouts(const Game& game) {
  std::vector<StateLayout> out(game.num_states());
  for (StateId s = 0; s < game.num_states(); ++s) {
    auto& l = out[s];
    l.sizes.resize(game.num_agents());
    l.strides.assign(game.num_agents(), 1);
    for (AgentId a = 0; a < game.num_agents(); ++a)
      l.sizes[a] = (int)game.available(s, a).size();
    for (AgentId a = game.num_agents() - 2; a >= 0; --a)
      l.strides[a] = l.strides[a + 1] * l.sizes[a + 1];
  }
  return out;
}

// All position tuples for the agents in `members` at state s (lex order).
std::vector<std::vector<int>> member_tuples(const StateLayout& l,
                                            const std::vector<AgentId>& members) {
  std::vector<std::vector<int>> out;
  long long count = 1;
  for (AgentId a : members) count *= l.sizes[a];
  out.reserve(count);
  std::vector<int> pos(members.size(), 0);
  for (long long c = 0; c < count; ++c) {
    out.push_back(pos);
    for (int i = (int)members.size() - 1; i >= 0; --i) {
      if (++pos[i] < l.sizes[members[i]]) break;
      pos[i] = 0;
    }
  }
  return out;
}

double tuple_probability(const StrategyProfile& profile, StateId s,
                         const std::vector<AgentId>& members,
                         const std::vector<int>& tuple) {
  double p = 1.0;
  for (size_t i = 0; i < members.size(); ++i)
    p *= profile.at(members[i]).at(s, tuple[i]);
  return p;
}

StateId resolve_from(const Game& game, StateId from) {
  if (from < 0) return game.initial_state();
  if (from >= game.num_states())
    throw UnknownIdentifier("start state id " + std::to_string(from) +
                            " out of range");
  return from;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr long long kMcBlock = 8192;

}  // namespace

double sat_probability(const Game& game, const StrategyProfile& profile,
                       const OutcomeSet& outcome, StateId from) {
  if (!profile.full())
    throw PartialProfile("sat_probability needs a full strategy profile");
  StateId s0 = resolve_from(game, from);
  const auto lay = layouts(game);
  std::vector<AgentId> everyone = Coalition::all(game.num_agents()).members();
  int S = game.num_states();
  int C = outcome.num_codes();
  int H = outcome.horizon();

  std::vector<double> cur(S * C, 0.0);
  cur[s0 * C + outcome.init_code(s0)] = 1.0;
  double sat_mass = 0;

  for (int t = 1; t <= H; ++t) {
    std::vector<double> next(S * C, 0.0);
    for (StateId s = 0; s < S; ++s) {
      const auto tuples = member_tuples(lay[s], everyone);
      for (int code = 0; code < C; ++code) {
        double p = cur[s * C + code];
        if (p == 0.0) continue;
        if (outcome.decided(code)) {
          // Decided codes never change; park the mass.
          if (outcome.satisfied(code)) sat_mass += p;
          continue;
        }
        for (const auto& tup : tuples) {
          double w = tuple_probability(profile, s, everyone, tup);
          if (w == 0.0) continue;
          int joint = 0;
          for (AgentId a = 0; a < game.num_agents(); ++a)
            joint += tup[a] * lay[s].strides[a];
          for (const auto& e : game.transition(s, joint)) {
            int code2 = outcome.step_code(code, e.state, t);
            next[e.state * C + code2] += p * w * e.prob;
          }
        }
      }
    }
    cur.swap(next);
  }
  double total = sat_mass;
  for (StateId s = 0; s < S; ++s)
    for (int code = 0; code < C; ++code)
      if (outcome.satisfied(code)) total += cur[s * C + code];
  return total;
}

ExtremalResult extremal_probability(const Game& game, const StrategyProfile& partial,
                                    const OutcomeSet& outcome, OptDir dir,
                                    StateId from) {
  StateId s0 = resolve_from(game, from);
  const auto lay = layouts(game);
  std::vector<AgentId> fixed = partial.scope().members();
  std::vector<AgentId> adv =
      partial.scope().complement(game.num_agents()).members();
  int S = game.num_states();
  int C = outcome.num_codes();
  int H = outcome.horizon();

  ExtremalResult out;
  // value[t][s*C+code], rolled over t from the horizon backwards.
  std::vector<double> next(S * C), cur(S * C);
  for (StateId s = 0; s < S; ++s)
    for (int code = 0; code < C; ++code)
      next[s * C + code] = outcome.satisfied(code) ? 1.0 : 0.0;

  for (int t = H - 1; t >= 0; --t) {
    for (StateId s = 0; s < S; ++s) {
      const auto fixed_tuples = member_tuples(lay[s], fixed);
      const auto adv_tuples = member_tuples(lay[s], adv);
      for (int code = 0; code < C; ++code) {
        if (outcome.satisfied(code)) {
          cur[s * C + code] = 1.0;
          continue;
        }
        if (outcome.violated(code)) {
          cur[s * C + code] = 0.0;
          continue;
        }
        double best = 0;
        int best_idx = -1;
        for (int bi = 0; bi < (int)adv_tuples.size(); ++bi) {
          double e = 0;
          for (const auto& ft : fixed_tuples) {
            double w = tuple_probability(partial, s, fixed, ft);
            if (w == 0.0) continue;
            int joint = 0;
            for (size_t i = 0; i < fixed.size(); ++i)
              joint += ft[i] * lay[s].strides[fixed[i]];
            for (size_t i = 0; i < adv.size(); ++i)
              joint += adv_tuples[bi][i] * lay[s].strides[adv[i]];
            for (const auto& tr : game.transition(s, joint)) {
              int code2 = outcome.step_code(code, tr.state, t + 1);
              e += w * tr.prob * next[tr.state * C + code2];
            }
          }
          if (best_idx < 0 || (dir == OptDir::Min ? e < best : e > best)) {
            best = e;
            best_idx = bi;
          }
        }
        cur[s * C + code] = best;
        if (!adv.empty()) {
          AdversaryDecision d;
          d.step = t;
          d.state = s;
          d.code = code;
          d.joint.assign(game.num_agents(), -1);
          for (size_t i = 0; i < adv.size(); ++i)
            d.joint[adv[i]] = game.available(s, adv[i])[adv_tuples[best_idx][i]];
          out.witness.push_back(std::move(d));
        }
      }
    }
    next = cur;
  }

  out.value_at.resize(S);
  for (StateId s = 0; s < S; ++s)
    out.value_at[s] = next[s * C + outcome.init_code(s)];
  out.value = out.value_at[s0];
  return out;
}

GameValueResult game_value_probability(const Game& game, Coalition coalition,
                                       const OutcomeSet& outcome, bool maximize,
                                       StateId from) {
  StateId s0 = resolve_from(game, from);
  const auto lay = layouts(game);
  std::vector<AgentId> own = coalition.members();
  std::vector<AgentId> adv = coalition.complement(game.num_agents()).members();
  int S = game.num_states();
  int C = outcome.num_codes();
  int H = outcome.horizon();

  std::vector<double> next(S * C), cur(S * C);
  for (StateId s = 0; s < S; ++s)
    for (int code = 0; code < C; ++code)
      next[s * C + code] = outcome.satisfied(code) ? 1.0 : 0.0;

  for (int t = H - 1; t >= 0; --t) {
    for (StateId s = 0; s < S; ++s) {
      const auto own_tuples = member_tuples(lay[s], own);
      const auto adv_tuples = member_tuples(lay[s], adv);
      for (int code = 0; code < C; ++code) {
        if (outcome.satisfied(code)) {
          cur[s * C + code] = 1.0;
          continue;
        }
        if (outcome.violated(code)) {
          cur[s * C + code] = 0.0;
          continue;
        }
        std::vector<std::vector<double>> m(
            own_tuples.size(), std::vector<double>(adv_tuples.size(), 0.0));
        for (size_t ri = 0; ri < own_tuples.size(); ++ri)
          for (size_t ci = 0; ci < adv_tuples.size(); ++ci) {
            int joint = 0;
            for (size_t i = 0; i < own.size(); ++i)
              joint += own_tuples[ri][i] * lay[s].strides[own[i]];
            for (size_t i = 0; i < adv.size(); ++i)
              joint += adv_tuples[ci][i] * lay[s].strides[adv[i]];
            double e = 0;
            for (const auto& tr : game.transition(s, joint)) {
              int code2 = outcome.step_code(code, tr.state, t + 1);
              e += tr.prob * next[tr.state * C + code2];
            }
            m[ri][ci] = e;
          }
        if (maximize) {
          cur[s * C + code] = matrix_game_value(m).value;
        } else {
          for (auto& row : m)
            for (double& v : row) v = -v;
          cur[s * C + code] = -matrix_game_value(m).value;
        }
      }
    }
    next = cur;
  }

  GameValueResult out;
  out.value_at.resize(S);
  for (StateId s = 0; s < S; ++s)
    out.value_at[s] = next[s * C + outcome.init_code(s)];
  out.value = out.value_at[s0];
  return out;
}

double expected_reward(const Game& game, const StrategyProfile& profile,
                       const RewardStructure& reward, const OutcomeSet& outcome,
                       StateId from) {
  if (!profile.full())
    throw PartialProfile("expected_reward needs a full strategy profile");
  StateId s0 = resolve_from(game, from);
  const auto lay = layouts(game);
  std::vector<AgentId> everyone = Coalition::all(game.num_agents()).members();
  int S = game.num_states();
  int C = outcome.num_codes();
  int H = outcome.horizon();

  // p: mass, w: E[accumulated reward * mass] per (state, code).
  std::vector<double> p(S * C, 0.0), w(S * C, 0.0);
  p[s0 * C + outcome.init_code(s0)] = 1.0;

  for (int t = 1; t <= H; ++t) {
    std::vector<double> p2(S * C, 0.0), w2(S * C, 0.0);
    for (StateId s = 0; s < S; ++s) {
      const auto tuples = member_tuples(lay[s], everyone);
      for (int code = 0; code < C; ++code) {
        double pm = p[s * C + code];
        double wm = w[s * C + code];
        if (pm == 0.0 && wm == 0.0) continue;
        if (outcome.violated(code)) continue;  // scores 0, drop
        for (const auto& tup : tuples) {
          double q = tuple_probability(profile, s, everyone, tup);
          if (q == 0.0) continue;
          int joint = 0;
          for (AgentId a = 0; a < game.num_agents(); ++a)
            joint += tup[a] * lay[s].strides[a];
          JointAction ja(game.num_agents());
          for (AgentId a = 0; a < game.num_agents(); ++a)
            ja[a] = game.available(s, a)[tup[a]];
          double c = reward_of(reward, s, ja);
          for (const auto& e : game.transition(s, joint)) {
            int code2 = outcome.step_code(code, e.state, t);
            p2[e.state * C + code2] += pm * q * e.prob;
            w2[e.state * C + code2] += q * e.prob * (wm + pm * c);
          }
        }
      }
    }
    p.swap(p2);
    w.swap(w2);
  }

  double total = 0;
  for (StateId s = 0; s < S; ++s)
    for (int code = 0; code < C; ++code)
      if (outcome.satisfied(code))
        total += w[s * C + code] + p[s * C + code] * reward.state_reward[s];
  return total;
}

namespace {

struct RobustCtx {
  const Game& game;
  const RewardStructure& reward;
  const OutcomeSet& outcome;
  const std::vector<StateLayout>& lay;
  std::vector<AgentId> own, adv;
  bool maximize;
  AdversaryMode adversary;
  int H;
  std::map<std::tuple<int, StateId, int, uint64_t>, double> memo;

  double go(int t, StateId s, int code, double acc) {
    if (t == H)
      return outcome.satisfied(code) ? acc + reward.state_reward[s] : 0.0;
    if (outcome.violated(code)) return 0.0;
    uint64_t bits;
    static_assert(sizeof bits == sizeof acc);
    std::memcpy(&bits, &acc, sizeof bits);
    auto key = std::make_tuple(t, s, code, bits);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;

    const auto own_tuples = member_tuples(lay[s], own);
    const auto adv_tuples = member_tuples(lay[s], adv);
    auto entry = [&](const std::vector<int>& ot, const std::vector<int>& at) {
      int joint = 0;
      JointAction ja(game.num_agents());
      for (size_t i = 0; i < own.size(); ++i) {
        joint += ot[i] * lay[s].strides[own[i]];
        ja[own[i]] = game.available(s, own[i])[ot[i]];
      }
      for (size_t i = 0; i < adv.size(); ++i) {
        joint += at[i] * lay[s].strides[adv[i]];
        ja[adv[i]] = game.available(s, adv[i])[at[i]];
      }
      double c = reward_of(reward, s, ja);
      double e = 0;
      for (const auto& tr : game.transition(s, joint))
        e += tr.prob * go(t + 1, tr.state, outcome.step_code(code, tr.state, t + 1),
                          acc + c);
      return e;
    };

    double value;
    if (adversary == AdversaryMode::Any) {
      bool first = true;
      value = 0;
      for (const auto& ot : own_tuples)
        for (const auto& at : adv_tuples) {
          double e = entry(ot, at);
          if (first || (maximize ? e > value : e < value)) value = e;
          first = false;
        }
    } else {
      std::vector<std::vector<double>> m(own_tuples.size(),
                                         std::vector<double>(adv_tuples.size()));
      for (size_t ri = 0; ri < own_tuples.size(); ++ri)
        for (size_t ci = 0; ci < adv_tuples.size(); ++ci)
          m[ri][ci] = entry(own_tuples[ri], adv_tuples[ci]);
      if (maximize) {
        value = matrix_game_value(m).value;
      } else {
        for (auto& row : m)
          for (double& v : row) v = -v;
        value = -matrix_game_value(m).value;
      }
    }
    memo.emplace(key, value);
    return value;
  }
};

}  // namespace

double robust_expected_reward(const Game& game, Coalition coalition,
                              const RewardStructure& reward, const OutcomeSet& outcome,
                              OptDir dir, AdversaryMode adversary, StateId from) {
  StateId s0 = resolve_from(game, from);
  const auto lay = layouts(game);
  RobustCtx ctx{game,
                reward,
                outcome,
                lay,
                coalition.members(),
                coalition.complement(game.num_agents()).members(),
                dir == OptDir::Max,
                adversary,
                outcome.horizon(),
                {}};
  return ctx.go(0, s0, outcome.init_code(s0), 0.0);
}

namespace {

McEstimate monte_carlo_impl(const Game& game, const StrategyProfile& profile,
                            const RewardStructure* reward, const OutcomeSet& outcome,
                            long long samples, uint64_t seed, StateId from) {
  if (!profile.full())
    throw PartialProfile("simulation needs a full strategy profile");
  if (samples <= 0) throw Error("sample count must be positive");
  StateId s0 = resolve_from(game, from);
  const auto lay = layouts(game);
  int H = outcome.horizon();

  double sum = 0, sumsq = 0;
  long long done = 0;
  for (long long block = 0; done < samples; ++block) {
    std::mt19937_64 rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (uint64_t)(block + 1))));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    long long n = std::min(kMcBlock, samples - done);
    for (long long i = 0; i < n; ++i) {
      StateId s = s0;
      int code = outcome.init_code(s0);
      double acc = 0;
      for (int t = 1; t <= H; ++t) {
        int joint = 0;
        JointAction ja(game.num_agents());
        for (AgentId a = 0; a < game.num_agents(); ++a) {
          const auto& probs = profile.at(a).probs[s];
          double u = unif(rng);
          int pos = (int)probs.size() - 1;
          double cum = 0;
          for (int k = 0; k < (int)probs.size(); ++k) {
            cum += probs[k];
            if (u < cum) {
              pos = k;
              break;
            }
          }
          joint += pos * lay[s].strides[a];
          ja[a] = game.available(s, a)[pos];
        }
        if (reward) acc += reward_of(*reward, s, ja);
        const Distribution& dist = game.transition(s, joint);
        double u = unif(rng);
        double cum = 0;
        StateId nxt = dist.back().state;
        for (const auto& e : dist) {
          cum += e.prob;
          if (u < cum) {
            nxt = e.state;
            break;
          }
        }
        code = outcome.step_code(code, nxt, t);
        s = nxt;
      }
      double x;
      if (reward)
        x = outcome.satisfied(code) ? acc + reward->state_reward[s] : 0.0;
      else
        x = outcome.satisfied(code) ? 1.0 : 0.0;
      sum += x;
      sumsq += x * x;
    }
    done += n;
  }

  McEstimate out;
  out.samples = samples;
  out.estimate = sum / (double)samples;
  if (samples > 1) {
    double var = (sumsq - (double)samples * out.estimate * out.estimate) /
                 (double)(samples - 1);
    out.stderr_ = std::sqrt(std::max(var, 0.0) / (double)samples);
  }
  return out;
}

}  // namespace

McEstimate monte_carlo_sat(const Game& game, const StrategyProfile& profile,
                           const OutcomeSet& outcome, long long samples,
                           uint64_t seed, StateId from) {
  return monte_carlo_impl(game, profile, nullptr, outcome, samples, seed, from);
}

McEstimate monte_carlo_reward(const Game& game, const StrategyProfile& profile,
                              const RewardStructure& reward, const OutcomeSet& outcome,
                              long long samples, uint64_t seed, StateId from) {
  return monte_carlo_impl(game, profile, &reward, outcome, samples, seed, from);
}

}  // namespace respgames
