#include "respgames/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace respgames {

namespace {

struct Line {
  int number;
  std::vector<std::string> tokens;
};

// Raw declarations that need the interned game before they can be resolved.
struct RewardDecl {
  int line;
  std::string name;
  bool state_rule;
  std::string state;                 // state name or "*" (action rules only)
  std::vector<std::string> pattern;  // action rules only
  double value;
};

struct ProfileDecl {
  int line;
  std::string name;
  std::vector<std::string> tokens;  // body between outer braces
};

std::vector<Line> logical_lines(const std::string& text) {
  std::vector<Line> out;
  std::istringstream in(text);
  std::string physical;
  int number = 0;
  int start_line = 0;
  std::string pending;
  int depth = 0;
  while (std::getline(in, physical)) {
    ++number;
    auto hash = physical.find('#');
    if (hash != std::string::npos) physical.erase(hash);
    if (pending.empty()) start_line = number;
    pending += " " + physical;
    for (char c : physical) {
      if (c == '{') ++depth;
      if (c == '}') --depth;
    }
    if (depth < 0) throw SyntaxError(number, "unmatched '}'");
    if (depth > 0) continue;  // block continues on the next line
    // Tokenize: braces stand alone, everything else splits on whitespace.
    std::string padded;
    for (char c : pending) {
      if (c == '{' || c == '}') {
        padded += ' ';
        padded += c;
        padded += ' ';
      } else {
        padded += c;
      }
    }
    std::istringstream ts(padded);
    Line line{start_line, {}};
    std::string tok;
    while (ts >> tok) line.tokens.push_back(tok);
    if (!line.tokens.empty()) out.push_back(std::move(line));
    pending.clear();
  }
  if (depth != 0) throw SyntaxError(number, "unclosed '{'");
  return out;
}

double parse_number(const std::string& tok, int line) {
  double v = 0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw SyntaxError(line, "expected a number, got '" + tok + "'");
  return v;
}

std::vector<std::string> parse_tuple(const std::string& tok, int line) {
  if (tok.size() < 2 || tok.front() != '(' || tok.back() != ')')
    throw SyntaxError(line, "expected (a,b,...), got '" + tok + "'");
  std::vector<std::string> out;
  std::string cur;
  for (size_t i = 1; i + 1 < tok.size(); ++i) {
    if (tok[i] == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += tok[i];
    }
  }
  out.push_back(cur);
  for (const auto& part : out)
    if (part.empty()) throw SyntaxError(line, "empty entry in tuple '" + tok + "'");
  return out;
}

std::pair<std::string, double> parse_weighted(const std::string& tok, int line) {
  auto colon = tok.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
    throw SyntaxError(line, "expected name:prob, got '" + tok + "'");
  return {tok.substr(0, colon), parse_number(tok.substr(colon + 1), line)};
}

// Consumes "{ ... }" starting at tokens[i]; returns the content range.
std::vector<std::string> take_block(const std::vector<std::string>& tokens, size_t& i,
                                    int line) {
  if (i >= tokens.size() || tokens[i] != "{")
    throw SyntaxError(line, "expected '{'");
  ++i;
  std::vector<std::string> body;
  int depth = 1;
  for (; i < tokens.size(); ++i) {
    if (tokens[i] == "{") ++depth;
    if (tokens[i] == "}") {
      --depth;
      if (depth == 0) {
        ++i;
        return body;
      }
    }
    body.push_back(tokens[i]);
  }
  throw SyntaxError(line, "unclosed '{'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ParsedModel parse_model(const std::string& text) {
  GameDescription desc;
  std::map<std::string, size_t> agent_index;
  std::vector<RewardDecl> reward_decls;
  std::vector<ProfileDecl> profile_decls;

  for (const Line& line : logical_lines(text)) {
    const auto& t = line.tokens;
    const std::string& head = t[0];
    if (head == "agents") {
      if (t.size() < 2) throw SyntaxError(line.number, "agents line needs names");
      for (size_t i = 1; i < t.size(); ++i) {
        agent_index[t[i]] = desc.agents.size();
        desc.agents.push_back(t[i]);
      }
      desc.actions.resize(desc.agents.size());
    } else if (head == "actions") {
      if (t.size() < 3) throw SyntaxError(line.number, "actions line needs an agent");
      auto it = agent_index.find(t[1]);
      if (it == agent_index.end())
        throw SyntaxError(line.number, "actions for undeclared agent " + t[1]);
      size_t i = 2;
      desc.actions[it->second] = take_block(t, i, line.number);
      if (i != t.size()) throw SyntaxError(line.number, "trailing tokens after '}'");
    } else if (head == "atoms") {
      for (size_t i = 1; i < t.size(); ++i) desc.atoms.push_back(t[i]);
    } else if (head == "state") {
      if (t.size() < 2) throw SyntaxError(line.number, "state line needs a name");
      GameDescription::StateEntry st;
      st.name = t[1];
      size_t i = 2;
      if (i < t.size() && t[i] == "init") {
        st.initial = true;
        ++i;
      }
      if (i < t.size()) {
        st.labels = take_block(t, i, line.number);
        if (i != t.size()) throw SyntaxError(line.number, "trailing tokens after '}'");
      }
      desc.states.push_back(std::move(st));
    } else if (head == "available") {
      if (t.size() < 4)
        throw SyntaxError(line.number, "available line needs state, agent, actions");
      GameDescription::AvailabilityEntry av;
      av.state = t[1];
      av.agent = t[2];
      size_t i = 3;
      av.actions = take_block(t, i, line.number);
      if (i != t.size()) throw SyntaxError(line.number, "trailing tokens after '}'");
      desc.availability.push_back(std::move(av));
    } else if (head == "trans") {
      if (t.size() < 4)
        throw SyntaxError(line.number, "trans line needs state, actions, distribution");
      GameDescription::TransitionDecl tr;
      tr.state = t[1];
      tr.actions = parse_tuple(t[2], line.number);
      size_t i = 3;
      for (const auto& tok : take_block(t, i, line.number))
        tr.dist.push_back(parse_weighted(tok, line.number));
      if (i != t.size()) throw SyntaxError(line.number, "trailing tokens after '}'");
      desc.transitions.push_back(std::move(tr));
    } else if (head == "reward") {
      if (t.size() < 4) throw SyntaxError(line.number, "incomplete reward line");
      RewardDecl rd;
      rd.line = line.number;
      rd.name = t[1];
      if (t[2] == "state") {
        if (t.size() != 5)
          throw SyntaxError(line.number, "reward state line needs state and value");
        rd.state_rule = true;
        rd.state = t[3];
        rd.value = parse_number(t[4], line.number);
      } else if (t[2] == "action") {
        if (t.size() != 6)
          throw SyntaxError(line.number,
                            "reward action line needs state, actions, value");
        rd.state_rule = false;
        rd.state = t[3];
        rd.pattern = parse_tuple(t[4], line.number);
        rd.value = parse_number(t[5], line.number);
      } else {
        throw SyntaxError(line.number, "reward kind must be 'state' or 'action'");
      }
      reward_decls.push_back(std::move(rd));
    } else if (head == "profile") {
      if (t.size() < 3) throw SyntaxError(line.number, "profile line needs a name");
      ProfileDecl pd;
      pd.line = line.number;
      pd.name = t[1];
      size_t i = 2;
      pd.tokens = take_block(t, i, line.number);
      if (i != t.size()) throw SyntaxError(line.number, "trailing tokens after '}'");
      profile_decls.push_back(std::move(pd));
    } else {
      throw SyntaxError(line.number, "unknown directive '" + head + "'");
    }
  }

  ParsedModel model{validate_game(desc), {}, {}};
  const Game& game = model.game;
  std::vector<Violation> bad;
  auto flag = [&bad](Violation::Kind k, int line, const std::string& msg) {
    bad.push_back({k, "line " + std::to_string(line) + ": " + msg});
  };

  for (const auto& rd : reward_decls) {
    auto [it, fresh] = model.rewards.try_emplace(rd.name);
    RewardStructure& r = it->second;
    if (fresh) {
      r.name = rd.name;
      r.state_reward.assign(game.num_states(), 0.0);
    }
    if (rd.state_rule) {
      try {
        r.state_reward[game.state_id(rd.state)] += rd.value;
      } catch (const UnknownIdentifier& e) {
        flag(Violation::Kind::UnknownIdentifier, rd.line, e.what());
      }
      continue;
    }
    RewardStructure::ActionRule rule;
    rule.value = rd.value;
    try {
      if (rd.state != "*") rule.state = game.state_id(rd.state);
      if ((int)rd.pattern.size() != game.num_agents()) {
        flag(Violation::Kind::UnknownIdentifier, rd.line,
             "action pattern lists " + std::to_string(rd.pattern.size()) +
                 " entries for " + std::to_string(game.num_agents()) + " agents");
        continue;
      }
      for (AgentId a = 0; a < game.num_agents(); ++a)
        if (rd.pattern[a] == "*")
          rule.pattern.push_back(std::nullopt);
        else
          rule.pattern.push_back(game.action_id(a, rd.pattern[a]));
      r.rules.push_back(std::move(rule));
    } catch (const UnknownIdentifier& e) {
      flag(Violation::Kind::UnknownIdentifier, rd.line, e.what());
    }
  }

  for (const auto& pd : profile_decls) {
    if (model.profiles.count(pd.name)) {
      flag(Violation::Kind::Duplicate, pd.line, "duplicate profile " + pd.name);
      continue;
    }
    StrategyProfile profile(game.num_agents());
    std::vector<Strategy> strat;
    for (AgentId a = 0; a < game.num_agents(); ++a)
      strat.push_back(Strategy::uniform(game, a));
    std::set<std::pair<int, int>> seen;
    size_t i = 0;
    const auto& body = pd.tokens;
    bool ok = true;
    while (i < body.size() && ok) {
      if (i + 2 >= body.size()) {
        flag(Violation::Kind::BadStrategy, pd.line,
             "profile " + pd.name + " has a truncated entry");
        ok = false;
        break;
      }
      std::string agent_name = body[i];
      std::string state_name = body[i + 1];
      i += 2;
      std::vector<std::string> entries;
      try {
        entries = take_block(body, i, pd.line);
      } catch (const SyntaxError& e) {
        flag(Violation::Kind::BadStrategy, pd.line, e.what());
        ok = false;
        break;
      }
      try {
        AgentId a = game.agent_id(agent_name);
        StateId s = game.state_id(state_name);
        if (!seen.insert({a, s}).second) {
          flag(Violation::Kind::Duplicate, pd.line,
               "profile " + pd.name + " re-declares " + agent_name + " in " +
                   state_name);
          continue;
        }
        const auto& avail = game.available(s, a);
        std::vector<double> probs(avail.size(), 0.0);
        for (const auto& tok : entries) {
          auto [act, p] = parse_weighted(tok, pd.line);
          ActionId id = game.action_id(a, act);
          int pos = -1;
          for (int k = 0; k < (int)avail.size(); ++k)
            if (avail[k] == id) pos = k;
          if (pos < 0) {
            flag(Violation::Kind::UnknownIdentifier, pd.line,
                 "profile " + pd.name + ": action " + act + " is not available to " +
                     agent_name + " in " + state_name);
            continue;
          }
          probs[pos] = p;
        }
        strat[a].probs[s] = std::move(probs);
      } catch (const Error& e) {
        flag(Violation::Kind::UnknownIdentifier, pd.line, e.what());
      }
    }
    if (!ok) continue;
    bool valid = true;
    for (AgentId a = 0; a < game.num_agents(); ++a) {
      try {
        validate_strategy(game, strat[a]);
        profile.set(strat[a]);
      } catch (const ValidationError& e) {
        for (const auto& v : e.violations())
          flag(v.kind, pd.line, "profile " + pd.name + ": " + v.message);
        valid = false;
      }
    }
    if (valid) model.profiles.emplace(pd.name, std::move(profile));
  }

  if (!bad.empty()) throw ValidationError(std::move(bad));
  return model;
}

std::string serialize_model(const ParsedModel& model) {
  const Game& g = model.game;
  std::string out;
  out += "agents";
  for (AgentId a = 0; a < g.num_agents(); ++a) out += " " + g.agent_name(a);
  out += "\n";
  for (AgentId a = 0; a < g.num_agents(); ++a) {
    out += "actions " + g.agent_name(a) + " {";
    for (ActionId x = 0; x < g.num_actions(a); ++x) out += " " + g.action_name(a, x);
    out += " }\n";
  }
  if (g.num_atoms() > 0) {
    out += "atoms";
    for (AtomId a = 0; a < g.num_atoms(); ++a) out += " " + g.atom_name(a);
    out += "\n";
  }
  for (StateId s = 0; s < g.num_states(); ++s) {
    out += "state " + g.state_name(s);
    if (s == g.initial_state()) out += " init";
    const auto& labels = g.labels_of(s);
    if (!labels.empty()) {
      out += " {";
      for (AtomId a : labels) out += " " + g.atom_name(a);
      out += " }";
    }
    out += "\n";
  }
  for (StateId s = 0; s < g.num_states(); ++s)
    for (AgentId a = 0; a < g.num_agents(); ++a)
      if ((int)g.available(s, a).size() != g.num_actions(a)) {
        out += "available " + g.state_name(s) + " " + g.agent_name(a) + " {";
        for (ActionId x : g.available(s, a)) out += " " + g.action_name(a, x);
        out += " }\n";
      }
  for (StateId s = 0; s < g.num_states(); ++s) {
    const auto& joints = g.joint_actions(s);
    for (size_t j = 0; j < joints.size(); ++j) {
      out += "trans " + g.state_name(s) + " " + g.format_joint(s, joints[j]) + " {";
      for (const auto& e : g.transition(s, (int)j))
        out += " " + g.state_name(e.state) + ":" + format_double(e.prob);
      out += " }\n";
    }
  }
  for (const auto& [name, r] : model.rewards) {
    for (StateId s = 0; s < g.num_states(); ++s)
      if (r.state_reward[s] != 0.0)
        out += "reward " + name + " state " + g.state_name(s) + " " +
               format_double(r.state_reward[s]) + "\n";
    for (const auto& rule : r.rules) {
      out += "reward " + name + " action " +
             (rule.state ? g.state_name(*rule.state) : std::string("*")) + " (";
      for (AgentId a = 0; a < g.num_agents(); ++a) {
        if (a) out += ",";
        out += rule.pattern[a] ? g.action_name(a, *rule.pattern[a]) : std::string("*");
      }
      out += ") " + format_double(rule.value) + "\n";
    }
  }
  for (const auto& [name, profile] : model.profiles) {
    out += "profile " + name + " {";
    for (AgentId a = 0; a < g.num_agents(); ++a) {
      const Strategy& strat = profile.at(a);
      for (StateId s = 0; s < g.num_states(); ++s) {
        out += " " + g.agent_name(a) + " " + g.state_name(s) + " {";
        const auto& avail = g.available(s, a);
        for (size_t k = 0; k < avail.size(); ++k)
          out += " " + g.action_name(a, avail[k]) + ":" + format_double(strat.at(s, k));
        out += " }";
      }
    }
    out += " }\n";
  }
  return out;
}

}  // namespace respgames
