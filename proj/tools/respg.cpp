// respg: command line front end for the responsibility games library.
//
// Subcommands: check, resp, bcr, ne, simulate, validate, fmt. Every run
// produces one report; --format json emits it verbatim, --format text
// renders a view of the same document. Numbers in text mode are printed
// with the JSON serializer, so any number shown in text appears with the
// same bytes in the JSON report.
//
// Exit codes: 0 true / solutions found, 1 property false / not responsible,
// 2 input or usage error, 3 no equilibrium.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "respgames/checker.hpp"
#include "respgames/model_io.hpp"
#include "respgames/parametric.hpp"

namespace rg = respgames;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

// FNV-1a 64-bit over the raw input bytes, hex-printed. Reports embed it so
// a result can be tied back to the exact file revision that produced it.
std::string fnv1a64_hex(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rg::Error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Text-mode rendering of a JSON leaf: identical bytes to the JSON report.
std::string num(const ordered_json& j) { return j.dump(); }

struct Report {
  ordered_json json;
  std::vector<std::string> lines;

  void line(std::string s) { lines.push_back(std::move(s)); }
};

void emit(const Report& r, const std::string& format) {
  if (format == "json") {
    std::cout << r.json.dump(2) << "\n";
  } else {
    for (const auto& l : r.lines) std::cout << l << "\n";
  }
}

ordered_json base_json(const std::string& command, const std::string& path,
                       const std::string& bytes) {
  ordered_json j;
  j["tool"] = ordered_json{{"name", "respg"}, {"version", kVersion}};
  j["command"] = command;
  j["input"] = ordered_json{{"path", path}, {"fnv1a64", fnv1a64_hex(bytes)}};
  return j;
}

void header_lines(Report* r) {
  const auto& j = r->json;
  r->line("respg " + j["tool"]["version"].get<std::string>() + "  " +
          j["input"]["path"].get<std::string>() +
          "  fnv1a64=" + j["input"]["fnv1a64"].get<std::string>());
}

rg::RespMode mode_of(const std::string& s) {
  return s == "max" ? rg::RespMode::Max : rg::RespMode::Min;
}

rg::AdversaryMode adversary_of(const std::string& s) {
  return s == "any" ? rg::AdversaryMode::Any : rg::AdversaryMode::Hostile;
}

ordered_json agent_names(const rg::Game& game, rg::Coalition c) {
  ordered_json arr = ordered_json::array();
  for (rg::AgentId a : c.members()) arr.push_back(game.agent_name(a));
  return arr;
}

std::string braced(const ordered_json& names) {
  std::string out = "{";
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) out += ",";
    out += names[i].get<std::string>();
  }
  return out + "}";
}

const rg::StrategyProfile& profile_or_throw(const rg::ParsedModel& model,
                                            const std::string& name) {
  auto it = model.profiles.find(name);
  if (it == model.profiles.end()) throw rg::UnknownProfile("unknown profile: " + name);
  return it->second;
}

const rg::RewardStructure& reward_or_throw(const rg::ParsedModel& model,
                                           const std::string& name) {
  auto it = model.rewards.find(name);
  if (it == model.rewards.end()) throw rg::UnknownReward("unknown reward: " + name);
  return it->second;
}

struct Cli {
  std::string model_path;
  std::string formula;
  std::string outcome;
  std::string profile;
  std::string agent;
  std::string mode = "min";
  std::string r_adversary = "hostile";
  std::string format = "text";
  std::string utility_file;
  std::string profiles_file;
  std::vector<std::string> rewards;
  double lambda = 1.0;
  long long samples = 0;
  uint64_t seed = 0;
  int threads = 0;
};

int run_check(const Cli& o) {
  std::string bytes = read_file(o.model_path);
  rg::ParsedModel model = rg::parse_model(bytes);
  rg::CheckContext ctx(model);
  ctx.degree_mode = mode_of(o.mode);
  ctx.reward_adversary = adversary_of(o.r_adversary);
  if (!o.profiles_file.empty()) {
    rg::ParsedModel extra = rg::parse_model(read_file(o.profiles_file));
    for (auto& [name, p] : extra.profiles) ctx.profiles[name] = p;
    for (auto& [name, rw] : extra.rewards) ctx.rewards[name] = rw;
  }
  rg::StateFormulaPtr f = rg::parse_state_formula(o.formula);
  rg::Verdict v = rg::check(ctx, *f);

  Report r;
  r.json = base_json("check", o.model_path, bytes);
  r.json["formula"] = v.formula;
  r.json["state"] = model.game.state_name(v.state);
  r.json["satisfied"] = v.truth;
  if (v.value) r.json["value"] = *v.value;
  if (v.witness) r.json["witness"] = *v.witness;

  header_lines(&r);
  r.line("formula: " + v.formula);
  r.line("state: " + r.json["state"].get<std::string>());
  r.line(std::string("satisfied: ") + (v.truth ? "true" : "false"));
  if (v.value) r.line("value: " + num(r.json["value"]));
  if (v.witness) r.line("witness: " + *v.witness);
  emit(r, o.format);
  return v.truth ? 0 : 1;
}

int run_resp(const Cli& o) {
  std::string bytes = read_file(o.model_path);
  rg::ParsedModel model = rg::parse_model(bytes);
  const rg::Game& game = model.game;
  const rg::StrategyProfile& profile = profile_or_throw(model, o.profile);
  rg::PathFormulaPtr pf = rg::parse_path_formula(o.outcome);
  rg::OutcomeSet outcome = rg::resolve_outcome(game, *pf);
  rg::Coalition scope = rg::Coalition::all(game.num_agents());
  rg::ResponsibilityReport rep = rg::responsibility_report(
      game, profile, outcome, scope, mode_of(o.mode), -1, o.threads);

  std::optional<rg::AgentId> only;
  if (!o.agent.empty()) only = game.agent_id(o.agent);

  Report r;
  r.json = base_json("resp", o.model_path, bytes);
  r.json["profile"] = o.profile;
  r.json["outcome"] = rg::print_formula(*pf);
  r.json["mode"] = o.mode;
  r.json["horizon"] = rep.horizon;
  r.json["upsilon"] = rep.upsilon;
  ordered_json degrees = ordered_json::object();
  for (const auto& [a, d] : rep.degrees)
    if (!only || *only == a) degrees[game.agent_name(a)] = d;
  r.json["degrees"] = degrees;
  ordered_json table = ordered_json::array();
  for (rg::Coalition c : rep.table.ordered())
    table.push_back(ordered_json{{"coalition", agent_names(game, c)},
                                 {"v", rep.table.at(c)}});
  r.json["table"] = table;

  header_lines(&r);
  r.line("profile: " + o.profile + "  outcome: " +
         r.json["outcome"].get<std::string>() + "  mode: " + o.mode +
         "  horizon: " + num(r.json["horizon"]));
  r.line("upsilon: " + num(r.json["upsilon"]));
  r.line("degrees:");
  for (auto it = degrees.begin(); it != degrees.end(); ++it)
    r.line("  " + it.key() + ": " + num(it.value()));
  r.line("coalition values:");
  for (const auto& row : r.json["table"])
    r.line("  " + braced(row["coalition"]) + ": " + num(row["v"]));
  emit(r, o.format);
  return 0;
}

int run_bcr(const Cli& o) {
  std::string bytes = read_file(o.model_path);
  rg::ParsedModel model = rg::parse_model(bytes);
  const rg::Game& game = model.game;
  const rg::StrategyProfile& profile = profile_or_throw(model, o.profile);
  rg::PathFormulaPtr pf = rg::parse_path_formula(o.outcome);
  rg::OutcomeSet outcome = rg::resolve_outcome(game, *pf);
  rg::AgentId agent = game.agent_id(o.agent);
  std::optional<rg::BcrWitness> w = rg::qualitative_bcr(game, profile, outcome, agent);

  Report r;
  r.json = base_json("bcr", o.model_path, bytes);
  r.json["profile"] = o.profile;
  r.json["outcome"] = rg::print_formula(*pf);
  r.json["agent"] = o.agent;
  r.json["responsible"] = w.has_value();
  if (w) {
    ordered_json jw;
    jw["coalition"] = agent_names(game, w->coalition);
    ordered_json states = ordered_json::array();
    for (rg::StateId s : w->violating_states) states.push_back(game.state_name(s));
    jw["states"] = states;
    ordered_json actions = ordered_json::array();
    for (size_t i = 0; i < w->violating_actions.size(); ++i)
      actions.push_back(
          game.format_joint(w->violating_states[i], w->violating_actions[i]));
    jw["actions"] = actions;
    jw["histories_checked"] = w->histories_checked;
    r.json["witness"] = jw;
  }

  header_lines(&r);
  r.line("agent: " + o.agent + "  profile: " + o.profile + "  outcome: " +
         r.json["outcome"].get<std::string>());
  r.line(std::string("responsible: ") + (w ? "true" : "false"));
  if (w) {
    const auto& jw = r.json["witness"];
    r.line("witness coalition: " + braced(jw["coalition"]));
    std::string path = jw["states"][0].get<std::string>();
    for (size_t i = 0; i < jw["actions"].size(); ++i)
      path += " -" + jw["actions"][i].get<std::string>() + "-> " +
              jw["states"][i + 1].get<std::string>();
    r.line("avoiding path: " + path);
    r.line("histories checked: " + num(jw["histories_checked"]));
  }
  emit(r, o.format);
  return w ? 0 : 1;
}

int run_simulate(const Cli& o) {
  if (o.samples <= 0) {
    std::cerr << "error: --samples must be a positive integer\n";
    return 2;
  }
  std::string bytes = read_file(o.model_path);
  rg::ParsedModel model = rg::parse_model(bytes);
  const rg::Game& game = model.game;
  const rg::StrategyProfile& profile = profile_or_throw(model, o.profile);
  rg::PathFormulaPtr pf = rg::parse_path_formula(o.outcome);
  rg::OutcomeSet outcome = rg::resolve_outcome(game, *pf);

  rg::McEstimate est;
  double analytic = 0;
  if (!o.rewards.empty()) {
    const rg::RewardStructure& rs = reward_or_throw(model, o.rewards.front());
    est = rg::monte_carlo_reward(game, profile, rs, outcome, o.samples, o.seed);
    analytic = rg::expected_reward(game, profile, rs, outcome);
  } else {
    est = rg::monte_carlo_sat(game, profile, outcome, o.samples, o.seed);
    analytic = rg::sat_probability(game, profile, outcome);
  }
  double diff = std::abs(est.estimate - analytic);

  Report r;
  r.json = base_json("simulate", o.model_path, bytes);
  r.json["profile"] = o.profile;
  r.json["outcome"] = rg::print_formula(*pf);
  if (!o.rewards.empty()) r.json["reward"] = o.rewards.front();
  r.json["samples"] = est.samples;
  r.json["seed"] = o.seed;
  r.json["estimate"] = est.estimate;
  r.json["stderr"] = est.stderr_;
  r.json["analytic"] = analytic;
  // |estimate - analytic| in standard errors; null when the estimator has
  // zero variance (then any nonzero diff would be a genuine contradiction).
  if (est.stderr_ > 0)
    r.json["sigma_distance"] = diff / est.stderr_;
  else if (diff == 0)
    r.json["sigma_distance"] = 0.0;
  else
    r.json["sigma_distance"] = nullptr;

  header_lines(&r);
  r.line("profile: " + o.profile + "  outcome: " +
         r.json["outcome"].get<std::string>() + "  samples: " +
         num(r.json["samples"]) + "  seed: " + num(r.json["seed"]));
  r.line("estimate: " + num(r.json["estimate"]));
  r.line("stderr: " + num(r.json["stderr"]));
  r.line("analytic: " + num(r.json["analytic"]));
  r.line("sigma distance: " + (r.json["sigma_distance"].is_null()
                                   ? std::string("n/a")
                                   : num(r.json["sigma_distance"])));
  emit(r, o.format);
  return 0;
}

ordered_json solution_json(const rg::Game& game, const rg::NeSolution& s) {
  ordered_json js;
  ordered_json params = ordered_json::object();
  for (const auto& [name, v] : s.params) params[name] = v;
  js["params"] = params;
  ordered_json support = ordered_json::object();
  for (const auto& sup : s.support) {
    ordered_json acts = ordered_json::array();
    for (rg::ActionId a : sup.actions) acts.push_back(game.action_name(sup.agent, a));
    support[game.agent_name(sup.agent) + "@" + game.state_name(sup.state)] = acts;
  }
  js["support"] = support;
  ordered_json utils = ordered_json::object();
  for (const auto& [a, u] : s.utilities) utils[game.agent_name(a)] = u;
  js["utilities"] = utils;
  js["residual"] = s.residual;
  js["verified"] = s.verified;
  js["degenerate"] = s.degenerate;
  return js;
}

int run_ne(const Cli& o) {
  std::string bytes = read_file(o.model_path);
  rg::ParsedModel model = rg::parse_model(bytes);
  const rg::Game& game = model.game;
  rg::PathFormulaPtr pf = rg::parse_path_formula(o.outcome);
  int k = rg::horizon(*pf);
  rg::RespMode mode = mode_of(o.mode);

  std::vector<rg::NeSolution> sols;
  std::string method;
  if (!o.utility_file.empty()) {
    rg::UtilityOverride ov =
        rg::parse_utility_overrides(game, read_file(o.utility_file));
    rg::NeProblem problem = rg::ne_problem_from_override(game, ov);
    sols = rg::solve_ne(problem);
    method = "override";
  } else {
    if (o.rewards.empty())
      throw rg::Error("ne needs --reward (one shared, or one per agent) "
                      "unless --utility-file is given");
    std::vector<rg::RewardStructure> rewards;
    for (const auto& name : o.rewards) rewards.push_back(reward_or_throw(model, name));
    rg::Psmas psmas = rg::build_psmas(game, rg::Coalition::all(game.num_agents()));
    try {
      auto utilities = rg::make_utilities(psmas, o.lambda, rewards, *pf, mode);
      rg::NeProblem problem = rg::ne_problem(psmas, std::move(utilities), k);
      sols = rg::solve_ne(problem);
      method = "symbolic";
    } catch (const rg::NonPolynomial& e) {
      std::cerr << "note: " << e.what()
                << "; falling back to numeric pure-profile search\n";
      auto utilities = rg::make_utilities(psmas, 0.0, rewards, *pf, mode);
      rg::NeProblem problem = rg::ne_problem(psmas, std::move(utilities), k);
      rg::OutcomeSet outcome = rg::resolve_outcome(game, *pf);
      rg::OutcomeSet whole =
          rg::resolve_outcome(game, *rg::make_always(k, rg::make_true()));
      rg::Coalition scope = rg::Coalition::all(game.num_agents());
      auto utility = [&](rg::AgentId a, const rg::Evaluation& eval) {
        rg::StrategyProfile prof =
            rg::profile_of(psmas, rg::complete_evaluation(psmas, eval));
        const rg::RewardStructure& rs =
            rewards.size() == 1 ? rewards.front() : rewards[a];
        double pay = rg::expected_reward(game, prof, rs, whole);
        if (o.lambda == 0) return pay;
        return pay - o.lambda * rg::bcr_degree(game, prof, outcome, a, scope, mode);
      };
      sols = rg::solve_ne_numeric(problem, utility);
      method = "numeric";
    }
  }

  Report r;
  r.json = base_json("ne", o.model_path, bytes);
  r.json["outcome"] = rg::print_formula(*pf);
  r.json["lambda"] = o.lambda;
  r.json["mode"] = o.mode;
  r.json["method"] = method;
  ordered_json arr = ordered_json::array();
  for (const auto& s : sols) arr.push_back(solution_json(game, s));
  r.json["solutions"] = arr;

  header_lines(&r);
  r.line("outcome: " + r.json["outcome"].get<std::string>() + "  lambda: " +
         num(r.json["lambda"]) + "  mode: " + o.mode + "  method: " + method);
  r.line("solutions: " + std::to_string(sols.size()));
  for (size_t i = 0; i < arr.size(); ++i) {
    const auto& js = arr[i];
    std::string head = "solution " + std::to_string(i + 1) + ":";
    if (js["verified"].get<bool>()) head += " verified,";
    if (js["degenerate"].get<bool>()) head += " degenerate,";
    head += " residual " + num(js["residual"]);
    r.line(head);
    r.line("  params:");
    for (auto it = js["params"].begin(); it != js["params"].end(); ++it)
      r.line("    " + it.key() + ": " + num(it.value()));
    r.line("  support:");
    for (auto it = js["support"].begin(); it != js["support"].end(); ++it) {
      std::string acts;
      for (const auto& a : it.value()) {
        if (!acts.empty()) acts += " ";
        acts += a.get<std::string>();
      }
      r.line("    " + it.key() + ": " + acts);
    }
    r.line("  utilities:");
    for (auto it = js["utilities"].begin(); it != js["utilities"].end(); ++it)
      r.line("    " + it.key() + ": " + num(it.value()));
  }
  emit(r, o.format);
  if (sols.empty()) {
    std::cerr << "no equilibrium found\n";
    return 3;
  }
  return 0;
}

int run_validate(const Cli& o) {
  std::string bytes = read_file(o.model_path);
  rg::ParsedModel model = rg::parse_model(bytes);
  const rg::Game& game = model.game;

  Report r;
  r.json = base_json("validate", o.model_path, bytes);
  r.json["valid"] = true;
  r.json["agents"] = agent_names(game, rg::Coalition::all(game.num_agents()));
  r.json["states"] = game.num_states();
  ordered_json atoms = ordered_json::array();
  for (rg::AtomId a = 0; a < game.num_atoms(); ++a) atoms.push_back(game.atom_name(a));
  r.json["atoms"] = atoms;
  ordered_json profiles = ordered_json::array();
  for (const auto& [name, p] : model.profiles)
    profiles.push_back(ordered_json{{"name", name}, {"full", p.full()}});
  r.json["profiles"] = profiles;
  ordered_json rewards = ordered_json::array();
  for (const auto& [name, rw] : model.rewards) rewards.push_back(name);
  r.json["rewards"] = rewards;

  header_lines(&r);
  r.line("model OK: " + std::to_string(game.num_agents()) + " agents, " +
         std::to_string(game.num_states()) + " states, " +
         std::to_string(game.num_atoms()) + " atoms");
  std::string profs;
  for (const auto& row : r.json["profiles"]) {
    if (!profs.empty()) profs += " ";
    profs += row["name"].get<std::string>();
    if (!row["full"].get<bool>()) profs += "(partial)";
  }
  r.line("profiles: " + (profs.empty() ? "(none)" : profs));
  std::string rews;
  for (const auto& name : r.json["rewards"]) {
    if (!rews.empty()) rews += " ";
    rews += name.get<std::string>();
  }
  r.line("rewards: " + (rews.empty() ? "(none)" : rews));
  emit(r, o.format);
  return 0;
}

int run_fmt(const Cli& o) {
  std::string bytes = read_file(o.model_path);
  rg::ParsedModel model = rg::parse_model(bytes);
  std::string canon = rg::serialize_model(model);
  if (o.format == "json") {
    ordered_json j = base_json("fmt", o.model_path, bytes);
    j["formatted"] = canon;
    std::cout << j.dump(2) << "\n";
  } else {
    // Text mode prints a valid model file verbatim, nothing else.
    std::cout << canon;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"concurrent stochastic games: responsibility and equilibria"};
  app.set_version_flag("--version", std::string("respg ") + kVersion);
  app.require_subcommand(1);

  Cli o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("model", o.model_path, "model file")->required();
    sub->add_option("--format", o.format, "report format: text or json")
        ->check(CLI::IsMember({"text", "json"}));
    sub->add_option("--threads", o.threads,
                    "worker threads (0 = RESPGAMES_THREADS or hardware)");
  };
  auto add_mode = [&](CLI::App* sub) {
    sub->add_option("--mode", o.mode,
                    "min: outcome undesirable, max: desirable")
        ->check(CLI::IsMember({"min", "max"}));
  };

  CLI::App* c_check =
      app.add_subcommand("check", "evaluate a state formula at the initial state");
  add_common(c_check);
  add_mode(c_check);
  c_check->add_option("--formula", o.formula, "state formula")->required();
  c_check->add_option("--profiles", o.profiles_file,
                      "merge profiles/rewards from another model file over the "
                      "same game");
  c_check->add_option("--r-adversary", o.r_adversary,
                      "complement behaviour in reward operators")
      ->check(CLI::IsMember({"hostile", "any"}));

  CLI::App* c_resp =
      app.add_subcommand("resp", "responsibility degrees under a profile");
  add_common(c_resp);
  add_mode(c_resp);
  c_resp->add_option("--profile", o.profile, "full strategy profile name")->required();
  c_resp->add_option("--outcome", o.outcome, "path formula")->required();
  c_resp->add_option("--agent", o.agent, "restrict printed degrees to one agent");

  CLI::App* c_bcr = app.add_subcommand(
      "bcr", "qualitative responsibility of one agent, with witness coalition");
  add_common(c_bcr);
  c_bcr->add_option("--profile", o.profile, "full strategy profile name")->required();
  c_bcr->add_option("--outcome", o.outcome, "path formula")->required();
  c_bcr->add_option("--agent", o.agent, "agent to test")->required();

  CLI::App* c_ne = app.add_subcommand(
      "ne", "responsibility-aware Nash equilibria in stationary strategies");
  add_common(c_ne);
  add_mode(c_ne);
  c_ne->add_option("--outcome", o.outcome, "path formula")->required();
  c_ne->add_option("--lambda", o.lambda, "weight of the responsibility term")
      ->capture_default_str();
  c_ne->add_option("--reward", o.rewards,
                   "reward structure name; repeat for one per agent");
  c_ne->add_option("--utility-file", o.utility_file,
                   "plain-text utility override (param/u lines)");

  CLI::App* c_sim =
      app.add_subcommand("simulate", "Monte Carlo estimate against the analytic value");
  add_common(c_sim);
  c_sim->add_option("--profile", o.profile, "full strategy profile name")->required();
  c_sim->add_option("--outcome", o.outcome, "path formula")->required();
  c_sim->add_option("--samples", o.samples, "number of sampled paths")->required();
  c_sim->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  c_sim->add_option("--reward", o.rewards,
                    "estimate this reward structure instead of the probability");

  CLI::App* c_val = app.add_subcommand("validate", "parse and validate a model file");
  add_common(c_val);

  CLI::App* c_fmt = app.add_subcommand("fmt", "print the canonical form of a model");
  add_common(c_fmt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  // --threads mirrors RESPGAMES_THREADS, so worker pools created anywhere
  // downstream (coalition tables, checker internals) see the same setting.
  if (o.threads > 0)
    setenv("RESPGAMES_THREADS", std::to_string(o.threads).c_str(), 1);

  try {
    if (app.got_subcommand(c_check)) return run_check(o);
    if (app.got_subcommand(c_resp)) return run_resp(o);
    if (app.got_subcommand(c_bcr)) return run_bcr(o);
    if (app.got_subcommand(c_ne)) return run_ne(o);
    if (app.got_subcommand(c_sim)) return run_simulate(o);
    if (app.got_subcommand(c_val)) return run_validate(o);
    if (app.got_subcommand(c_fmt)) return run_fmt(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
