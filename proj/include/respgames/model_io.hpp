#pragma once

#include <map>
#include <string>

#include "respgames/model.hpp"

namespace respgames {

// A model file: the game plus named profiles and reward structures.
struct ParsedModel {
  Game game;
  std::map<std::string, StrategyProfile> profiles;
  std::map<std::string, RewardStructure> rewards;
};

// Parses the line-oriented model format:
//   agents A1 A2
//   actions A1 { b1 nb1 }
//   atoms init crash
//   state s0 init { init }
//   available s0 A1 { b1 }
//   trans s0 (b1,*) { s1:0.5 s2:0.5 }
//   reward r1 state s1 -3
//   reward r1 action s0 (b1,*) 3
//   profile p { A1 s0 { b1:1.0 } }
// '#' starts a comment. A '{' block may continue across lines. Lexical
// problems raise SyntaxError; semantic ones surface via validate_game.
ParsedModel parse_model(const std::string& text);

// Canonical text form: interned order, one trans line per (state, joint
// action), every profile entry explicit, shortest round-trip numbers.
// parse_model(serialize_model(m)) reproduces m exactly.
std::string serialize_model(const ParsedModel& model);

// Shortest decimal string that parses back to exactly this double.
std::string format_double(double v);

}  // namespace respgames
