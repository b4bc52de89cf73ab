#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "eau/mdp.hpp"

namespace eau {

// Line-oriented MDP text format:
//
//   mdp
//   states <N>
//   initial <s>
//   discount <float>
//   absorbing <s> [<s> ...]
//   label <name> <s> [<s> ...]
//   reward state <s> <float>
//   reward sa <s> <a> <float>
//   transition <s> <a> <s'> <float>
//
// `#` starts a comment. Reals are written in shortest round-trip form, so
// save followed by load reproduces the model bit for bit.

/// Throws ParseError (position = 1-based line) on syntax errors and on any
/// validate_mdp violation.
Mdp parse_mdp(std::string_view text);
Mdp load_mdp(const std::filesystem::path& path);

std::string format_mdp(const Mdp& mdp);
void write_mdp(std::ostream& out, const Mdp& mdp);
void save_mdp(const Mdp& mdp, const std::filesystem::path& path);

// Policy CSV: header `state,action,probability`, one row per nonzero entry.

StochasticPolicy parse_policy_csv(std::string_view text, const Mdp& mdp);
StochasticPolicy load_policy(const std::filesystem::path& path, const Mdp& mdp);
std::string format_policy_csv(const StochasticPolicy& policy);
void save_policy(const StochasticPolicy& policy, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_real(double value);
/// Strict full-token parse; nullopt-like failure reported by returning false.
bool parse_real(std::string_view token, double& value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace eau
