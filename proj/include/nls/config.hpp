#pragma once

// Experiment configuration files: JSON with sections ensemble, function,
// run, compare and verify. Numeric fields also accept small arithmetic
// expressions such as "sqrt(12)" or "-1/sqrt(2)".

#include <cstdint>
#include <string>

#include "nls/lab.hpp"

namespace nls {

// Parses a configuration. Errors are ErrorKind::Config and carry the line
// of the offending key when it can be located.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);
std::string read_text_file(const std::string& path);

// Evaluates numbers, +, -, *, /, parentheses, pi and sqrt().
double evaluate_number(const std::string& expression);

// FNV-1a over the raw configuration bytes.
std::uint64_t config_hash(const std::string& text);

}  // namespace nls
