#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace compcap {

// Rounded to 15 significant digits; serializes as the shortest decimal of
// the rounded value, so output is stable across runs and platforms.
nlohmann::json fixed_number(double value);

std::string sha256_hex(std::string_view bytes);

struct RunReport {
  std::string command;
  std::vector<std::string> arguments;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
  std::vector<std::string> warnings;

  // Keys sorted, two-space indent, trailing newline.
  std::string serialize() const;
};

}  // namespace compcap
