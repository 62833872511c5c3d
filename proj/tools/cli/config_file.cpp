#include <fstream>

#include "cli/cli.hpp"
#include "stepfill/error.hpp"
#include "stepfill/text.hpp"

namespace stepfill::cli {

std::vector<std::string> config_file_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#' || body.front() == '[') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::InvalidConfig, path + ":" + std::to_string(number) + ": expected key = value");
    }
    auto key = std::string(trim(body.substr(0, eq)));
    auto value = std::string(trim(body.substr(eq + 1)));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    for (auto& c : key) {
      if (c == '_') c = '-';
    }
    if (key.empty() || key == "config") {
      throw Error(Errc::InvalidConfig, path + ":" + std::to_string(number) + ": bad key");
    }
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

}  // namespace stepfill::cli
