#include "config_args.hpp"

#include <set>
#include <stdexcept>

#include "json.hpp"

namespace pshield::cli {

namespace {

using json = nlohmann::json;

std::string scalar_text(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  // dump() prints floats in shortest round-trip form.
  if (v.is_number()) return v.dump();
  throw std::runtime_error("config: key '" + key + "' must hold a string, number or boolean");
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

void append_key(std::vector<std::string>& out, const std::string& key, const json& v) {
  const std::string flag = "--" + key;
  if (v.is_boolean()) {
    if (v.get<bool>()) out.push_back(flag);
    return;
  }
  if (v.is_array()) {
    for (const auto& item : v) {
      if (item.is_array() || item.is_object() || item.is_boolean() || item.is_null()) {
        throw std::runtime_error("config: array '" + key + "' must hold strings or numbers");
      }
      out.push_back(flag);
      out.push_back(scalar_text(item, key));
    }
    return;
  }
  if (v.is_null() || v.is_object()) {
    throw std::runtime_error("config: key '" + key + "' has an unsupported value");
  }
  out.push_back(flag);
  out.push_back(scalar_text(v, key));
}

}  // namespace

std::vector<std::string> merge_config_args(const std::vector<std::string>& args,
                                           const std::string& subcommand,
                                           const std::string& config_json) {
  json cfg;
  try {
    cfg = json::parse(config_json);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  if (!cfg.is_object()) throw std::runtime_error("config: top level must be an object");

  std::vector<std::string> out = args;
  std::set<std::string> seen;
  auto apply = [&](const json& obj) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it.value().is_object()) continue;  // another subcommand's section
      if (it.key() == "config") throw std::runtime_error("config: nested 'config' key");
      // A section entry overrides the same flat key.
      if (!seen.insert(it.key()).second) continue;
      if (given_on_command_line(args, "--" + it.key())) continue;
      append_key(out, it.key(), it.value());
    }
  };
  if (auto section = cfg.find(subcommand); section != cfg.end() && section->is_object()) {
    apply(*section);
  }
  apply(cfg);
  return out;
}

std::string find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

}  // namespace pshield::cli
