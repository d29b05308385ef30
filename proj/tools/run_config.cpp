#include "run_config.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <sstream>

#include "nmsp/errors.hpp"
#include "nmsp/key_value.hpp"

namespace nmsp::cli {

RunConfig::RunConfig(std::string command, std::vector<Option> options)
    : command_(std::move(command)), options_(std::move(options)) {
  for (const auto& o : options_) values_[o.key] = o.default_value;
}

void RunConfig::bind(CLI::App& app) {
  app_ = &app;
  app.add_option("--config", config_path_, "Config file of `key = value` lines");
  for (const auto& o : options_) {
    auto* opt = app.add_option("--" + o.key, flag_values_[o.key], o.help);
    if (!o.default_value.empty()) opt->description(o.help + " (default: " + o.default_value + ")");
    if (o.hidden) opt->group("");
  }
}

void RunConfig::resolve(const std::optional<std::string>& env_seed) {
  if (env_seed && values_.contains("seed")) values_["seed"] = *env_seed;

  if (!config_path_.empty()) {
    std::ifstream in(config_path_);
    if (!in) throw ConfigError("cannot read config file " + config_path_);
    std::ostringstream text;
    text << in.rdbuf();
    for (const auto& [key, value] : parse_key_values(text.str(), config_path_)) {
      if (!values_.contains(key)) {
        throw ConfigError(config_path_ + ": unknown key '" + key + "' for " + command_);
      }
      values_[key] = value;
    }
  }

  for (const auto& o : options_) {
    if (app_ && app_->count("--" + o.key) > 0) values_[o.key] = flag_values_[o.key];
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("internal: no option '" + key + "' for " + command_);
  return it->second;
}

double RunConfig::get_double(const std::string& key) const { return parse_double(get(key), key); }
std::size_t RunConfig::get_size(const std::string& key) const { return parse_size(get(key), key); }
std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_u64(get(key), key); }
bool RunConfig::get_bool(const std::string& key) const { return parse_bool(get(key), key); }

std::string RunConfig::echo(const std::string& prefix) const {
  std::ostringstream out;
  out << prefix << "command = " << command_ << '\n';
  for (const auto& o : options_) {
    if (o.hidden && values_.at(o.key) == o.default_value) continue;
    out << prefix << o.key << " = " << values_.at(o.key) << '\n';
  }
  return out.str();
}

}  // namespace nmsp::cli
