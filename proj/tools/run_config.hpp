#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace CLI {
class App;
}

namespace nmsp::cli {

// Effective settings of one subcommand. Sources in increasing precedence:
// built-in defaults, NMSP_SEED (seed only), the --config file, flags.
class RunConfig {
 public:
  struct Option {
    std::string key;
    std::string default_value;
    std::string help;
    bool hidden = false;
  };

  RunConfig(std::string command, std::vector<Option> options);

  // Registers --<key> for every option plus --config.
  void bind(CLI::App& app);
  // Call after parsing. Throws ConfigError on unknown config-file keys.
  void resolve(const std::optional<std::string>& env_seed);

  const std::string& command() const { return command_; }
  const std::string& get(const std::string& key) const;
  bool has_value(const std::string& key) const { return !get(key).empty(); }
  double get_double(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // `<prefix>key = value` per visible option, in declaration order.
  std::string echo(const std::string& prefix = "# ") const;

 private:
  std::string command_;
  std::vector<Option> options_;
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> flag_values_;
  std::string config_path_;
  CLI::App* app_ = nullptr;
};

}  // namespace nmsp::cli
