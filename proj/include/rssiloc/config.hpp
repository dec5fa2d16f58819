#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace rssiloc {

// Commands a config key belongs to, for --help and override validation.
enum CmdMask : unsigned {
  kCmdSimulate = 1u << 0,
  kCmdPreprocess = 1u << 1,
  kCmdTrain = 1u << 2,
  kCmdEval = 1u << 3,
  kCmdCompare = 1u << 4,
  kCmdAll = 0x1F,
};

struct KeySpec {
  const char* key;
  const char* def;
  unsigned cmds;
  const char* desc;
};

// Flat "key = value" configuration. Precedence: built-in defaults, then the
// config file, then command-line --key value overrides. Unknown keys are
// rejected everywhere.
class Config {
 public:
  Config();  // defaults

  static const std::vector<KeySpec>& schema();

  // '#' comments and blank lines allowed; ConfigError on unknown keys or
  // malformed lines, IoError when the file cannot be read.
  void load_file(const std::filesystem::path& file);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  int64_t integer(const std::string& key) const;
  uint64_t u64(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<int> int_list(const std::string& key) const;  // comma-separated

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace rssiloc
