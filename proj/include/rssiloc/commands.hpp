#pragma once

#include <iosfwd>

#include "rssiloc/config.hpp"

namespace rssiloc {

// Subcommand bodies; each throws ConfigError / IoError / NumericError and
// writes progress to `out`.
void cmd_simulate(const Config& cfg, std::ostream& out);
void cmd_preprocess(const Config& cfg, std::ostream& out);
void cmd_train(const Config& cfg, std::ostream& out);
void cmd_eval(const Config& cfg, std::ostream& out);
void cmd_compare(const Config& cfg, std::ostream& out);

// Full CLI: parses argv, applies config precedence and maps exceptions to
// exit codes (0 ok, 2 config, 3 I/O, 4 numeric).
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace rssiloc
