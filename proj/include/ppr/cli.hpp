#pragma once

// Command-line front end: `ppr <verb> [flags]`.
//
// Exit codes: 0 success, 1 computation or IO failure, 2 missing or unknown
// verb or unknown flag, 3 missing required flag or invalid value, 4
// unparseable number.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ppr/error.hpp"
#include "ppr/solver.hpp"

namespace ppr {

struct Command {
  std::string verb;
  std::map<std::string, std::string> flags;  // long name without dashes -> raw value

  bool has(const std::string& name) const { return flags.count(name) > 0; }
  const std::string& get(const std::string& name) const;
};

class UsageError : public Error {
 public:
  UsageError(int code, const std::string& what) : Error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

// args excludes the program name. Throws UsageError; a help request comes
// back as verb "help" with the text in flags["text"].
Command parse_args(const std::vector<std::string>& args);

// Runs a parsed command; returns the exit code.
int run_command(const Command& cmd, std::ostream& out, std::ostream& err);

// parse_args + run_command with exceptions mapped to exit codes.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

void emit_fit(const FitResult& result, const std::filesystem::path& path);
FitResult read_fit(const std::filesystem::path& path);

}  // namespace ppr
