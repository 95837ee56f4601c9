// JSON config files for the command-line tool.
//
// A config is a JSON object that is either flat ({"epochs": 4}) or holds one
// object per subcommand ({"train": {"epochs": 4}}); both forms may be mixed.
// Keys are flag names without the leading dashes. Flags given on the command
// line win over the file.
#pragma once

#include <string>
#include <vector>

namespace pshield::cli {

// Returns `args` with the config options for `subcommand` appended. Scalars
// become "--key value", true becomes "--key", false is dropped and arrays
// repeat the flag. Throws std::runtime_error on malformed JSON or a value
// that is neither scalar nor an array of scalars.
std::vector<std::string> merge_config_args(const std::vector<std::string>& args,
                                           const std::string& subcommand,
                                           const std::string& config_json);

// Value of "--config" in args (either "--config path" or "--config=path"),
// or empty.
std::string find_config_path(const std::vector<std::string>& args);

}  // namespace pshield::cli
