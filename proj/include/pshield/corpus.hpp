// Labeled command datasets: synthetic generation with the obfuscation
// catalogue, JSONL persistence, ingest and class balancing.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pshield/random.hpp"

namespace pshield {

enum class Origin { generated, ingested };
std::string_view to_string(Origin origin);

struct LabeledCommand {
  std::string command;
  bool malicious = false;
  Origin origin = Origin::generated;
  // Obfuscation method ids in the order they were applied.
  std::vector<int> obfuscations;

  friend bool operator==(const LabeledCommand&, const LabeledCommand&) = default;
};

inline constexpr int kObfuscationMethods = 11;

// Method ids are 1..11.
std::string_view obfuscation_name(int method);

// Seeded rewrite of one command line. nullopt when the method has nothing
// to act on (no flags for method 2, no string literal for method 5, ...).
// Outputs never contain a line break.
std::optional<std::string> apply_obfuscation(int method, std::string_view cmd, Rng& rng);

struct TemplateBank {
  std::string version;
  std::vector<std::string> benign;
  std::vector<std::string> malicious;
  std::map<std::string, std::vector<std::string>> fillers;

  // Throws std::invalid_argument on an unknown placeholder or empty bank.
  static TemplateBank parse(std::string version, std::string_view benign_text,
                            std::string_view malicious_text, std::string_view fillers_text);
  // Banks compiled into the library; throws for an unknown version.
  static const TemplateBank& builtin(std::string_view version = "v1");
};

// Placeholders every bank may use without declaring them.
inline constexpr std::array<std::string_view, 10> kBuiltinPlaceholders = {
    "num", "port", "ip", "var", "dga", "url", "b64", "enc", "blob", "guid"};

struct GenerateParams {
  std::uint64_t seed = 1;
  std::size_t n_clean = 0;
  std::size_t n_malicious = 0;
  // Relative weight of each method 1..11 when sampling obfuscations.
  std::array<double, kObfuscationMethods> obfuscation_mix = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  std::size_t min_obfuscations = 1;
  std::size_t max_obfuscations = 4;
  std::string template_bank = "v1";

  friend bool operator==(const GenerateParams&, const GenerateParams&) = default;
};

struct CorpusManifest {
  GenerateParams params;
  std::size_t clean = 0;
  std::size_t malicious = 0;
  std::uint64_t corpus_hash = 0;  // FNV-1a of the JSONL bytes

  std::string to_json() const;
  static CorpusManifest from_json(const std::string& json);
};

struct GeneratedCorpus {
  std::vector<LabeledCommand> commands;
  CorpusManifest manifest;
};

GeneratedCorpus generate_corpus(const GenerateParams& params);

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// {"command": str, "label": "malicious"|"clean", "origin": str, "obf": [ints]}
std::string to_jsonl_line(const LabeledCommand& cmd);
std::string to_jsonl(std::span<const LabeledCommand> corpus);
// Throws CorpusError naming the 1-based line of the first bad record.
std::vector<LabeledCommand> parse_jsonl(std::istream& in);
std::vector<LabeledCommand> load_jsonl(const std::filesystem::path& path);
void save_jsonl(std::span<const LabeledCommand> corpus, const std::filesystem::path& path);

// One command per non-blank line, all with the given label.
std::vector<LabeledCommand> ingest_lines(std::istream& in, bool malicious);

// Originals first, then each malicious item factor - 1 more times.
std::vector<LabeledCommand> balance_training_set(std::span<const LabeledCommand> corpus,
                                                 std::size_t duplication_factor = 8);

}  // namespace pshield
