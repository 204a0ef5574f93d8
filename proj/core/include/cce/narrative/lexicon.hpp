#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cce/event/continuity.hpp"
#include "cce/formula/dimension.hpp"

namespace cce::narrative {

/// Words that contradict a declared direction of change, e.g. "freezing"
/// under rising temperature. `stems` are matched case-insensitively when
/// validating generated text; `words` go into the negative prompt.
struct DirectionWords {
  std::vector<std::string> words;
  std::vector<std::string> stems;
};

/// Entries are keyed by symbol name or, failing that, by the SI unit string
/// of the symbol's dimension ("K" for any temperature).
class DirectionLexicon {
 public:
  DirectionLexicon() = default;
  static DirectionLexicon from_json(const nlohmann::json& j);
  static DirectionLexicon load(const std::filesystem::path& path);

  /// Words forbidden by declaring `symbol` (of dimension `dim`) to move in
  /// direction `m`; empty for kFree or unknown symbols.
  const DirectionWords* lookup(const std::string& symbol, const formula::Dimension& dim,
                               event::Monotone m) const;

 private:
  std::map<std::string, std::map<event::Monotone, DirectionWords>> by_key_;
};

struct Forbidden {
  std::vector<std::string> words;
  std::vector<std::string> stems;
};

/// Union over all declarations, deduplicated, in first-seen order.
Forbidden forbidden_for(const event::MonotoneDecls& decls,
                        const std::map<std::string, formula::Dimension>& dims,
                        const DirectionLexicon& lexicon);

struct Lexicon {
  std::vector<std::string> connectives = {"then", "as a result", "gradually", "until", "causing"};
  std::vector<std::string> negative_phrases;
  DirectionLexicon direction;

  /// Reads `negative_lexicon.txt` (one phrase per line, '#' comments) and
  /// `direction_lexicon.json` from a data directory.
  static Lexicon load(const std::filesystem::path& data_dir);
};

std::vector<std::string> read_phrase_list(const std::filesystem::path& path);

}  // namespace cce::narrative
