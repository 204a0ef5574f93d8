#include "cce/narrative/lexicon.hpp"

#include <algorithm>
#include <fstream>

#include "cce/error.hpp"

namespace cce::narrative {

using nlohmann::json;

DirectionLexicon DirectionLexicon::from_json(const json& j) {
  DirectionLexicon lex;
  for (const auto& entry : j.at("entries")) {
    std::map<event::Monotone, DirectionWords> dirs;
    for (auto m : {event::Monotone::kIncreasing, event::Monotone::kDecreasing}) {
      const std::string name = event::to_string(m);
      if (!entry.contains(name)) continue;
      const auto& d = entry.at(name);
      dirs[m] = {d.value("words", std::vector<std::string>{}), d.value("stems", std::vector<std::string>{})};
    }
    for (const auto& key : entry.at("keys")) lex.by_key_[key.get<std::string>()] = dirs;
  }
  return lex;
}

DirectionLexicon DirectionLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open direction lexicon " + path.string());
  return from_json(json::parse(in));
}

const DirectionWords* DirectionLexicon::lookup(const std::string& symbol, const formula::Dimension& dim,
                                               event::Monotone m) const {
  if (m == event::Monotone::kFree) return nullptr;
  auto it = by_key_.find(symbol);
  if (it == by_key_.end() && !(dim == formula::Dimension::none())) it = by_key_.find(dim.to_unit_string());
  if (it == by_key_.end()) return nullptr;
  auto d = it->second.find(m);
  return d == it->second.end() ? nullptr : &d->second;
}

Forbidden forbidden_for(const event::MonotoneDecls& decls, const std::map<std::string, formula::Dimension>& dims,
                        const DirectionLexicon& lexicon) {
  Forbidden out;
  auto push = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& [symbol, m] : decls) {
    auto d = dims.find(symbol);
    const auto* words = lexicon.lookup(symbol, d == dims.end() ? formula::Dimension::none() : d->second, m);
    if (!words) continue;
    for (const auto& w : words->words) push(out.words, w);
    for (const auto& s : words->stems) push(out.stems, s);
  }
  return out;
}

std::vector<std::string> read_phrase_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open phrase list " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

Lexicon Lexicon::load(const std::filesystem::path& data_dir) {
  Lexicon lex;
  lex.negative_phrases = read_phrase_list(data_dir / "negative_lexicon.txt");
  lex.direction = DirectionLexicon::load(data_dir / "direction_lexicon.json");
  return lex;
}

}  // namespace cce::narrative
