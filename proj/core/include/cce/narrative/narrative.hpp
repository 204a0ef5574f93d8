#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/backends/backend.hpp"
#include "cce/event/boundaries.hpp"
#include "cce/narrative/lexicon.hpp"
#include "cce/scene/graph.hpp"
#include "cce/scene/update.hpp"

namespace cce::narrative {

using Span = std::pair<std::size_t, std::size_t>;

struct EventNarrative {
  int t_index = 1;
  std::string text;
  /// SHA-256 of the previous event's text; empty for the first event.
  std::string revision_of;
  /// Half-open character ranges of `text` that differ from the previous text.
  std::vector<Span> changed_spans;

  nlohmann::json to_json() const;
  static EventNarrative from_json(const nlohmann::json& j);
  bool operator==(const EventNarrative&) const = default;
};

struct PromptPair {
  std::string positive;
  std::string negative;
  std::vector<std::string> connectives_used;
  std::size_t token_estimate = 0;

  nlohmann::json to_json() const;
  static PromptPair from_json(const nlohmann::json& j);
  bool operator==(const PromptPair&) const = default;
};

struct PromptEmbedding {
  std::vector<double> positive_vec;
  std::vector<double> negative_vec;
  /// [positive; negative].
  std::vector<double> concatenated;
};

/// Words plus punctuation marks.
std::size_t estimate_tokens(std::string_view text);
/// Comma-separated clauses, trimmed, inner whitespace collapsed, empties dropped.
std::vector<std::string> split_clauses(std::string_view text);
/// Single span between the common prefix and common suffix, in `after`
/// coordinates; empty when the texts are equal.
std::vector<Span> changed_spans(std::string_view before, std::string_view after);
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Names that are missing and forbidden stems that are present.
std::vector<std::string> narrative_problems(std::string_view text, const std::vector<std::string>& surface_names,
                                            const std::vector<std::string>& forbidden_stems);

struct NarrativeOptions {
  std::string description;
  std::vector<std::string> forbidden_stems;
  /// Edit distance above this fraction of the previous length is reported
  /// as a quality warning when the delta touches a single node.
  double minimality_fraction = 0.4;
  std::vector<std::string>* warnings = nullptr;
};

/// w_1 for the first event, or an independent description of any event.
/// Validated like revisions.
EventNarrative describe(const event::PhysicalCondition& cond, const scene::SceneGraph& graph,
                        backends::ReasoningBackend& reasoner, const NarrativeOptions& options);

/// w_t from w_{t-1} and the delta that produced graph. An empty delta
/// returns the previous text unchanged without a backend call. Output must
/// name every node and avoid forbidden stems; one retry with the problems
/// attached, then ValidationError.
EventNarrative revise(const EventNarrative& prev, const event::PhysicalCondition& cond,
                      const scene::GraphDelta& delta, const scene::SceneGraph& graph,
                      backends::ReasoningBackend& reasoner, const NarrativeOptions& options);

struct CondenseOptions {
  std::size_t limit = 226;
  std::vector<std::string> connectives = Lexicon{}.connectives;
  std::vector<std::string> negative_phrases;
  std::vector<std::string> forbidden_words;
};

/// Merges narratives in event order. Clauses already emitted are skipped;
/// each event's new clauses follow the next connective. Over budget, whole
/// events are dropped starting from the least-changed (the first event is
/// never dropped). Clauses containing a forbidden word are left out of the
/// positive prompt.
PromptPair condense(const std::vector<EventNarrative>& narratives, const CondenseOptions& options);

PromptEmbedding embed_pair(const PromptPair& pair, backends::TextEncoderBackend& encoder);

}  // namespace cce::narrative
