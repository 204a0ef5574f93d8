#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cce/formula/knowledge_base.hpp"

namespace cce::backends {
class ReasoningBackend;
}

namespace cce::formula {

/// Lowercase, non-alphanumerics folded to single spaces, trimmed.
std::string normalize_text(std::string_view text);
/// Distinct word tokens of length >= 2 after normalization.
std::vector<std::string> word_tokens(std::string_view text);
/// Character trigram counts of " " + normalize_text(text) + " ".
std::map<std::string, double, std::less<>> trigram_counts(std::string_view text);

/// The text indexed by the trigram term: name followed by description.
std::string retrieval_document(const Formula& f);

/// |query tokens ∩ (name ∪ aliases) tokens| / |query tokens|.
double token_overlap(std::string_view query, const Formula& f);
double trigram_cosine(std::string_view query, const Formula& f,
                      const CorpusStats& stats);

struct RetrievalOptions {
  double tau_match = 0.35;
  double overlap_weight = 0.5;
  double cosine_weight = 0.5;
};

struct ScoredFormula {
  const Formula* formula = nullptr;
  double score = 0.0;
  double overlap = 0.0;
  double cosine = 0.0;
  /// Index into the query list that produced `score`.
  std::size_t best_query = 0;
};

struct RetrievalResult {
  std::vector<ScoredFormula> ranked;
  /// True when no candidate reaches tau_match (including no candidates).
  bool below_threshold = true;
  double best_score = 0.0;
};

/// Score of one formula: the best mixture score over all query names.
ScoredFormula score_formula(std::span<const std::string> query_names,
                            const Formula& f, const CorpusStats& stats,
                            const RetrievalOptions& options = {});

/// Top-k formulas tagged with `law_id`, score descending, id ascending on
/// ties. Returns fewer than k when fewer formulas carry the law.
RetrievalResult retrieve_topk(const KnowledgeBase& kb,
                              std::span<const std::string> query_names,
                              std::string_view law_id, std::size_t k,
                              const RetrievalOptions& options = {});

/// Regenerates formula names from the law's candidate formulas through the
/// reasoning backend when retrieval found no direct match. One instance
/// tracks the round budget of one pipeline run.
class RetrievalFallback {
 public:
  explicit RetrievalFallback(int max_rounds = 2) : max_rounds_(max_rounds) {}

  std::vector<std::string> regenerate(const PhysicalLaw& law,
                                      std::span<const Formula* const> candidates,
                                      std::string_view description,
                                      backends::ReasoningBackend& reasoner);

  int rounds_used() const { return rounds_used_; }
  int max_rounds() const { return max_rounds_; }

 private:
  int max_rounds_;
  int rounds_used_ = 0;
};

}  // namespace cce::formula
