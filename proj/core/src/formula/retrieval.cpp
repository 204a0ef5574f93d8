#include "cce/formula/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "cce/backends/schema.hpp"
#include "cce/error.hpp"

namespace cce::formula {

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(uc)));
    } else if (c != '\'') {
      // Apostrophes are dropped so "Snell's" reads as "snells".
      pending_space = true;
    }
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view text) {
  const std::string norm = normalize_text(text);
  std::vector<std::string> tokens;
  std::set<std::string> seen;
  std::size_t b = 0;
  while (b < norm.size()) {
    std::size_t e = norm.find(' ', b);
    if (e == std::string::npos) e = norm.size();
    std::string tok = norm.substr(b, e - b);
    if (tok.size() >= 2 && seen.insert(tok).second) tokens.push_back(std::move(tok));
    b = e + 1;
  }
  return tokens;
}

std::map<std::string, double, std::less<>> trigram_counts(std::string_view text) {
  const std::string padded = " " + normalize_text(text) + " ";
  std::map<std::string, double, std::less<>> counts;
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) counts[padded.substr(i, 3)] += 1.0;
  return counts;
}

std::string retrieval_document(const Formula& f) {
  return f.description.empty() ? f.name : f.name + " " + f.description;
}

double token_overlap(std::string_view query, const Formula& f) {
  const auto q = word_tokens(query);
  if (q.empty()) return 0.0;
  std::set<std::string> vocab;
  for (auto& t : word_tokens(f.name)) vocab.insert(t);
  for (const auto& a : f.aliases)
    for (auto& t : word_tokens(a)) vocab.insert(t);
  std::size_t hits = 0;
  for (const auto& t : q) hits += vocab.count(t);
  return static_cast<double>(hits) / static_cast<double>(q.size());
}

double trigram_cosine(std::string_view query, const Formula& f, const CorpusStats& stats) {
  const auto q = trigram_counts(query);
  const auto d = trigram_counts(retrieval_document(f));
  double dot = 0.0, nq = 0.0, nd = 0.0;
  for (const auto& [g, c] : q) {
    const double w = c * stats.idf(g);
    nq += w * w;
    if (auto it = d.find(g); it != d.end()) dot += w * it->second * stats.idf(g);
  }
  for (const auto& [g, c] : d) {
    const double w = c * stats.idf(g);
    nd += w * w;
  }
  if (nq == 0.0 || nd == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nq) * std::sqrt(nd)), 0.0, 1.0);
}

ScoredFormula score_formula(std::span<const std::string> query_names, const Formula& f,
                            const CorpusStats& stats, const RetrievalOptions& options) {
  ScoredFormula best{&f, 0.0, 0.0, 0.0, 0};
  for (std::size_t i = 0; i < query_names.size(); ++i) {
    const double overlap = token_overlap(query_names[i], f);
    const double cosine = trigram_cosine(query_names[i], f, stats);
    const double score = options.overlap_weight * overlap + options.cosine_weight * cosine;
    if (i == 0 || score > best.score) best = {&f, score, overlap, cosine, i};
  }
  return best;
}

RetrievalResult retrieve_topk(const KnowledgeBase& kb, std::span<const std::string> query_names,
                              std::string_view law_id, std::size_t k,
                              const RetrievalOptions& options) {
  if (kb.empty()) throw EmptyKnowledgeBaseError("retrieve_topk on an empty knowledge base");
  if (k == 0) throw PreconditionError("retrieve_topk: k must be >= 1");
  RetrievalResult result;
  for (const auto& f : kb.formulas()) {
    if (std::find(f.law_tags.begin(), f.law_tags.end(), law_id) == f.law_tags.end()) continue;
    result.ranked.push_back(score_formula(query_names, f, kb.stats(), options));
  }
  std::sort(result.ranked.begin(), result.ranked.end(), [](const ScoredFormula& a, const ScoredFormula& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.formula->id < b.formula->id;
  });
  if (result.ranked.size() > k) result.ranked.resize(k);
  result.best_score = result.ranked.empty() ? 0.0 : result.ranked.front().score;
  result.below_threshold = result.ranked.empty() || result.best_score < options.tau_match;
  return result;
}

std::vector<std::string> RetrievalFallback::regenerate(const PhysicalLaw& law,
                                                       std::span<const Formula* const> candidates,
                                                       std::string_view description,
                                                       backends::ReasoningBackend& reasoner) {
  if (candidates.empty())
    throw FallbackExhaustedError("no candidate formulas for law '" + law.id + "' to regenerate names from");
  if (rounds_used_ >= max_rounds_)
    throw FallbackExhaustedError("formula-name regeneration exhausted after " +
                                 std::to_string(rounds_used_) + " rounds");
  ++rounds_used_;
  nlohmann::json names = nlohmann::json::array();
  for (const Formula* f : candidates) names.push_back(f->name);
  try {
    const auto out = backends::reason_task(
        reasoner, backends::Task::kRegenerateFormulaNames,
        {{"description", description}, {"law", law.id}, {"law_name", law.name}, {"candidates", names}});
    return out.at("names").get<std::vector<std::string>>();
  } catch (const BackendError& e) {
    throw BackendError("fallback round " + std::to_string(rounds_used_) + ": " + e.what());
  }
}

}  // namespace cce::formula
