#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/formula/formula.hpp"

namespace cce::formula {

enum class LawDomain { kMechanics, kOptics, kThermal, kMaterial };

std::string to_string(LawDomain d);
LawDomain law_domain_from_string(std::string_view s);

struct PhysicalLaw {
  std::string id;
  LawDomain domain = LawDomain::kMechanics;
  std::string name;
  std::string description;
};

/// The closed set of laws formulas are tagged with. Ids are unique.
class LawTaxonomy {
 public:
  LawTaxonomy() = default;
  explicit LawTaxonomy(std::vector<PhysicalLaw> laws);

  static LawTaxonomy from_json(const nlohmann::json& j);
  static LawTaxonomy load(const std::filesystem::path& path);

  const std::vector<PhysicalLaw>& laws() const { return laws_; }
  const PhysicalLaw* find(std::string_view id) const;
  const PhysicalLaw& at(std::string_view id) const;

 private:
  std::vector<PhysicalLaw> laws_;
};

/// Document statistics for the trigram TF-IDF term of retrieval. Fixed when
/// the knowledge base is built; appended formulas reuse them.
struct CorpusStats {
  std::size_t documents = 0;
  std::map<std::string, std::size_t, std::less<>> document_frequency;

  double idf(std::string_view trigram) const;
};

/// Immutable collection of formulas, shareable across threads.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(std::vector<Formula> formulas);

  /// Records are `{id, name, aliases, laws, dsl[, description]}`. Rejects
  /// duplicate ids and (when `taxonomy` is given) unknown law ids.
  static KnowledgeBase from_json(const nlohmann::json& records,
                                 const LawTaxonomy* taxonomy = nullptr);
  static KnowledgeBase load(const std::filesystem::path& path,
                            const LawTaxonomy* taxonomy = nullptr);

  /// New knowledge base with `extra` appended. Corpus statistics are
  /// inherited unchanged, so existing formulas keep their scores.
  KnowledgeBase with_appended(std::vector<Formula> extra) const;

  const std::vector<Formula>& formulas() const { return *formulas_; }
  const Formula* find(std::string_view id) const;
  bool empty() const { return !formulas_ || formulas_->empty(); }
  std::size_t size() const { return formulas_ ? formulas_->size() : 0; }
  const CorpusStats& stats() const { return *stats_; }
  /// Digest over the canonical DSL of every formula plus metadata.
  const std::string& digest() const { return digest_; }

 private:
  KnowledgeBase(std::shared_ptr<const std::vector<Formula>> formulas,
                std::shared_ptr<const CorpusStats> stats);

  std::shared_ptr<const std::vector<Formula>> formulas_ =
      std::make_shared<const std::vector<Formula>>();
  std::shared_ptr<const CorpusStats> stats_ = std::make_shared<const CorpusStats>();
  std::string digest_;
};

/// Every problem found in a knowledge-base file; empty when valid.
std::vector<std::string> validate_knowledge_base(const nlohmann::json& records,
                                                 const LawTaxonomy& taxonomy);

nlohmann::json formula_to_json(const Formula& f);

}  // namespace cce::formula
