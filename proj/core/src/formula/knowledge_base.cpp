#include "cce/formula/knowledge_base.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "cce/error.hpp"
#include "cce/formula/retrieval.hpp"
#include "cce/util/digest.hpp"

namespace cce::formula {

std::string to_string(LawDomain d) {
  switch (d) {
    case LawDomain::kMechanics: return "mechanics";
    case LawDomain::kOptics: return "optics";
    case LawDomain::kThermal: return "thermal";
    case LawDomain::kMaterial: return "material";
  }
  return "";
}

LawDomain law_domain_from_string(std::string_view s) {
  for (auto d : {LawDomain::kMechanics, LawDomain::kOptics, LawDomain::kThermal, LawDomain::kMaterial})
    if (to_string(d) == s) return d;
  throw KnowledgeBaseError("unknown law domain '" + std::string(s) + "'");
}

LawTaxonomy::LawTaxonomy(std::vector<PhysicalLaw> laws) : laws_(std::move(laws)) {
  std::set<std::string> ids;
  for (const auto& law : laws_)
    if (!ids.insert(law.id).second) throw KnowledgeBaseError("duplicate law id '" + law.id + "'");
}

LawTaxonomy LawTaxonomy::from_json(const nlohmann::json& j) {
  const auto& arr = j.is_object() ? j.at("laws") : j;
  std::vector<PhysicalLaw> laws;
  for (const auto& r : arr) {
    laws.push_back({r.at("id").get<std::string>(),
                    law_domain_from_string(r.at("domain").get<std::string>()),
                    r.at("name").get<std::string>(), r.value("description", std::string())});
  }
  return LawTaxonomy(std::move(laws));
}

LawTaxonomy LawTaxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw KnowledgeBaseError("cannot open law taxonomy " + path.string());
  return from_json(nlohmann::json::parse(in));
}

const PhysicalLaw* LawTaxonomy::find(std::string_view id) const {
  for (const auto& law : laws_)
    if (law.id == id) return &law;
  return nullptr;
}

const PhysicalLaw& LawTaxonomy::at(std::string_view id) const {
  if (const auto* law = find(id)) return *law;
  throw KnowledgeBaseError("unknown law '" + std::string(id) + "'");
}

double CorpusStats::idf(std::string_view trigram) const {
  std::size_t df = 0;
  if (auto it = document_frequency.find(trigram); it != document_frequency.end()) df = it->second;
  return std::log((1.0 + static_cast<double>(documents)) / (1.0 + static_cast<double>(df))) + 1.0;
}

namespace {

std::shared_ptr<const CorpusStats> compute_stats(const std::vector<Formula>& formulas) {
  auto stats = std::make_shared<CorpusStats>();
  stats->documents = formulas.size();
  for (const auto& f : formulas)
    for (const auto& [gram, count] : trigram_counts(retrieval_document(f))) {
      (void)count;
      ++stats->document_frequency[gram];
    }
  return stats;
}

std::string compute_digest(const std::vector<Formula>& formulas) {
  nlohmann::json all = nlohmann::json::array();
  for (const auto& f : formulas) all.push_back(formula_to_json(f));
  return json_digest(all);
}

void merge_unique(std::vector<std::string>& into, const std::vector<std::string>& extra) {
  for (const auto& s : extra)
    if (std::find(into.begin(), into.end(), s) == into.end()) into.push_back(s);
}

Formula formula_from_record(const nlohmann::json& r, const LawTaxonomy* taxonomy) {
  const std::string id = r.at("id").get<std::string>();
  Formula f = parse_formula(r.at("dsl").get<std::string>());
  f.id = id;
  f.name = r.value("name", id);
  std::vector<std::string> aliases = r.value("aliases", std::vector<std::string>{});
  merge_unique(aliases, f.aliases);
  f.aliases = std::move(aliases);
  std::vector<std::string> laws = r.value("laws", std::vector<std::string>{});
  merge_unique(laws, f.law_tags);
  f.law_tags = std::move(laws);
  f.description = r.value("description", std::string());
  if (taxonomy)
    for (const auto& law : f.law_tags)
      if (!taxonomy->find(law))
        throw KnowledgeBaseError("formula '" + id + "' tagged with unknown law '" + law + "'");
  return f;
}

}  // namespace

KnowledgeBase::KnowledgeBase(std::vector<Formula> formulas) {
  std::set<std::string> ids;
  for (const auto& f : formulas)
    if (!ids.insert(f.id).second) throw KnowledgeBaseError("duplicate formula id '" + f.id + "'");
  stats_ = compute_stats(formulas);
  digest_ = compute_digest(formulas);
  formulas_ = std::make_shared<const std::vector<Formula>>(std::move(formulas));
}

KnowledgeBase::KnowledgeBase(std::shared_ptr<const std::vector<Formula>> formulas,
                             std::shared_ptr<const CorpusStats> stats)
    : formulas_(std::move(formulas)), stats_(std::move(stats)), digest_(compute_digest(*formulas_)) {}

KnowledgeBase KnowledgeBase::from_json(const nlohmann::json& records, const LawTaxonomy* taxonomy) {
  if (!records.is_array()) throw KnowledgeBaseError("knowledge base must be a JSON array");
  std::vector<Formula> formulas;
  for (const auto& r : records) {
    try {
      formulas.push_back(formula_from_record(r, taxonomy));
    } catch (const KnowledgeBaseError&) {
      throw;
    } catch (const std::exception& e) {
      throw KnowledgeBaseError("record '" + r.value("id", std::string("?")) + "': " + e.what());
    }
  }
  return KnowledgeBase(std::move(formulas));
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path, const LawTaxonomy* taxonomy) {
  std::ifstream in(path);
  if (!in) throw KnowledgeBaseError("cannot open knowledge base " + path.string());
  return from_json(nlohmann::json::parse(in), taxonomy);
}

KnowledgeBase KnowledgeBase::with_appended(std::vector<Formula> extra) const {
  auto all = std::make_shared<std::vector<Formula>>(*formulas_);
  std::set<std::string> ids;
  for (const auto& f : *all) ids.insert(f.id);
  for (auto& f : extra) {
    if (!ids.insert(f.id).second) throw KnowledgeBaseError("duplicate formula id '" + f.id + "'");
    all->push_back(std::move(f));
  }
  return KnowledgeBase(std::move(all), stats_);
}

const Formula* KnowledgeBase::find(std::string_view id) const {
  for (const auto& f : *formulas_)
    if (f.id == id) return &f;
  return nullptr;
}

std::vector<std::string> validate_knowledge_base(const nlohmann::json& records,
                                                 const LawTaxonomy& taxonomy) {
  std::vector<std::string> problems;
  if (!records.is_array()) return {"knowledge base must be a JSON array"};
  std::set<std::string> ids;
  std::set<std::string> domains;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string where = "record " + std::to_string(i);
    if (!r.is_object() || !r.contains("id") || !r.contains("dsl")) {
      problems.push_back(where + ": needs at least {id, dsl}");
      continue;
    }
    const std::string id = r.at("id").get<std::string>();
    if (!ids.insert(id).second) problems.push_back(where + ": duplicate id '" + id + "'");
    try {
      const Formula f = formula_from_record(r, &taxonomy);
      if (f.law_tags.empty()) problems.push_back(where + " ('" + id + "'): no law tags");
      for (const auto& law : f.law_tags) domains.insert(to_string(taxonomy.at(law).domain));
    } catch (const std::exception& e) {
      problems.push_back(where + " ('" + id + "'): " + e.what());
    }
  }
  for (const char* d : {"mechanics", "optics", "thermal", "material"})
    if (!domains.count(d)) problems.push_back(std::string("no formula covers domain '") + d + "'");
  return problems;
}

nlohmann::json formula_to_json(const Formula& f) {
  return {{"id", f.id},         {"name", f.name},
          {"aliases", f.aliases}, {"laws", f.law_tags},
          {"description", f.description}, {"dsl", to_dsl(f)}};
}

}  // namespace cce::formula
