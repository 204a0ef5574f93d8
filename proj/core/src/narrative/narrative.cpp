#include "cce/narrative/narrative.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "cce/backends/schema.hpp"
#include "cce/error.hpp"
#include "cce/util/digest.hpp"

namespace cce::narrative {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  return lower(haystack).find(lower(needle)) != std::string::npos;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

json change_summary(const scene::GraphDelta& delta, const scene::SceneGraph& graph) {
  auto label = [&](const std::string& id) {
    const auto* n = graph.find_node(id);
    return n ? n->label : id;
  };
  json changes = json::array();
  for (const auto& e : delta.entries) {
    json c = {{"symbol", e.provenance.symbol}, {"object", e.provenance.object}, {"change", e.provenance.change}};
    if (const auto* s = std::get_if<scene::SetAttribute>(&e.op)) {
      c.update({{"kind", "set_attribute"}, {"node", s->node}, {"label", label(s->node)}, {"attribute", s->attribute},
                {"old", s->old_value ? scene::attribute_to_json(*s->old_value) : json(nullptr)},
                {"new", scene::attribute_to_json(s->new_value)}});
    } else if (const auto* r = std::get_if<scene::Relabel>(&e.op)) {
      c.update({{"kind", "relabel"}, {"node", r->node}, {"label", r->new_label}, {"attribute", "label"},
                {"old", r->old_label}, {"new", r->new_label}});
    } else if (const auto* a = std::get_if<scene::AddEdge>(&e.op)) {
      c.update({{"kind", "add_edge"}, {"node", a->edge.source}, {"label", label(a->edge.source)},
                {"relation", a->edge.relation}, {"target_label", label(a->edge.target)}});
    } else if (const auto* d = std::get_if<scene::RemoveEdge>(&e.op)) {
      c.update({{"kind", "remove_edge"}, {"node", d->edge.source}, {"label", label(d->edge.source)},
                {"relation", d->edge.relation}, {"target_label", label(d->edge.target)}});
    } else {
      const auto& n = std::get<scene::AddNode>(e.op).node;
      c.update({{"kind", "add_node"}, {"node", n.id}, {"label", n.label}, {"attribute", "label"}, {"new", n.label}});
    }
    changes.push_back(std::move(c));
  }
  return changes;
}

/// Calls the backend, validates, retries once with the problems attached.
std::string generate_validated(backends::ReasoningBackend& reasoner, backends::Task task, json payload,
                               const std::vector<std::string>& names, const std::vector<std::string>& stems) {
  std::vector<std::string> problems;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (!problems.empty()) payload["violation"] = join(problems, "; ");
    const std::string text = backends::reason_task(reasoner, task, payload).at("text").get<std::string>();
    problems = narrative_problems(text, names, stems);
    if (problems.empty()) return text;
  }
  throw ValidationError("narrative rejected after retry: " + join(problems, "; "));
}

}  // namespace

json EventNarrative::to_json() const {
  json spans = json::array();
  for (const auto& [s, e] : changed_spans) spans.push_back({s, e});
  return {{"t_index", t_index},
          {"text", text},
          {"revision_of", revision_of.empty() ? json(nullptr) : json(revision_of)},
          {"changed_spans", spans}};
}

EventNarrative EventNarrative::from_json(const json& j) {
  EventNarrative n;
  n.t_index = j.at("t_index").get<int>();
  n.text = j.at("text").get<std::string>();
  if (!j.at("revision_of").is_null()) n.revision_of = j.at("revision_of").get<std::string>();
  for (const auto& s : j.at("changed_spans")) n.changed_spans.emplace_back(s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>());
  return n;
}

json PromptPair::to_json() const {
  return {{"positive", positive},
          {"negative", negative},
          {"connectives_used", connectives_used},
          {"token_estimate", token_estimate}};
}

PromptPair PromptPair::from_json(const json& j) {
  return {j.at("positive").get<std::string>(), j.at("negative").get<std::string>(),
          j.at("connectives_used").get<std::vector<std::string>>(), j.at("token_estimate").get<std::size_t>()};
}

std::size_t estimate_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || c == '\'' || c == '-') {
      if (!in_word) ++n;
      in_word = true;
    } else {
      in_word = false;
      if (std::ispunct(uc)) ++n;
    }
  }
  return n;
}

std::vector<std::string> split_clauses(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::string clean;
    bool space = false;
    for (char c : cur) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        space = !clean.empty();
      } else {
        if (space) clean.push_back(' ');
        space = false;
        clean.push_back(c);
      }
    }
    if (!clean.empty()) out.push_back(std::move(clean));
    cur.clear();
  };
  for (char c : text) {
    if (c == ',')
      flush();
    else
      cur.push_back(c);
  }
  flush();
  return out;
}

std::vector<Span> changed_spans(std::string_view before, std::string_view after) {
  if (before == after) return {};
  std::size_t p = 0;
  while (p < before.size() && p < after.size() && before[p] == after[p]) ++p;
  std::size_t s = 0;
  while (s < before.size() - p && s < after.size() - p &&
         before[before.size() - 1 - s] == after[after.size() - 1 - s])
    ++s;
  return {{p, after.size() - s}};
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::vector<std::string> narrative_problems(std::string_view text, const std::vector<std::string>& surface_names,
                                            const std::vector<std::string>& forbidden_stems) {
  std::vector<std::string> problems;
  for (const auto& n : surface_names)
    if (!contains_ci(text, n)) problems.push_back("missing mention of '" + n + "'");
  for (const auto& s : forbidden_stems)
    if (contains_ci(text, s)) problems.push_back("forbidden word stem '" + s + "'");
  return problems;
}

EventNarrative describe(const event::PhysicalCondition& cond, const scene::SceneGraph& graph,
                        backends::ReasoningBackend& reasoner, const NarrativeOptions& options) {
  json payload = {{"description", options.description},
                  {"t_index", cond.t_index},
                  {"graph", graph.to_json()},
                  {"surface_names", graph.surface_names()},
                  {"forbidden", options.forbidden_stems}};
  EventNarrative n;
  n.t_index = cond.t_index;
  n.text = generate_validated(reasoner, backends::Task::kDescribeEvent, std::move(payload), graph.surface_names(),
                              options.forbidden_stems);
  n.changed_spans = {{0, n.text.size()}};
  return n;
}

EventNarrative revise(const EventNarrative& prev, const event::PhysicalCondition& cond, const scene::GraphDelta& delta,
                      const scene::SceneGraph& graph, backends::ReasoningBackend& reasoner,
                      const NarrativeOptions& options) {
  if (prev.t_index != cond.t_index - 1)
    throw PreconditionError("revise: narrative " + std::to_string(prev.t_index) + " does not precede event " +
                            std::to_string(cond.t_index));
  if (graph.t_index != cond.t_index)
    throw PreconditionError("revise: graph belongs to event " + std::to_string(graph.t_index));
  EventNarrative out;
  out.t_index = cond.t_index;
  out.revision_of = sha256_hex(prev.text);
  if (delta.empty()) {
    out.text = prev.text;
    return out;
  }
  json payload = {{"description", options.description},
                  {"t_index", cond.t_index},
                  {"previous_text", prev.text},
                  {"changes", change_summary(delta, graph)},
                  {"surface_names", graph.surface_names()},
                  {"forbidden", options.forbidden_stems}};
  out.text = generate_validated(reasoner, backends::Task::kReviseNarrative, std::move(payload), graph.surface_names(),
                                options.forbidden_stems);
  out.changed_spans = changed_spans(prev.text, out.text);
  if (options.warnings) {
    std::set<std::string> touched;
    for (const auto& [id, node] : graph.nodes)
      if (delta.touches(id)) touched.insert(id);
    const std::size_t dist = edit_distance(prev.text, out.text);
    if (touched.size() == 1 && static_cast<double>(dist) > options.minimality_fraction * static_cast<double>(prev.text.size()))
      options.warnings->push_back("event " + std::to_string(cond.t_index) + ": revision edit distance " +
                                  std::to_string(dist) + " exceeds " + std::to_string(options.minimality_fraction) +
                                  " of the previous text");
  }
  return out;
}

PromptPair condense(const std::vector<EventNarrative>& narratives, const CondenseOptions& options) {
  if (narratives.empty()) throw PreconditionError("condense: no narratives");
  if (options.connectives.empty()) throw PreconditionError("condense: empty connective lexicon");
  for (std::size_t i = 1; i < narratives.size(); ++i)
    if (narratives[i].t_index <= narratives[i - 1].t_index)
      throw PreconditionError("condense: narratives out of t_index order");

  struct Contribution {
    std::vector<std::string> clauses;
    std::size_t change = 0;
    std::size_t order = 0;
  };
  std::vector<Contribution> events;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < narratives.size(); ++i) {
    Contribution c;
    c.order = i;
    for (const auto& [s, e] : narratives[i].changed_spans) c.change += e - s;
    for (auto& clause : split_clauses(narratives[i].text)) {
      bool banned = false;
      for (const auto& w : options.forbidden_words) banned = banned || contains_ci(clause, w);
      if (banned || !seen.insert(clause).second) continue;
      c.clauses.push_back(std::move(clause));
    }
    if (!c.clauses.empty() || i == 0) events.push_back(std::move(c));
  }

  auto render = [&](PromptPair& pair) {
    pair.positive.clear();
    pair.connectives_used.clear();
    for (std::size_t k = 0; k < events.size(); ++k) {
      const std::string body = join(events[k].clauses, ", ");
      if (k == 0) {
        pair.positive = body;
        continue;
      }
      const std::string& conn = options.connectives[(k - 1) % options.connectives.size()];
      pair.connectives_used.push_back(conn);
      pair.positive += (pair.positive.empty() ? "" : ", ") + conn + " " + body;
    }
    pair.token_estimate = estimate_tokens(pair.positive);
  };

  PromptPair pair;
  render(pair);
  while (pair.token_estimate > options.limit) {
    if (events.size() <= 1)
      throw BudgetError("first event alone needs " + std::to_string(pair.token_estimate) + " tokens, budget is " +
                        std::to_string(options.limit));
    auto victim = events.begin() + 1;
    for (auto it = events.begin() + 1; it != events.end(); ++it)
      if (it->change < victim->change || (it->change == victim->change && it->order > victim->order)) victim = it;
    events.erase(victim);
    render(pair);
  }
  if (pair.positive.empty()) throw PreconditionError("condense: first narrative is empty");

  std::vector<std::string> negative;
  for (const auto& p : options.negative_phrases)
    if (std::find(negative.begin(), negative.end(), p) == negative.end()) negative.push_back(p);
  for (const auto& w : options.forbidden_words)
    if (std::find(negative.begin(), negative.end(), w) == negative.end()) negative.push_back(w);
  pair.negative = join(negative, ", ");
  return pair;
}

PromptEmbedding embed_pair(const PromptPair& pair, backends::TextEncoderBackend& encoder) {
  if (pair.positive.empty() || pair.negative.empty())
    throw PreconditionError("embed_pair: both prompts must be nonempty");
  PromptEmbedding e;
  e.positive_vec = encoder.encode_text(pair.positive);
  e.negative_vec = encoder.encode_text(pair.negative);
  if (e.positive_vec.size() != e.negative_vec.size())
    throw DimensionMismatchError("text encoder returned " + std::to_string(e.positive_vec.size()) + " and " +
                                 std::to_string(e.negative_vec.size()) + " values");
  e.concatenated = e.positive_vec;
  e.concatenated.insert(e.concatenated.end(), e.negative_vec.begin(), e.negative_vec.end());
  return e;
}

}  // namespace cce::narrative
