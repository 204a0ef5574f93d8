#include "cce/scene/rules.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

#include "cce/error.hpp"
#include "cce/formula/units.hpp"

namespace cce::scene {

namespace {

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class RuleParser {
 public:
  explicit RuleParser(std::string_view src) : src_(src) {}

  std::vector<TriggerRule> parse() {
    std::vector<TriggerRule> rules;
    while (true) {
      skip_blank(true);
      if (pos_ >= src_.size()) break;
      if (peek() == ';') {
        ++pos_;
        continue;
      }
      rules.push_back(rule());
      skip_blank(false);
      if (pos_ < src_.size() && peek() != '\n' && peek() != ';')
        fail({"newline", "';'", "','"}, "unexpected text after rule");
    }
    return rules;
  }

 private:
  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

  void skip_blank(bool newlines) {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n')) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& what) const {
    std::string list;
    for (const auto& e : expected) list += (list.empty() ? "" : ", ") + e;
    throw SyntaxError(pos_, std::move(expected),
                      "rule syntax error at offset " + std::to_string(pos_) + ": " + what + " (expected " + list + ")");
  }

  std::string word(const char* what) {
    skip_blank(false);
    const std::size_t b = pos_;
    while (pos_ < src_.size() &&
           (word_char(src_[pos_]) ||
            (src_[pos_] == '-' && pos_ + 1 < src_.size() && word_char(src_[pos_ + 1]) && pos_ > b)))
      ++pos_;
    if (pos_ == b) fail({what}, std::string("expected ") + what);
    return std::string(src_.substr(b, pos_ - b));
  }

  bool try_keyword(const char* kw) {
    skip_blank(false);
    const std::size_t b = pos_;
    std::size_t e = b;
    while (e < src_.size() && word_char(src_[e])) ++e;
    if (src_.substr(b, e - b) == kw) {
      pos_ = e;
      return true;
    }
    return false;
  }

  void keyword(const char* kw) {
    if (!try_keyword(kw)) fail({std::string("'") + kw + "'"}, "unexpected token");
  }

  void punct(std::string_view p) {
    skip_blank(false);
    if (src_.substr(pos_, p.size()) != p) fail({"'" + std::string(p) + "'"}, "unexpected token");
    pos_ += p.size();
  }

  bool number_ahead() {
    skip_blank(false);
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c))) return true;
    if ((c == '-' || c == '+' || c == '.') && pos_ + 1 < src_.size())
      return std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) || src_[pos_ + 1] == '.';
    return false;
  }

  /// number [unit]; returns SI value, optional dimension and source text.
  std::tuple<double, std::optional<formula::Dimension>, std::string> quantity() {
    skip_blank(false);
    const std::size_t b = pos_;
    char* end = nullptr;
    const std::string tail(src_.substr(pos_));
    const double v = std::strtod(tail.c_str(), &end);
    if (end == tail.c_str()) fail({"number"}, "expected a number");
    pos_ += static_cast<std::size_t>(end - tail.c_str());
    std::string unit_text;
    const std::size_t save = pos_;
    skip_blank(false);
    if (peek() == '[') {
      const std::size_t close = src_.find(']', pos_);
      if (close == std::string_view::npos) fail({"']'"}, "unterminated unit");
      unit_text = std::string(src_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
    } else if (std::isalpha(static_cast<unsigned char>(peek()))) {
      std::size_t e = pos_;
      while (e < src_.size() && word_char(src_[e])) ++e;
      unit_text = std::string(src_.substr(pos_, e - pos_));
      pos_ = e;
    } else {
      pos_ = save;
    }
    const std::string text = std::string(src_.substr(b, pos_ - b));
    if (unit_text.empty()) return {v, std::nullopt, text};
    try {
      const auto unit = formula::parse_unit(unit_text);
      return {formula::to_si(v, unit), unit.dimension, text};
    } catch (const UnknownUnitError& e) {
      fail({"unit"}, e.what());
    }
  }

  AttributeValue value() {
    skip_blank(false);
    if (peek() == '"') {
      const std::size_t close = src_.find('"', pos_ + 1);
      if (close == std::string_view::npos) fail({"'\"'"}, "unterminated string");
      std::string s(src_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
      return s;
    }
    if (number_ahead()) {
      auto [v, dim, text] = quantity();
      formula::Quantity q{v, dim.value_or(formula::Dimension::none()), ""};
      q.unit_label = q.dimension.to_unit_string();
      return q;
    }
    return word("value");
  }

  Trigger trigger() {
    Trigger t;
    t.object = word("object id");
    punct(".");
    t.symbol = word("symbol");
    skip_blank(false);
    bool needs_threshold = true;
    if (src_.substr(pos_, 2) == ">=") {
      t.kind = TriggerKind::kGe;
      pos_ += 2;
    } else if (src_.substr(pos_, 2) == "<=") {
      t.kind = TriggerKind::kLe;
      pos_ += 2;
    } else if (peek() == '>') {
      t.kind = TriggerKind::kGt;
      ++pos_;
    } else if (peek() == '<') {
      t.kind = TriggerKind::kLt;
      ++pos_;
    } else if (try_keyword("crosses")) {
      t.kind = try_keyword("up") ? TriggerKind::kCrossesUp
                                 : (try_keyword("down") ? TriggerKind::kCrossesDown : TriggerKind::kCrosses);
    } else if (try_keyword("changes")) {
      keyword("sign");
      t.kind = TriggerKind::kChangesSign;
      needs_threshold = false;
    } else if (try_keyword("increases")) {
      t.kind = TriggerKind::kIncreases;
      needs_threshold = false;
    } else if (try_keyword("decreases")) {
      t.kind = TriggerKind::kDecreases;
      needs_threshold = false;
    } else {
      fail({"'>='", "'>'", "'<='", "'<'", "'crosses'", "'changes'", "'increases'", "'decreases'"},
           "expected a trigger");
    }
    if (needs_threshold) {
      auto [v, dim, text] = quantity();
      t.threshold = v;
      t.threshold_dimension = dim;
      t.threshold_text = text;
    }
    return t;
  }

  Action action() {
    Action a;
    if (try_keyword("set")) {
      a.kind = ActionKind::kSet;
      a.node = word("node id");
      punct(".");
      a.attribute = word("attribute");
      if (a.attribute == "label") fail({"attribute"}, "use 'relabel' to change a label");
      punct("=");
      a.value = value();
    } else if (try_keyword("relabel")) {
      a.kind = ActionKind::kRelabel;
      a.node = word("node id");
      keyword("as");
      a.label = word("label");
    } else if (try_keyword("add")) {
      if (try_keyword("node")) {
        a.kind = ActionKind::kAddNode;
        a.node = word("node id");
        keyword("as");
        a.label = word("label");
      } else {
        keyword("edge");
        a.kind = ActionKind::kAddEdge;
        a.node = word("source node");
        a.relation = word("relation");
        a.target = word("target node");
      }
    } else if (try_keyword("remove")) {
      keyword("edge");
      a.kind = ActionKind::kRemoveEdge;
      a.node = word("source node");
      a.relation = word("relation");
      a.target = word("target node");
    } else {
      fail({"'set'", "'relabel'", "'add'", "'remove'"}, "expected an action");
    }
    return a;
  }

  TriggerRule rule() {
    keyword("when");
    TriggerRule r;
    r.trigger = trigger();
    punct("->");
    r.actions.push_back(action());
    while (true) {
      skip_blank(false);
      if (peek() != ',') break;
      ++pos_;
      r.actions.push_back(action());
    }
    return r;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

std::string value_dsl(const AttributeValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) {
    bool plain = !s->empty() && word_char((*s)[0]) && !std::isdigit(static_cast<unsigned char>((*s)[0]));
    for (std::size_t i = 0; i < s->size() && plain; ++i)
      plain = word_char((*s)[i]) || ((*s)[i] == '-' && i + 1 < s->size() && word_char((*s)[i + 1]));
    return plain ? *s : "\"" + *s + "\"";
  }
  const auto& q = std::get<formula::Quantity>(v);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", q.value);
  const std::string unit = q.dimension.to_unit_string();
  return unit == "1" ? std::string(buf) : std::string(buf) + " [" + unit + "]";
}

}  // namespace

std::vector<TriggerRule> parse_rules(std::string_view source) { return RuleParser(source).parse(); }

std::string to_dsl(const TriggerRule& rule) {
  const Trigger& t = rule.trigger;
  std::string out = "when " + t.object + "." + t.symbol + " ";
  switch (t.kind) {
    case TriggerKind::kGe: out += ">= " + t.threshold_text; break;
    case TriggerKind::kGt: out += "> " + t.threshold_text; break;
    case TriggerKind::kLe: out += "<= " + t.threshold_text; break;
    case TriggerKind::kLt: out += "< " + t.threshold_text; break;
    case TriggerKind::kCrossesUp: out += "crosses up " + t.threshold_text; break;
    case TriggerKind::kCrossesDown: out += "crosses down " + t.threshold_text; break;
    case TriggerKind::kCrosses: out += "crosses " + t.threshold_text; break;
    case TriggerKind::kChangesSign: out += "changes sign"; break;
    case TriggerKind::kIncreases: out += "increases"; break;
    case TriggerKind::kDecreases: out += "decreases"; break;
  }
  out += " ->";
  for (std::size_t i = 0; i < rule.actions.size(); ++i) {
    const Action& a = rule.actions[i];
    out += i ? ", " : " ";
    switch (a.kind) {
      case ActionKind::kSet: out += "set " + a.node + "." + a.attribute + " = " + value_dsl(a.value); break;
      case ActionKind::kRelabel: out += "relabel " + a.node + " as " + a.label; break;
      case ActionKind::kAddEdge: out += "add edge " + a.node + " " + a.relation + " " + a.target; break;
      case ActionKind::kRemoveEdge: out += "remove edge " + a.node + " " + a.relation + " " + a.target; break;
      case ActionKind::kAddNode: out += "add node " + a.node + " as " + a.label; break;
    }
  }
  return out;
}

std::string to_dsl(const std::vector<TriggerRule>& rules) {
  std::string out;
  for (const auto& r : rules) out += to_dsl(r) + "\n";
  return out;
}

}  // namespace cce::scene
