#include <doctest.h>

#include <random>

#include "cce/backends/mock_backends.hpp"
#include "cce/backends/mock_reasoner.hpp"
#include "cce/error.hpp"
#include "cce/narrative/narrative.hpp"
#include "cce/util/digest.hpp"
#include "test_support.hpp"

using namespace cce;
using namespace cce::narrative;
using formula::Quantity;
using nlohmann::json;

namespace {

const char* kIceDescription = "An ice cube sits in a pan on a hot stove and melts as its temperature rises.";

scene::SceneGraph ice_graph() {
  return scene::SceneGraph::from_json(json::parse(R"({
    "nodes": [{"id": "ice", "label": "ice cube", "attributes": {"phase": "solid"}},
              {"id": "pan", "label": "pan", "attributes": {}}],
    "edges": [{"source": "ice", "target": "pan", "relation": "on"}]})"));
}

scene::GraphDelta melt_delta() {
  return {{{scene::SetAttribute{"ice", "phase", std::string("solid"), std::string("liquid")}, {"T", "ice", ">= 273.15"}}}};
}

event::PhysicalCondition cond(int t, double kelvin) {
  event::PhysicalCondition c;
  c.t_index = t;
  c.params["ice"]["T"] = Quantity::from(kelvin, "K");
  return c;
}

backends::MockReasoner fixture_reasoner() {
  return backends::MockReasoner(backends::MockReasoner::load_scenarios(cce_test::data_dir() / "fixtures/scenarios.json"));
}

EventNarrative story(int t, std::string text) { return {t, std::move(text), "", {}}; }

}  // namespace

TEST_CASE("text helpers") {
  CHECK(split_clauses(" a  b ,c,, d ") == std::vector<std::string>{"a b", "c", "d"});
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(changed_spans("abc", "abc").empty());
  CHECK(changed_spans("the ice is solid", "the ice is liquid") == std::vector<Span>{{11, 15}});
  CHECK(estimate_tokens("a b, c.") == 5);
  const auto problems = narrative_problems("the ice is freezing", {"ice", "pan"}, {"freez"});
  CHECK(problems.size() == 2);
}

TEST_CASE("revision of a melting event") {
  auto reasoner = fixture_reasoner();
  const auto g1 = ice_graph();
  const auto d = melt_delta();
  const auto g2 = scene::apply_delta(g1, d);
  const EventNarrative prev = story(1, "an ice cube sits in a pan");
  NarrativeOptions opts{kIceDescription, {"freez", "solidif"}};
  const auto next = revise(prev, cond(2, 275), d, g2, reasoner, opts);
  CHECK(next.t_index == 2);
  CHECK(next.text.find("melt") != std::string::npos);
  CHECK(next.text.find("pan") != std::string::npos);
  CHECK(next.text.find("freez") == std::string::npos);
  CHECK(next.revision_of == sha256_hex(prev.text));
  REQUIRE(next.changed_spans.size() == 1);
  CHECK(next.changed_spans[0].second == next.text.size());

  const int calls = reasoner.call_counts().at("revise_narrative");
  const auto same = revise(prev, cond(2, 275), {}, g2, reasoner, opts);
  CHECK(same.text == prev.text);
  CHECK(same.changed_spans.empty());
  CHECK(reasoner.call_counts().at("revise_narrative") == calls);
}

TEST_CASE("revision validation retries once") {
  const auto g2 = scene::apply_delta(ice_graph(), melt_delta());
  const EventNarrative prev = story(1, "an ice cube sits in a pan");
  NarrativeOptions opts{"melting", {"freez"}};

  backends::MockReasoner forgetful;
  forgetful.add_handler("revise_narrative", [](const backends::ReasonTask&) -> std::optional<json> {
    return json{{"text", "the ice cube melts"}};
  });
  CHECK_THROWS_AS(revise(prev, cond(2, 275), melt_delta(), g2, forgetful, opts), ValidationError);
  CHECK(forgetful.call_counts().at("revise_narrative") == 2);

  backends::MockReasoner learns;
  learns.add_handler("revise_narrative", [](const backends::ReasonTask& t) -> std::optional<json> {
    if (!t.payload.contains("violation")) return json{{"text", "the ice cube melts"}};
    return json{{"text", "the ice cube melts in the pan"}};
  });
  CHECK(revise(prev, cond(2, 275), melt_delta(), g2, learns, opts).text == "the ice cube melts in the pan");
  CHECK(learns.call_counts().at("revise_narrative") == 2);

  backends::MockReasoner wrong_way;
  wrong_way.add_handler("revise_narrative", [](const backends::ReasonTask&) -> std::optional<json> {
    return json{{"text", "the ice cube is freezing in the pan"}};
  });
  CHECK_THROWS_AS(revise(prev, cond(2, 275), melt_delta(), g2, wrong_way, opts), ValidationError);
}

TEST_CASE("minimality warnings are recorded, not raised") {
  const auto g2 = scene::apply_delta(ice_graph(), melt_delta());
  backends::MockReasoner verbose;
  verbose.add_handler("revise_narrative", [](const backends::ReasonTask&) -> std::optional<json> {
    return json{{"text", "an entirely different sentence about the ice cube and the pan"}};
  });
  std::vector<std::string> warnings;
  NarrativeOptions opts{"melting", {}, 0.4, &warnings};
  CHECK_NOTHROW(revise(story(1, "an ice cube sits in a pan"), cond(2, 275), melt_delta(), g2, verbose, opts));
  CHECK(warnings.size() == 1);
}

TEST_CASE("describe the first event") {
  auto reasoner = fixture_reasoner();
  NarrativeOptions opts{kIceDescription, {"freez"}};
  const auto w1 = describe(cond(1, 263), ice_graph(), reasoner, opts);
  CHECK(w1.text == "an ice cube sits in a pan on a hot stove");
  CHECK(w1.revision_of.empty());
}

TEST_CASE("condense") {
  CondenseOptions opts;
  const auto one = condense({story(1, "an ice cube sits in a pan")}, opts);
  CHECK(one.positive == "an ice cube sits in a pan");
  CHECK(one.connectives_used.empty());

  const std::vector<EventNarrative> ice = {
      story(1, "an ice cube sits in a pan"),
      story(2, "an ice cube sits in a pan, the ice cube begins to melt"),
      story(3, "an ice cube sits in a pan, the ice cube begins to melt, a puddle of water forms")};
  const auto three = condense(ice, opts);
  CHECK(three.connectives_used == std::vector<std::string>{"then", "as a result"});
  CHECK(three.positive ==
        "an ice cube sits in a pan, then the ice cube begins to melt, as a result a puddle of water forms");
  for (const auto& clause : split_clauses(ice.back().text)) {
    std::size_t count = 0;
    for (std::size_t p = three.positive.find(clause); p != std::string::npos; p = three.positive.find(clause, p + 1))
      ++count;
    CHECK(count == 1);
  }
  CHECK(three.token_estimate == estimate_tokens(three.positive));
  CHECK(condense({story(1, three.positive)}, opts).positive == three.positive);

  opts.forbidden_words = {"freezing"};
  opts.negative_phrases = {"blurry", "flickering"};
  const auto banned = condense({story(1, "the water warms"), story(2, "the water warms, no freezing occurs")}, opts);
  CHECK(banned.positive == "the water warms");
  CHECK(banned.negative == "blurry, flickering, freezing");

  CondenseOptions tight;
  tight.limit = 15;
  std::vector<EventNarrative> changed = ice;
  changed[1].changed_spans = {{0, 5}};
  changed[2].changed_spans = {{0, 50}};
  const auto trimmed = condense(changed, tight);
  CHECK(trimmed.token_estimate <= 15);
  CHECK(trimmed.positive.find("puddle") != std::string::npos);
  CHECK(trimmed.positive.find("begins to melt") == std::string::npos);
  tight.limit = 3;
  CHECK_THROWS_AS(condense(ice, tight), BudgetError);
}

TEST_CASE("clause order survives condensation") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    int events = 0;
    const auto chain = cce_test::random_narratives(rng, events);
    const auto pair = condense(chain, {});
    std::size_t last = 0;
    for (int t = 1; t <= events; ++t) {
      const auto pos = pair.positive.find("marker" + std::to_string(t));
      REQUIRE(pos != std::string::npos);
      if (t > 1) CHECK(pos > last);
      last = pos;
    }
    CHECK(condense({story(1, pair.positive)}, {}).positive == pair.positive);
  }
}

TEST_CASE("forbidden words follow the declared direction") {
  const auto lexicon = Lexicon::load(cce_test::data_dir());
  CHECK_FALSE(lexicon.negative_phrases.empty());
  const auto f = forbidden_for({{"T", event::Monotone::kIncreasing}}, {{"T", formula::parse_unit("K").dimension}},
                               lexicon.direction);
  CHECK(std::find(f.words.begin(), f.words.end(), "freezing") != f.words.end());
  CHECK(std::find(f.words.begin(), f.words.end(), "melting") == f.words.end());
  const auto by_unit = forbidden_for({{"theta_x", event::Monotone::kIncreasing}},
                                     {{"theta_x", formula::parse_unit("K").dimension}}, lexicon.direction);
  CHECK(by_unit.words == f.words);
  const auto cooling = forbidden_for({{"T", event::Monotone::kDecreasing}}, {{"T", formula::parse_unit("K").dimension}},
                                     lexicon.direction);
  CHECK(std::find(cooling.words.begin(), cooling.words.end(), "melting") != cooling.words.end());
  CHECK(forbidden_for({{"T", event::Monotone::kFree}}, {{"T", formula::parse_unit("K").dimension}}, lexicon.direction)
            .words.empty());

  CondenseOptions opts;
  opts.forbidden_words = f.words;
  opts.negative_phrases = lexicon.negative_phrases;
  const auto pair = condense({story(1, "an ice cube sits in a pan"), story(2, "the ice cube melts")}, opts);
  CHECK(pair.positive.find("freezing") == std::string::npos);
  CHECK(pair.negative.find("freezing") != std::string::npos);
}

TEST_CASE("embedding pair concatenation") {
  backends::MockTextEncoder enc(8, 1);
  const auto e = embed_pair({"a", "b", {}, 1}, enc);
  REQUIRE(e.concatenated.size() == 16);
  const auto a = enc.encode_text("a");
  const auto b = enc.encode_text("b");
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(e.concatenated[i] == a[i]);
    CHECK(e.concatenated[8 + i] == b[i]);
  }
  const auto same = embed_pair({"x", "x", {}, 1}, enc);
  CHECK(same.positive_vec == same.negative_vec);
  CHECK_THROWS_AS(embed_pair({"x", "", {}, 1}, enc), PreconditionError);
}

TEST_CASE("narrative serialization") {
  const EventNarrative n{2, "the ice melts", "abc", {{4, 7}}};
  CHECK(EventNarrative::from_json(n.to_json()) == n);
  const PromptPair p{"pos", "neg", {"then"}, 3};
  CHECK(PromptPair::from_json(p.to_json()) == p);
}
