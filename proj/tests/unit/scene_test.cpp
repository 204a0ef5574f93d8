#include <doctest.h>

#include <random>

#include "cce/backends/mock_reasoner.hpp"
#include "cce/error.hpp"
#include "cce/scene/update.hpp"
#include "test_support.hpp"

using namespace cce;
using namespace cce::scene;
using formula::Quantity;
using nlohmann::json;

namespace {

SceneGraph ice_graph() {
  return SceneGraph::from_json(json::parse(R"({
    "nodes": [{"id": "ice", "label": "ice cube", "attributes": {"phase": "solid"}},
              {"id": "pan", "label": "pan", "attributes": {}}],
    "edges": [{"source": "pan", "target": "ice", "relation": "supports"}]})"));
}

event::PhysicalCondition ice_condition(int t, double celsius) {
  event::PhysicalCondition c;
  c.t_index = t;
  c.params["ice"]["T"] = Quantity::from(celsius, "degC");
  return c;
}

}  // namespace

TEST_CASE("graph validation") {
  auto g = ice_graph();
  CHECK_NOTHROW(g.validate());
  CHECK(g.surface_names() == std::vector<std::string>{"ice cube", "pan"});
  CHECK(SceneGraph::from_json(g.to_json()) == g);

  auto dangling = g.to_json();
  dangling["edges"].push_back({{"source", "ice"}, {"target", "stove"}, {"relation", "on"}});
  CHECK_THROWS_AS(SceneGraph::from_json(dangling), GraphSchemaError);
  auto loop = g.to_json();
  loop["edges"].push_back({{"source", "ice"}, {"target", "ice"}, {"relation", "touches"}});
  CHECK_THROWS_AS(SceneGraph::from_json(loop), GraphSchemaError);
  auto dup = g.to_json();
  dup["edges"].push_back(dup["edges"][0]);
  CHECK_THROWS_AS(SceneGraph::from_json(dup), GraphSchemaError);
}

TEST_CASE("init graph from the glass-ball fixture") {
  backends::MockReasoner reasoner(backends::MockReasoner::load_scenarios(cce_test::data_dir() / "fixtures/scenarios.json"));
  const auto g = init_graph("a glass ball dropped into water", reasoner);
  CHECK(g.t_index == 1);
  CHECK(g.nodes.size() == 2);
  CHECK(g.find_node("ball"));
  CHECK(g.find_node("water"));
  REQUIRE(g.edges.size() == 1);
  CHECK(g.find_edge("ball", "water", "approaches"));

  CHECK_THROWS_AS(init_graph("", reasoner), PreconditionError);

  backends::MockReasoner broken;
  broken.add_handler("init_scene_graph", [](const backends::ReasonTask&) -> std::optional<json> {
    return json::parse(R"({"nodes": [{"id": "a", "label": "a", "attributes": {}}],
                            "edges": [{"source": "a", "target": "ghost", "relation": "touches"}]})");
  });
  CHECK_THROWS_AS(init_graph("anything", broken), GraphSchemaError);
}

TEST_CASE("rule DSL") {
  const auto rules = parse_rules(
      "# phase change\n"
      "when ice.T >= 0 [degC] -> set ice.phase = liquid, relabel ice as water\n"
      "when ball.depth crosses up 0.15 m -> remove edge ball approaches water; "
      "when x.v changes sign -> add node smoke as smoke, set x.note = \"two words\"\n"
      "when x.v decreases -> add edge x touches y");
  REQUIRE(rules.size() == 4);
  CHECK(rules[0].trigger.kind == TriggerKind::kGe);
  CHECK(rules[0].trigger.threshold == doctest::Approx(273.15));
  CHECK(rules[0].actions.size() == 2);
  CHECK(rules[1].trigger.kind == TriggerKind::kCrossesUp);
  CHECK(rules[1].trigger.threshold == doctest::Approx(0.15));
  CHECK(rules[2].actions[0].kind == ActionKind::kAddNode);
  CHECK(std::get<std::string>(rules[2].actions[1].value) == "two words");
  CHECK(parse_rules(to_dsl(rules)) == rules);

  CHECK_THROWS_AS(parse_rules("when ice.T >= -> set ice.phase = liquid"), SyntaxError);
  CHECK_THROWS_AS(parse_rules("when ice.T >= 0 [furlong] -> set ice.phase = liquid"), SyntaxError);
  CHECK_THROWS_AS(parse_rules("when ice.T >= 0 -> set ice.label = x"), SyntaxError);
}

TEST_CASE("single rule fires with provenance") {
  const auto rules = parse_rules("when ice.T >= 0 [degC] -> set ice.phase = liquid");
  const auto g1 = ice_graph();
  const auto c1 = ice_condition(1, -5);
  const auto c2 = ice_condition(2, 2);
  const auto d = derive_delta(g1, c2, rules, nullptr, {"", &c1});
  REQUIRE(d.entries.size() == 1);
  const auto& s = std::get<SetAttribute>(d.entries[0].op);
  CHECK(s.node == "ice");
  CHECK(s.attribute == "phase");
  CHECK(std::get<std::string>(*s.old_value) == "solid");
  CHECK(std::get<std::string>(s.new_value) == "liquid");
  CHECK(d.entries[0].provenance.symbol == "T");
  CHECK(d.entries[0].provenance.object == "ice");
  CHECK_FALSE(d.entries[0].provenance.change.empty());

  const auto g2 = apply_delta(g1, d);
  const auto c3 = ice_condition(3, 2);
  CHECK(derive_delta(g2, c3, rules, nullptr, {"", &c2}).empty());
  CHECK(derive_delta(g1, ice_condition(2, -5), rules, nullptr, {"", &c1}).empty());

  CHECK_THROWS_AS(derive_delta(g1, ice_condition(3, 2), rules, nullptr), PreconditionError);
  CHECK_THROWS_AS(derive_delta(g1, c2, parse_rules("when ice.T >= 0 [m] -> set ice.phase = liquid"), nullptr),
                  DimensionError);
}

TEST_CASE("conflicting rules") {
  const auto rules = parse_rules(
      "when ice.T >= 0 [degC] -> set ice.color = red\n"
      "when ice.T >= 0 [degC] -> set ice.color = blue");
  CHECK_THROWS_AS(derive_delta(ice_graph(), ice_condition(2, 3), rules, nullptr), RuleConflictError);
  const auto agree = parse_rules(
      "when ice.T >= 0 [degC] -> set ice.color = red\n"
      "when ice.T > 1 [degC] -> set ice.color = red");
  CHECK(derive_delta(ice_graph(), ice_condition(2, 3), agree, nullptr).entries.size() == 1);
}

TEST_CASE("edge triggers need the previous condition") {
  const auto rules = parse_rules("when ice.T crosses up 0 [degC] -> set ice.phase = liquid");
  const auto c1 = ice_condition(1, -1);
  CHECK(derive_delta(ice_graph(), ice_condition(2, 1), rules, nullptr).empty());
  CHECK(derive_delta(ice_graph(), ice_condition(2, 1), rules, nullptr, {"", &c1}).entries.size() == 1);
}

TEST_CASE("residual changes come from the backend") {
  backends::MockReasoner reasoner;
  auto c1 = ice_condition(1, -5);
  auto c2 = ice_condition(2, -2);
  c1.params["pan"]["h"] = Quantity::from(1, "m");
  c2.params["pan"]["h"] = Quantity::from(2, "m");
  const auto rules = parse_rules("when ice.T >= 0 [degC] -> set ice.phase = liquid");
  const auto d = derive_delta(ice_graph(), c2, rules, &reasoner, {"", &c1});
  REQUIRE(d.entries.size() == 1);
  CHECK(std::get<SetAttribute>(d.entries[0].op).attribute == "h_trend");
  CHECK(d.entries[0].provenance.symbol == "h");

  backends::MockReasoner liar;
  liar.add_handler("residual_graph_changes", [](const backends::ReasonTask&) -> std::optional<json> {
    return json::parse(R"({"entries": [{"op": "set_attribute", "node": "pan", "attribute": "x", "value": "y",
                                         "provenance": {"symbol": "nope", "object": "pan", "change": "up"}}]})");
  });
  CHECK_THROWS_AS(derive_delta(ice_graph(), c2, rules, &liar, {"", &c1}), SchemaError);
}

TEST_CASE("apply delta") {
  const auto g = ice_graph();
  const auto same = apply_delta(g, {});
  CHECK(same.t_index == g.t_index + 1);
  CHECK(same_content(same, g));

  auto litmus = SceneGraph::from_json(json::parse(R"({
    "nodes": [{"id": "solution", "label": "litmus solution", "attributes": {"color": "purple"}},
              {"id": "beaker", "label": "beaker", "attributes": {}}],
    "edges": [{"source": "beaker", "target": "solution", "relation": "contains"}]})"));
  GraphDelta red{{{SetAttribute{"solution", "color", std::string("purple"), std::string("red")}, {"pH", "solution", "falls"}}}};
  const auto after = apply_delta(litmus, red);
  CHECK(std::get<std::string>(after.find_node("solution")->attributes.at("color")) == "red");
  CHECK(after.edges == litmus.edges);
  CHECK(*after.find_node("beaker") == *litmus.find_node("beaker"));
  CHECK(std::get<std::string>(litmus.find_node("solution")->attributes.at("color")) == "purple");
  CHECK_THROWS_AS(apply_delta(after, red), StaleDeltaError);

  GraphDelta ghost{{{Relabel{"ghost", "ghost", "spirit"}, {"x", "ghost", "up"}}}};
  CHECK_THROWS_AS(apply_delta(g, ghost), StaleDeltaError);
  GraphDelta no_prov{{{Relabel{"ice", "ice cube", "water"}, {"", "", ""}}}};
  CHECK_THROWS_AS(apply_delta(g, no_prov), PreconditionError);

  GraphDelta grow{{{AddNode{{"steam", "steam", {}}}, {"T", "ice", "up"}}}};
  CHECK(grow.adds_nodes());
  CHECK(apply_delta(g, grow).nodes.size() == 3);
  CHECK(GraphDelta::from_json(red.to_json()) == red);
  CHECK(GraphDelta::from_json(grow.to_json()) == grow);
}

TEST_CASE("scene graph laws over random chains") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto chain = cce_test::random_scene_chain(rng);
    SceneGraph g = chain.graph;
    std::set<std::string> ids;
    for (const auto& [id, _] : g.nodes) ids.insert(id);
    SceneGraph before = g;
    GraphDelta previous;
    for (std::size_t t = 1; t < chain.conditions.size(); ++t) {
      const auto& cond = chain.conditions[t];
      const auto delta = derive_delta(g, cond, chain.rules, nullptr, {"", &chain.conditions[t - 1]});
      for (const auto& e : delta.entries) CHECK(cond.find({e.provenance.object, e.provenance.symbol}));
      const auto next = apply_delta(g, delta);
      CHECK_NOTHROW(next.validate());
      std::set<std::string> now;
      for (const auto& [id, _] : next.nodes) now.insert(id);
      CHECK(now == ids);
      CHECK(same_content(apply_delta(g, {}), g));
      if (t >= 2) CHECK(same_content(apply_delta(before, concat(previous, delta)), next));
      CHECK(derive_delta(g, cond, chain.rules, nullptr, {"", &chain.conditions[t - 1]}) == delta);
      before = g;
      previous = delta;
      g = next;
    }
  }
}
