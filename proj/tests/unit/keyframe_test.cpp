#include <doctest.h>

#include <cmath>
#include <random>

#include "cce/backends/mock_backends.hpp"
#include "cce/backends/mock_reasoner.hpp"
#include "cce/error.hpp"
#include "cce/keyframe/schedule.hpp"
#include "test_support.hpp"

using namespace cce;
using namespace cce::keyframe;
using formula::Quantity;
using nlohmann::json;

namespace {

struct Setup {
  event::ParameterTrajectory traj;
  event::PhysicalCondition c1, c2;
  scene::SceneGraph g1, g2;
};

// One object whose T spans [0, 1] over the trajectory; the two conditions
// sit at 0.25 and 0.25 + delta.
Setup setup(double delta) {
  Setup s;
  s.traj.object_ids = {"ice"};
  for (int i = 0; i < 2; ++i) {
    event::TrajectorySample smp;
    smp.time = i;
    smp.params["ice"]["T"] = Quantity::dimensionless(i);
    s.traj.samples.push_back(smp);
  }
  s.c1.t_index = 1;
  s.c1.params["ice"]["T"] = Quantity::dimensionless(0.25);
  s.c2.t_index = 2;
  s.c2.params["ice"]["T"] = Quantity::dimensionless(0.25 + delta);
  s.c2.start = 0;
  s.c2.end = 2;
  s.g1 = scene::SceneGraph::from_json(json::parse(R"({"nodes": [{"id": "ice", "label": "ice cube", "attributes": {}}], "edges": []})"));
  s.g2 = s.g1;
  s.g2.t_index = 2;
  return s;
}

void propose(backends::MockReasoner& r, json reply) {
  r.add_handler("plan_operator",
                [reply](const backends::ReasonTask&) -> std::optional<json> { return std::optional<json>(reply); });
}

json proposal(double magnitude, double x = 0.25) {
  return {{"kind", "mask_inpaint"}, {"target_node", "ice"}, {"magnitude", magnitude}, {"duration", 2.0},
          {"instruction", "melt the ice"}, {"region", {{"x", x}, {"y", 0.25}, {"w", 0.5}, {"h", 0.5}}}};
}

// Integer nearest to x, halves rounded up, found by enumeration.
std::size_t oracle_interior(double x) {
  long best = 0;
  for (long k = 0; k <= 64; ++k) {
    const double dk = std::abs(x - static_cast<double>(k)), db = std::abs(x - static_cast<double>(best));
    if (dk < db || dk == db) best = k;
  }
  return static_cast<std::size_t>(std::max<long>(1, best) - 1);
}

double red_distance(double hue) { return std::min(hue, 360.0 - hue); }

}  // namespace

TEST_CASE("operator bounds and clamping") {
  const auto b = operator_bounds(0.5);
  CHECK(b.first == doctest::Approx(0.4));
  CHECK(b.second == doctest::Approx(0.6));
  CHECK(operator_bounds(0.0) == std::pair<double, double>{0.0, 0.0});
  CHECK(operator_bounds(0.9).second == 1.0);

  auto s = setup(0.5);
  const event::Normalizer norm(s.traj);
  CHECK(node_delta(s.c1, s.c2, "ice", norm) == doctest::Approx(0.5));
  backends::MockReasoner reasoner;
  propose(reasoner, proposal(0.9));
  std::vector<std::string> warnings;
  OperatorOptions opts;
  opts.warnings = &warnings;
  const auto plan = plan_operator(s.c1, s.g1, s.c2, s.g2, reasoner, norm, opts);
  CHECK(plan.op.kind == OperatorKind::kMaskInpaint);
  CHECK(plan.op.magnitude == doctest::Approx(0.6));
  CHECK(plan.op.bounds.first == doctest::Approx(0.4));
  CHECK(plan.op.bounds.second == doctest::Approx(0.6));
  CHECK(plan.span.d == 2.0);
  CHECK(warnings.size() == 1);
}

TEST_CASE("identical conditions give a zero-strength recolor") {
  auto s = setup(0.0);
  const event::Normalizer norm(s.traj);
  backends::MockReasoner reasoner;
  propose(reasoner, proposal(0.7));
  const auto plan = plan_operator(s.c1, s.g1, s.c2, s.g2, reasoner, norm);
  CHECK(plan.op.bounds == std::pair<double, double>{0.0, 0.0});
  CHECK(plan.op.magnitude == 0.0);
  CHECK(plan.op.kind == OperatorKind::kRecolor);
}

TEST_CASE("out-of-range region is retried once") {
  auto s = setup(0.5);
  const event::Normalizer norm(s.traj);
  backends::MockReasoner r;
  r.add_handler("plan_operator", [](const backends::ReasonTask& t) -> std::optional<json> {
    return std::optional<json>(proposal(0.5, t.payload.contains("violation") ? 0.2 : 1.3));
  });
  const auto plan = plan_operator(s.c1, s.g1, s.c2, s.g2, r, norm);
  CHECK(plan.op.region.x == 0.2);
  CHECK(r.call_counts().at("plan_operator") == 2);

  backends::MockReasoner stuck;
  propose(stuck, proposal(0.5, 1.3));
  CHECK_THROWS_AS(plan_operator(s.c1, s.g1, s.c2, s.g2, stuck, norm), BackendError);
  CHECK(stuck.call_counts().at("plan_operator") == 2);

  json ghost = proposal(0.5);
  ghost["target_node"] = "ghost";
  backends::MockReasoner lost;
  propose(lost, ghost);
  CHECK_THROWS_AS(plan_operator(s.c1, s.g1, s.c2, s.g2, lost, norm), UnknownNodeError);

  json slow = proposal(0.5);
  slow["duration"] = 100.0;
  backends::MockReasoner r2;
  propose(r2, slow);
  CHECK(plan_operator(s.c1, s.g1, s.c2, s.g2, r2, norm).span.d == 10.0);
  CHECK_THROWS_AS(plan_operator(s.c2, s.g2, s.c1, s.g1, r2, norm), PreconditionError);
}

TEST_CASE("clamp soundness over random proposals") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    auto s = setup(u(rng) * 0.75);
    const event::Normalizer norm(s.traj);
    backends::MockReasoner r;
  propose(r, proposal(u(rng) * 2 - 0.5));
    const auto plan = plan_operator(s.c1, s.g1, s.c2, s.g2, r, norm);
    CHECK(plan.op.bounds.first >= 0.0);
    CHECK(plan.op.bounds.second <= 1.0);
    CHECK(plan.op.magnitude >= plan.op.bounds.first);
    CHECK(plan.op.magnitude <= plan.op.bounds.second);
  }
}

TEST_CASE("region checks") {
  CHECK(Region{}.problems().empty());
  CHECK_FALSE(Region{1.3, 0, 0.1, 0.1}.problems().empty());
  CHECK_FALSE(Region{0.5, 0.5, 0.4, 0.4, 0.2, 0}.problems().empty());
  const EditOperator op{OperatorKind::kDrag, "ice", {0.1, 0.2, 0.3, 0.4, 0.1, 0}, 0.5, {0.4, 0.6}, "drag", {{"k", 1}}};
  CHECK(EditOperator::from_json(op.to_json()) == op);
}

TEST_CASE("keyframe synthesis on a litmus chain") {
  backends::MockImageEditor editor(60.0);
  backends::ImageStore store;
  std::vector<EditOperator> ops;
  for (double m : {0.5, 0.5}) {
    EditOperator op;
    op.kind = OperatorKind::kRecolor;
    op.target_node = "solution";
    op.magnitude = m;
    op.bounds = {0.4, 0.6};
    op.instruction = "recolor the solution";
    op.attributes = {{"target_color", "red"}};
    ops.push_back(op);
  }
  const auto frames = synthesize_keyframes(3, ops, "a purple litmus solution in a beaker", editor, store);
  REQUIRE(frames.size() == 3);
  CHECK(frames[0].source == KeyframeSource::kGenerated);
  CHECK(frames[1].source == KeyframeSource::kEdited);
  CHECK(frames[2].op == ops[1]);
  std::vector<double> dist;
  for (const auto& k : frames) dist.push_back(red_distance(backends::mean_hue(*store.get(k.image))));
  CHECK(dist[1] < dist[0]);
  CHECK(dist[2] < dist[1]);
  CHECK(editor.edit_calls() == 2);

  const auto again = synthesize_keyframes(3, ops, "a purple litmus solution in a beaker", editor, store);
  CHECK(editor.edit_calls() == 2);
  CHECK(again[2].image == frames[2].image);

  const auto single = synthesize_keyframes(1, {}, "a red ball", editor, store);
  CHECK(single.size() == 1);
  CHECK(editor.edit_calls() == 2);
  CHECK_THROWS_AS(synthesize_keyframes(3, {ops[0]}, "x", editor, store), PreconditionError);
}

namespace {

class ShrinkingEditor : public backends::ImageEditBackend {
 protected:
  backends::Image do_generate(std::string_view, int w, int h) override { return backends::Image::filled(w, h, {1, 0, 0}); }
  backends::Image do_edit(const backends::Image&, const backends::EditCue&, std::string_view) override {
    return backends::Image::filled(8, 8, {0, 0, 1});
  }
};

}  // namespace

TEST_CASE("editor shape mismatch") {
  ShrinkingEditor editor;
  backends::ImageStore store;
  EditOperator op;
  op.magnitude = 0.5;
  op.bounds = {0.4, 0.6};
  CHECK_THROWS_AS(synthesize_keyframes(2, {op}, "red", editor, store), ImageShapeError);
}

TEST_CASE("interpolation") {
  const auto frames = interpolate_n({0, 0}, {3, 6}, 2);
  CHECK(frames == std::vector<Latent>{{1, 2}, {2, 4}});
  CHECK(interpolate({0, 0}, {3, 6}, TimeSpan{0.75}, 4.0) == frames);
  CHECK(interpolate({0, 0}, {3, 6}, TimeSpan{0.25}, 4.0).empty());
  CHECK(interpolate({0, 0}, {3, 6}, TimeSpan{0.1}, 4.0).empty());
  for (const auto& f : interpolate_n({1.5, -2}, {1.5, -2}, 5)) CHECK(f == Latent{1.5, -2});
  CHECK_THROWS_AS(interpolate_n({0, 0}, {1}, 2), LengthMismatchError);

  for (double x : {0.5, 1.0, 1.49, 1.5, 2.0, 10.0}) {
    CAPTURE(x);
    CHECK(interior_count(x, 1.0) == oracle_interior(x));
    CHECK(interior_count(x / 4.0, 4.0) == oracle_interior(x));
  }

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 50; ++i) {
    Latent a(6), b(6);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    const std::size_t n = 1 + rng() % 8;
    const auto ab = interpolate_n(a, b, n), ba = interpolate_n(b, a, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < 6; ++k) CHECK(ab[j][k] == doctest::Approx(ba[n - 1 - j][k]));
  }
}

TEST_CASE("frame budget fitting") {
  const auto fit = fit_counts({3, 1, 0}, {1, 1, 1}, 41);
  std::size_t total = 4;
  for (auto c : fit) total += c;
  CHECK(total == 41);
  CHECK(fit[0] > fit[1]);
  CHECK(fit[2] == 0);
  const auto even = fit_counts({0, 0}, {1, 3}, 11);
  CHECK(even == std::vector<std::size_t>{2, 6});
  CHECK_THROWS_AS(fit_counts({1, 1}, {1, 1}, 2), TargetLengthInfeasibleError);
}

TEST_CASE("noise level from the timestep fraction") {
  double abar = 1.0;
  const int k = 700;
  for (int i = 0; i < k; ++i) abar *= 1.0 - (1e-4 + (0.02 - 1e-4) * i / 999.0);
  CHECK(sigma_from_tau(0.7) == doctest::Approx(std::sqrt(1.0 - abar)).epsilon(1e-3));
  CHECK(noise_multiplier(2.0, NoiseMode::kStandard) == 2.0);
  CHECK(noise_multiplier(2.0, NoiseMode::kPaperLiteral) == 4.0);
}

TEST_CASE("schedule construction") {
  backends::MockImageEditor editor;
  backends::MockLatentEncoder encoder(12);
  encoder.set_expected_shape(64, 36);
  backends::ImageStore store;
  EditOperator op;
  op.kind = OperatorKind::kRecolor;
  op.magnitude = 0.5;
  op.bounds = {0.4, 0.6};
  op.attributes = {{"target_color", "blue"}};
  const auto frames = synthesize_keyframes(3, {op, op}, "a red ball", editor, store);
  const std::vector<TimeSpan> spans = {{1.0}, {2.0}};

  ScheduleOptions clean_opts;
  clean_opts.target_frames = 0;
  const auto clean = build_schedule(frames, spans, encoder, store, clean_opts);
  CHECK(clean.schedule.frames.size() == 1 + 3 + 1 + 7 + 1);
  CHECK(clean.schedule.frames == clean.clean);
  CHECK(clean.schedule.frames.front() == clean.keyframe_latents[0]);
  CHECK(clean.schedule.frames[4] == clean.keyframe_latents[1]);
  CHECK(clean.schedule.frames.back() == clean.keyframe_latents[2]);
  CHECK(clean.schedule.segment_index[4] == std::pair<int, int>{2, 2});
  CHECK(clean.schedule.segment_index[2] == std::pair<int, int>{1, 2});

  ScheduleOptions fitted = clean_opts;
  fitted.target_frames = 41;
  const auto fit = build_schedule(frames, spans, encoder, store, fitted);
  CHECK(fit.schedule.frames.size() == 41);

  ScheduleOptions noisy = fitted;
  noisy.sigma = 1.0;
  noisy.seed = 42;
  const auto a = build_schedule(frames, spans, encoder, store, noisy);
  const auto b = build_schedule(frames, spans, encoder, store, noisy);
  CHECK(a.schedule.serialize() == b.schedule.serialize());
  CHECK(a.clean == fit.clean);
  CHECK(a.schedule.frames != a.clean);
  noisy.seed = 43;
  CHECK(build_schedule(frames, spans, encoder, store, noisy).schedule.serialize() != a.schedule.serialize());

  fitted.target_frames = 2;
  CHECK_THROWS_AS(build_schedule(frames, spans, encoder, store, fitted), TargetLengthInfeasibleError);
  CHECK_THROWS_AS(build_schedule(frames, {spans[0]}, encoder, store, clean_opts), PreconditionError);
}

TEST_CASE("schedule container") {
  LatentSchedule s;
  s.dim = 2;
  s.frames = {{1, 2}, {3, 4}, {5, 6}};
  s.segment_index = {{1, 1}, {1, 2}, {2, 2}};
  s.sigma = 0.5;
  s.seed = 0x0102030405060708ULL;
  s.mode = NoiseMode::kPaperLiteral;
  const auto bytes = s.serialize();
  REQUIRE(bytes.size() == 4 + 4 + 4 + 4 + 3 * 2 * 4 + 8 + 8 + 1);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CCLS");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 3);
  CHECK(bytes[12] == 2);
  CHECK(bytes[16 + 24] == 0x08);
  CHECK(bytes.back() == 1);
  const auto back = LatentSchedule::deserialize(bytes);
  CHECK(back.frames == s.frames);
  CHECK(back.seed == s.seed);
  CHECK(back.sigma == s.sigma);
  CHECK(back.mode == s.mode);
  CHECK(back.serialize() == bytes);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(LatentSchedule::deserialize(bad), SchemaError);

  const auto p = pure_noise_schedule(5, 3, 9);
  CHECK(p.frames.size() == 5);
  CHECK(p.serialize() == pure_noise_schedule(5, 3, 9).serialize());
}

TEST_CASE("noise statistics") {
  const std::vector<Latent> zero(1000, Latent(100, 0.0));
  for (auto [mode, sigma, expected] : {std::tuple{NoiseMode::kStandard, 2.0, 2.0},
                                       std::tuple{NoiseMode::kPaperLiteral, 2.0, 4.0},
                                       std::tuple{NoiseMode::kStandard, 0.5, 0.5}}) {
    const auto noised = add_noise(zero, sigma, mode, 17);
    double sum = 0, sq = 0;
    for (const auto& f : noised)
      for (double v : f) {
        sum += v;
        sq += v * v;
      }
    const double n = 1e5;
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) < 3 * expected / std::sqrt(n));
    CHECK(std::abs(sd - expected) < 3 * expected / std::sqrt(2 * n));
  }
  CHECK(add_noise(zero, 0.0, NoiseMode::kStandard, 1) == zero);
}
