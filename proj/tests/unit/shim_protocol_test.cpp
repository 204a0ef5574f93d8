#include <doctest.h>

#include <atomic>
#include <map>
#include <thread>

#include <httplib.h>

#include "cce/backends/http_backends.hpp"
#include "cce/backends/schema.hpp"
#include "cce/backends/suite.hpp"
#include "cce/error.hpp"
#include "cce/formula/retrieval.hpp"
#include "cce/keyframe/schedule.hpp"
#include "cce/util/digest.hpp"
#include "test_support.hpp"

using namespace cce;
using namespace cce::backends;
using nlohmann::json;

namespace {

bool subset(const json& want, const json& have) {
  if (!want.is_object()) return want == have;
  if (!have.is_object()) return false;
  for (const auto& [k, v] : want.items())
    if (!have.contains(k) || !subset(v, have.at(k))) return false;
  return true;
}

// Serves the recorded interactions: method, route and a subset of the body
// select a reply. Unknown requests get a 404 with code "unmatched".
class ReplayShim {
 public:
  ReplayShim() : recorded_(json::parse(cce_test::read_file(cce_test::fixtures_dir() / "shim_protocol.json"))) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) { serve(req, res); };
    server_.Get(".*", handler);
    server_.Post(".*", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ReplayShim() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int hits(const std::string& name) {
    std::lock_guard lock(mu_);
    return hits_[name];
  }
  std::string last_auth() {
    std::lock_guard lock(mu_);
    return last_auth_;
  }
  json last_body(const std::string& route) {
    std::lock_guard lock(mu_);
    return bodies_[route];
  }

 private:
  void serve(const httplib::Request& req, httplib::Response& res) {
    json body = req.body.empty() ? json() : json::parse(req.body, nullptr, false);
    for (const auto& it : recorded_.at("interactions")) {
      if (it.at("method") != req.method || it.at("route") != req.path) continue;
      if (!it.at("match").is_null() && !subset(it.at("match"), body)) continue;
      const std::string name = it.at("name");
      int n;
      {
        std::lock_guard lock(mu_);
        n = ++hits_[name];
        last_auth_ = req.get_header_value("Authorization");
        bodies_[req.path] = body;
      }
      if (it.contains("delay_ms")) std::this_thread::sleep_for(std::chrono::milliseconds(it.at("delay_ms").get<int>()));
      if (n <= it.value("fail_first", 0)) {
        res.status = 503;
        res.set_content(R"({"ok": false, "error": {"code": "overloaded", "message": "busy"}})", "application/json");
        return;
      }
      res.status = it.at("status").get<int>();
      res.set_content(it.at("response").dump(), "application/json");
      return;
    }
    res.status = 404;
    res.set_content(R"({"ok": false, "error": {"code": "unmatched", "message": "no recorded interaction"}})",
                    "application/json");
  }

  json recorded_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
  std::map<std::string, int> hits_;
  std::map<std::string, json> bodies_;
  std::string last_auth_;
};

std::shared_ptr<ShimClient> client(const ReplayShim& shim, int attempts = 3, double timeout = 5.0) {
  return std::make_shared<ShimClient>(HttpOptions{shim.url(), "secret", timeout, attempts, 0.01, true});
}

}  // namespace

TEST_CASE("handshake and text encoding") {
  ReplayShim shim;
  auto c = client(shim);
  const json caps = c->capabilities();
  CHECK(caps.at("kinds").size() == 5);
  c->capabilities();
  CHECK(shim.hits("capabilities") == 1);
  CHECK(shim.last_auth() == "Bearer secret");

  HttpTextEncoder enc(c);
  CHECK(enc.dim() == 8);
  const auto v = enc.encode_text("hello");
  CHECK(v.size() == 8);
  CHECK(v[0] == 0.125);
  CHECK(enc.encode_text("hello") == v);
  CHECK(shim.hits("encode_hello") == 1);
  CHECK_THROWS_AS(enc.encode_text("short vector"), DimensionMismatchError);
  CHECK_THROWS_AS(enc.encode_text("never recorded"), BackendError);
}

TEST_CASE("concurrent identical requests share one network call") {
  ReplayShim shim;
  auto c = client(shim);
  std::vector<std::thread> threads;
  std::atomic<int> good{0};
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&] {
      if (c->post("/v1/encode-text", {{"text", "slow"}}).at("vector").size() == 8) ++good;
    });
  for (auto& t : threads) t.join();
  CHECK(good == 8);
  CHECK(shim.hits("encode_slow") == 1);
  CHECK(c->network_calls() == 1);
}

TEST_CASE("retries and error codes") {
  ReplayShim shim;
  auto c = client(shim);
  CHECK(c->post("/v1/encode-text", {{"text", "flaky"}}).at("vector")[0] == 1.0);
  CHECK(shim.hits("encode_flaky") == 3);

  auto impatient = client(shim, 2, 0.1);
  CHECK_THROWS_AS(impatient->post("/v1/encode-text", {{"text", "slow"}}), BackendError);
  CHECK(impatient->network_calls() == 2);

  HttpReasoner reasoner(c, "gpt-oss-20b");
  const int before = c->network_calls();
  CHECK_THROWS_AS(reason_task(reasoner, Task::kClassifyLaw, {{"description", "role disabled"}}), BackendError);
  CHECK(c->network_calls() == before + 1);
  CHECK_THROWS_AS(reason_task(reasoner, Task::kClassifyLaw, {{"description", "malformed reply"}}), SchemaError);

  auto dead = std::make_shared<ShimClient>(HttpOptions{"http://127.0.0.1:1", "", 0.2, 3, 0.01, false});
  CHECK_THROWS_AS(dead->capabilities(), BackendError);
  CHECK(dead->network_calls() == 3);
  CHECK_THROWS_AS(ShimClient(HttpOptions{"", "", 1, 3}), ConfigError);
}

TEST_CASE("recorded reasoning reply") {
  ReplayShim shim;
  HttpReasoner reasoner(client(shim), "gpt-oss-20b");
  formula::Formula snell, lens;
  snell.name = "Snell's law";
  lens.name = "lens equation";
  const std::vector<const formula::Formula*> candidates = {&snell, &lens};
  formula::RetrievalFallback fallback;
  const formula::PhysicalLaw law{"refraction", formula::LawDomain::kOptics, "refraction", ""};
  const auto names = fallback.regenerate(law, candidates, "light bends entering water", reasoner);
  REQUIRE_FALSE(names.empty());
  CHECK(names[0].find("Snell") != std::string::npos);
  const json sent = shim.last_body("/v1/reason");
  CHECK(sent.at("schema") == task_schema(Task::kRegenerateFormulaNames));
}

TEST_CASE("image routes") {
  ReplayShim shim;
  auto c = client(shim);
  HttpImageEditor editor(c);
  const Image red = editor.generate("a red ball", 16, 9);
  CHECK(red.width == 16);
  CHECK(red.height == 9);
  CHECK(red.at(3, 4)[0] == 1.0f);
  CHECK_THROWS_AS(editor.generate("a wide frame", 1360, 768), ImageShapeError);

  const EditCue cue{Image::filled(16, 9, {0, 0, 0}), {{"kind", "recolor"}, {"magnitude", 0.5}}};
  const Image blue = editor.edit(red, cue, "turn it blue");
  CHECK(blue.at(0, 0)[2] == 1.0f);
  const json sent = shim.last_body("/v1/edit-image");
  CHECK(decode_png(base64_decode(sent.at("image").get<std::string>())) == red);
  CHECK(sent.at("op") == cue.op);
  CHECK(sent.contains("overlay"));
  CHECK_THROWS_AS(editor.edit(Image::filled(4, 4, {0, 0, 0}), cue, "x"), ImageShapeError);

  HttpLatentEncoder enc(c);
  CHECK(enc.dim() == 12);
  CHECK(enc.encode_image(red) == std::vector<double>(12, 0.5));
  CHECK(shim.hits("capabilities") == 1);
}

TEST_CASE("denoise route carries the schedule container") {
  ReplayShim shim;
  HttpDenoiser den(client(shim));
  keyframe::LatentSchedule s;
  s.dim = 2;
  s.frames = {{1, 2}, {3, 4}};
  s.segment_index = {{1, 1}, {1, 2}};
  DenoiseRequest r{"run-1", "run-1", s.serialize(), 2, 2, 0.5, 7, {0.1}, {0.2}};
  const auto handle = den.denoise(r);
  CHECK(handle.uri == "/srv/shim/out/run-1.mp4");
  CHECK(handle.metadata.at("fps") == 8);
  const json sent = shim.last_body("/v1/denoise");
  CHECK(keyframe::LatentSchedule::deserialize(base64_decode(sent.at("schedule").get<std::string>())).frames == s.frames);
  CHECK(sent.at("seed") == 7);
  r.embedding_run_id = "run-2";
  CHECK_THROWS_AS(den.denoise(r), PreconditionError);
}

TEST_CASE("live descriptors are interchangeable with mocks") {
  ReplayShim shim;
  auto descriptors = mock_descriptors(8, 12);
  for (auto& d : descriptors) {
    if (d.kind == BackendKind::kReasoning) continue;
    d.endpoint = shim.url();
    d.max_retries = 1;
  }
  auto suite = make_suite(descriptors);
  CHECK(suite.text_encoder->encode_text("hello").size() == 8);
  CHECK(suite.latent_encoder->dim() == 12);
  CHECK(shim.hits("capabilities") == 1);
  CHECK(suite.call_log->entries().size() == 1);
}
