#include "cce/backends/http_backends.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>

#include "cce/error.hpp"
#include "cce/util/digest.hpp"

namespace cce::backends {

using nlohmann::json;

namespace {

[[noreturn]] void raise_remote(const json& error, const std::string& route) {
  const std::string code = error.value("code", std::string("unknown"));
  const std::string msg = route + ": " + code + ": " + error.value("message", std::string());
  if (code == "image_shape") throw ImageShapeError(msg);
  if (code == "schema") throw SchemaError(msg);
  if (code == "dimension_mismatch") throw DimensionMismatchError(msg);
  throw BackendError(msg);
}

std::string image_b64(const Image& image) {
  const auto png = encode_png(image);
  return base64_encode(png);
}

Image image_from_b64(const json& j) {
  return decode_png(base64_decode(j.get<std::string>()));
}

std::size_t declared_dim(ShimClient& client, const char* kind) {
  const json caps = client.capabilities();
  const json dims = caps.value("dims", json::object());
  if (!dims.contains(kind) || !dims.at(kind).is_number_integer() || dims.at(kind).get<int>() <= 0)
    throw BackendError(std::string("shim does not declare a dimension for ") + kind);
  return dims.at(kind).get<std::size_t>();
}

}  // namespace

ShimClient::ShimClient(HttpOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) throw ConfigError("shim client needs a base URL");
  if (options_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

int ShimClient::network_calls() const {
  std::lock_guard lock(mu_);
  return network_calls_;
}

std::chrono::duration<double> ShimClient::backoff(int attempt) {
  double factor = 1.0;
  if (options_.jitter) {
    std::lock_guard lock(mu_);
    factor = std::uniform_real_distribution<double>(0.5, 1.5)(jitter_rng_);
  }
  return std::chrono::duration<double>(options_.backoff_base_s * std::pow(2.0, attempt) * factor);
}

json ShimClient::send(const std::string& method, const std::string& route, const json* body) {
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(backoff(attempt - 1));
    httplib::Client cli(options_.base_url);
    const auto secs = static_cast<time_t>(options_.timeout_s);
    const auto usecs = static_cast<time_t>((options_.timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    if (!options_.token.empty()) cli.set_bearer_token_auth(options_.token);
    {
      std::lock_guard lock(mu_);
      ++network_calls_;
    }
    auto res = method == "GET" ? cli.Get(route) : cli.Post(route, body->dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::parse_error&) {
      last_error = "HTTP " + std::to_string(res->status) + " with non-JSON body";
      if (res->status >= 500) continue;
      throw BackendError(route + ": " + last_error);
    }
    if (parsed.value("ok", false)) return parsed.value("payload", json::object());
    const json error = parsed.value("error", json::object());
    if (res->status >= 500 && res->status != 501) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + error.dump();
      continue;
    }
    raise_remote(error, route);
  }
  throw BackendError(route + ": failed after " + std::to_string(options_.max_attempts) +
                     " attempts: " + last_error);
}

json ShimClient::post(const std::string& route, const json& body) {
  const std::string key = idempotency_key(route, body);
  std::promise<json> promise;
  std::shared_future<json> shared;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      shared = it->second;
    } else {
      shared = promise.get_future().share();
      cache_.emplace(key, shared);
      owner = true;
    }
  }
  if (!owner) return shared.get();
  try {
    json out = send("POST", route, &body);
    promise.set_value(out);
    return out;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mu_);
    cache_.erase(key);
    throw;
  }
}

json ShimClient::capabilities() {
  {
    std::lock_guard lock(mu_);
    if (capabilities_) return *capabilities_;
  }
  json caps = send("GET", "/v1/capabilities", nullptr);
  std::lock_guard lock(mu_);
  capabilities_ = caps;
  return caps;
}

json HttpReasoner::do_reason(const ReasonTask& task, const json& schema) {
  return client_->post("/v1/reason", {{"task", task.kind}, {"payload", task.payload}, {"schema", schema}});
}

HttpTextEncoder::HttpTextEncoder(std::shared_ptr<ShimClient> client)
    : client_(std::move(client)), dim_(declared_dim(*client_, "text_encoder")) {}

std::vector<double> HttpTextEncoder::do_encode(std::string_view text) {
  return client_->post("/v1/encode-text", {{"text", text}}).at("vector").get<std::vector<double>>();
}

Image HttpImageEditor::do_generate(std::string_view prompt, int width, int height) {
  const json out = client_->post("/v1/edit-image",
                                 {{"mode", "generate"}, {"prompt", prompt}, {"width", width}, {"height", height}});
  return image_from_b64(out.at("image"));
}

Image HttpImageEditor::do_edit(const Image& source, const EditCue& cue, std::string_view instruction) {
  json body = {{"mode", "edit"},
               {"image", image_b64(source)},
               {"op", cue.op},
               {"instruction", instruction},
               {"width", source.width},
               {"height", source.height}};
  if (cue.overlay.width > 0) body["overlay"] = image_b64(cue.overlay);
  return image_from_b64(client_->post("/v1/edit-image", body).at("image"));
}

HttpLatentEncoder::HttpLatentEncoder(std::shared_ptr<ShimClient> client)
    : client_(std::move(client)), dim_(declared_dim(*client_, "latent_encoder")) {}

std::vector<double> HttpLatentEncoder::do_encode(const Image& image) {
  return client_->post("/v1/encode-image", {{"image", image_b64(image)}})
      .at("latent")
      .get<std::vector<double>>();
}

VideoHandle HttpDenoiser::do_denoise(const DenoiseRequest& r) {
  const json out = client_->post("/v1/denoise", {{"schedule", base64_encode(r.schedule_bytes)},
                                                 {"schedule_run_id", r.schedule_run_id},
                                                 {"embedding_run_id", r.embedding_run_id},
                                                 {"frame_count", r.frame_count},
                                                 {"dim", r.dim},
                                                 {"sigma", r.sigma},
                                                 {"seed", r.seed},
                                                 {"positive", r.positive},
                                                 {"negative", r.negative}});
  return {out.at("uri").get<std::string>(), out.value("metadata", json::object())};
}

}  // namespace cce::backends
