#pragma once

#include <chrono>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "cce/backends/backend.hpp"

namespace cce::backends {

struct HttpOptions {
  std::string base_url;
  std::string token;
  double timeout_s = 30.0;
  int max_attempts = 3;
  double backoff_base_s = 0.5;
  bool jitter = true;
};

/// JSON-over-HTTP client for the shim protocol. Responses are cached by
/// idempotency key; concurrent identical requests share one network call.
/// Transport failures and 5xx responses are retried with exponential
/// backoff; application errors are not.
class ShimClient {
 public:
  explicit ShimClient(HttpOptions options);

  nlohmann::json post(const std::string& route, const nlohmann::json& body);
  /// `{kinds, dims, model_ids}`; fetched once.
  nlohmann::json capabilities();

  int network_calls() const;
  const HttpOptions& options() const { return options_; }

 private:
  nlohmann::json send(const std::string& method, const std::string& route,
                      const nlohmann::json* body);
  std::chrono::duration<double> backoff(int attempt);

  HttpOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<nlohmann::json>> cache_;
  std::optional<nlohmann::json> capabilities_;
  int network_calls_ = 0;
  std::mt19937_64 jitter_rng_{0x5eed};
};

class HttpReasoner : public ReasoningBackend {
 public:
  HttpReasoner(std::shared_ptr<ShimClient> client, std::string model_id)
      : client_(std::move(client)), model_id_(std::move(model_id)) {}
  std::string model_id() const override { return model_id_; }

 protected:
  nlohmann::json do_reason(const ReasonTask& task, const nlohmann::json& schema) override;

 private:
  std::shared_ptr<ShimClient> client_;
  std::string model_id_;
};

class HttpTextEncoder : public TextEncoderBackend {
 public:
  /// Dimension comes from the capabilities handshake.
  explicit HttpTextEncoder(std::shared_ptr<ShimClient> client);
  std::size_t dim() const override { return dim_; }

 protected:
  std::vector<double> do_encode(std::string_view text) override;

 private:
  std::shared_ptr<ShimClient> client_;
  std::size_t dim_;
};

class HttpImageEditor : public ImageEditBackend {
 public:
  explicit HttpImageEditor(std::shared_ptr<ShimClient> client) : client_(std::move(client)) {}

 protected:
  Image do_generate(std::string_view prompt, int width, int height) override;
  Image do_edit(const Image& source, const EditCue& cue, std::string_view instruction) override;

 private:
  std::shared_ptr<ShimClient> client_;
};

class HttpLatentEncoder : public LatentEncoderBackend {
 public:
  explicit HttpLatentEncoder(std::shared_ptr<ShimClient> client);
  std::size_t dim() const override { return dim_; }

 protected:
  std::vector<double> do_encode(const Image& image) override;

 private:
  std::shared_ptr<ShimClient> client_;
  std::size_t dim_;
};

class HttpDenoiser : public DenoiserBackend {
 public:
  explicit HttpDenoiser(std::shared_ptr<ShimClient> client) : client_(std::move(client)) {}

 protected:
  VideoHandle do_denoise(const DenoiseRequest& request) override;

 private:
  std::shared_ptr<ShimClient> client_;
};

}  // namespace cce::backends
