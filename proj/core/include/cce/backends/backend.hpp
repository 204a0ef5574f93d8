#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/backends/image.hpp"

namespace cce::backends {

enum class BackendKind { kReasoning, kTextEncoder, kImageEditor, kLatentEncoder, kDenoiser };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view s);

struct BackendDescriptor {
  BackendKind kind = BackendKind::kReasoning;
  /// "mock" or a base URL such as "http://127.0.0.1:8080".
  std::string endpoint = "mock";
  std::string model_id = "mock";
  /// Declared vector dimensions, e.g. {"text": 8} or {"latent": 48}.
  std::map<std::string, int> dims;
  double timeout_s = 30.0;
  int max_retries = 3;
  std::string token;

  bool is_mock() const { return endpoint == "mock"; }
  /// Throws ConfigError when dims are non-positive or the endpoint is empty.
  void validate() const;
};

/// Ordered record of idempotency keys issued during one run. Shared by all
/// backends of a suite; safe for concurrent appends.
class CallLog {
 public:
  void record(std::string entry);
  std::vector<std::string> entries() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> entries_;
};

/// Idempotency key of a request: SHA-256 of "<route>\n<canonical payload>".
std::string idempotency_key(std::string_view route, const nlohmann::json& payload);

struct ReasonTask {
  std::string kind;
  nlohmann::json payload;
};

/// Structured-output language model. `reason` rejects empty schemas,
/// validates every response and retries on schema violations.
class ReasoningBackend {
 public:
  virtual ~ReasoningBackend() = default;

  nlohmann::json reason(const ReasonTask& task, const nlohmann::json& schema);

  void set_call_log(std::shared_ptr<CallLog> log) { log_ = std::move(log); }
  void set_schema_retries(int n) { schema_retries_ = n; }
  virtual std::string model_id() const = 0;

 protected:
  virtual nlohmann::json do_reason(const ReasonTask& task, const nlohmann::json& schema) = 0;

 private:
  std::shared_ptr<CallLog> log_;
  int schema_retries_ = 1;
};

class TextEncoderBackend {
 public:
  virtual ~TextEncoderBackend() = default;

  /// Rejects empty text; checks the returned length against dim().
  std::vector<double> encode_text(std::string_view text);

  virtual std::size_t dim() const = 0;
  void set_call_log(std::shared_ptr<CallLog> log) { log_ = std::move(log); }

 protected:
  virtual std::vector<double> do_encode(std::string_view text) = 0;

 private:
  std::shared_ptr<CallLog> log_;
};

/// Rendering of an edit operator handed to the editor alongside the
/// source image: the overlay raster plus the operator's parameters.
struct EditCue {
  Image overlay;
  nlohmann::json op;
};

class ImageEditBackend {
 public:
  virtual ~ImageEditBackend() = default;

  Image generate(std::string_view prompt, int width, int height);
  /// Output must match the source dimensions (ImageShapeError otherwise).
  Image edit(const Image& source, const EditCue& cue, std::string_view instruction);

  static std::string generate_entry(std::string_view prompt, int width, int height);
  static std::string edit_entry(const std::string& source_digest, const nlohmann::json& op,
                                std::string_view instruction);
  /// Logs a request answered from an image cache, so the call log does not
  /// depend on cache state.
  void record_cached(const std::string& entry);

  void set_call_log(std::shared_ptr<CallLog> log) { log_ = std::move(log); }

 protected:
  virtual Image do_generate(std::string_view prompt, int width, int height) = 0;
  virtual Image do_edit(const Image& source, const EditCue& cue,
                        std::string_view instruction) = 0;

 private:
  std::shared_ptr<CallLog> log_;
};

class LatentEncoderBackend {
 public:
  virtual ~LatentEncoderBackend() = default;

  std::vector<double> encode_image(const Image& image);

  virtual std::size_t dim() const = 0;
  void set_expected_shape(int width, int height) {
    expected_width_ = width;
    expected_height_ = height;
  }
  void set_call_log(std::shared_ptr<CallLog> log) { log_ = std::move(log); }

 protected:
  virtual std::vector<double> do_encode(const Image& image) = 0;

 private:
  std::shared_ptr<CallLog> log_;
  int expected_width_ = 0;
  int expected_height_ = 0;
};

struct DenoiseRequest {
  std::string schedule_run_id;
  std::string embedding_run_id;
  /// LatentSchedule in its binary container form.
  std::vector<std::uint8_t> schedule_bytes;
  std::uint32_t frame_count = 0;
  std::uint32_t dim = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> positive;
  std::vector<double> negative;
};

struct VideoHandle {
  std::string uri;
  nlohmann::json metadata;
};

class DenoiserBackend {
 public:
  virtual ~DenoiserBackend() = default;

  /// Rejects requests whose schedule and embedding come from different runs.
  VideoHandle denoise(const DenoiseRequest& request);

  void set_call_log(std::shared_ptr<CallLog> log) { log_ = std::move(log); }

 protected:
  virtual VideoHandle do_denoise(const DenoiseRequest& request) = 0;

 private:
  std::shared_ptr<CallLog> log_;
};

}  // namespace cce::backends
