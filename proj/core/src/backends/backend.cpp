#include "cce/backends/backend.hpp"

#include "cce/backends/schema.hpp"
#include "cce/error.hpp"
#include "cce/util/digest.hpp"

namespace cce::backends {

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kReasoning: return "reasoning";
    case BackendKind::kTextEncoder: return "text_encoder";
    case BackendKind::kImageEditor: return "image_editor";
    case BackendKind::kLatentEncoder: return "latent_encoder";
    case BackendKind::kDenoiser: return "denoiser";
  }
  return "";
}

BackendKind backend_kind_from_string(std::string_view s) {
  for (auto k : {BackendKind::kReasoning, BackendKind::kTextEncoder, BackendKind::kImageEditor,
                 BackendKind::kLatentEncoder, BackendKind::kDenoiser})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown backend kind '" + std::string(s) + "'");
}

void BackendDescriptor::validate() const {
  if (endpoint.empty()) throw ConfigError(to_string(kind) + ": empty endpoint");
  for (const auto& [name, value] : dims)
    if (value <= 0)
      throw ConfigError(to_string(kind) + ": dimension '" + name + "' must be positive");
  if (!is_mock() && timeout_s <= 0.0)
    throw ConfigError(to_string(kind) + ": timeout must be positive");
  if (max_retries < 1) throw ConfigError(to_string(kind) + ": max_retries must be >= 1");
}

void CallLog::record(std::string entry) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(entry));
}

std::vector<std::string> CallLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::string idempotency_key(std::string_view route, const nlohmann::json& payload) {
  Sha256 h;
  h.update(route).update("\n").update(canonical_dump(payload));
  return h.hex_digest();
}

nlohmann::json ReasoningBackend::reason(const ReasonTask& task, const nlohmann::json& schema) {
  if (schema.is_null() || (schema.is_object() && schema.empty()))
    throw PreconditionError("reason('" + task.kind + "') called without an output schema");
  if (log_) log_->record("reason:" + task.kind + ":" + idempotency_key(task.kind, task.payload));
  std::string last_error;
  for (int attempt = 0; attempt <= schema_retries_; ++attempt) {
    ReasonTask t = task;
    if (!last_error.empty()) t.payload["schema_violation"] = last_error;
    nlohmann::json out = do_reason(t, schema);
    try {
      validate_schema(out, schema);
      return out;
    } catch (const SchemaError& e) {
      last_error = e.what();
    }
  }
  throw SchemaError("reason('" + task.kind + "'): " + last_error);
}

std::vector<double> TextEncoderBackend::encode_text(std::string_view text) {
  if (text.empty()) throw PreconditionError("encode_text: empty text");
  if (log_) log_->record("encode-text:" + idempotency_key("encode-text", std::string(text)));
  std::vector<double> v = do_encode(text);
  if (v.size() != dim())
    throw DimensionMismatchError("text encoder returned " + std::to_string(v.size()) +
                                 " values, declared " + std::to_string(dim()));
  return v;
}

std::string ImageEditBackend::generate_entry(std::string_view prompt, int width, int height) {
  return "generate:" + idempotency_key("generate", {{"prompt", prompt}, {"width", width}, {"height", height}});
}

std::string ImageEditBackend::edit_entry(const std::string& source_digest, const nlohmann::json& op,
                                         std::string_view instruction) {
  return "edit-image:" +
         idempotency_key("edit-image", {{"image", source_digest}, {"op", op}, {"instruction", instruction}});
}

void ImageEditBackend::record_cached(const std::string& entry) {
  if (log_) log_->record(entry);
}

Image ImageEditBackend::generate(std::string_view prompt, int width, int height) {
  if (width <= 0 || height <= 0) throw PreconditionError("generate: non-positive size");
  if (log_) log_->record(generate_entry(prompt, width, height));
  Image out = do_generate(prompt, width, height);
  if (out.width != width || out.height != height)
    throw ImageShapeError("generated " + std::to_string(out.width) + "x" +
                          std::to_string(out.height) + ", expected " +
                          std::to_string(width) + "x" + std::to_string(height));
  return out;
}

Image ImageEditBackend::edit(const Image& source, const EditCue& cue, std::string_view instruction) {
  if (log_) log_->record(edit_entry(source.digest(), cue.op, instruction));
  Image out = do_edit(source, cue, instruction);
  if (out.width != source.width || out.height != source.height)
    throw ImageShapeError("editor returned " + std::to_string(out.width) + "x" +
                          std::to_string(out.height) + " for a " + std::to_string(source.width) +
                          "x" + std::to_string(source.height) + " source");
  return out;
}

std::vector<double> LatentEncoderBackend::encode_image(const Image& image) {
  if (expected_width_ > 0 &&
      (image.width != expected_width_ || image.height != expected_height_))
    throw ImageShapeError("encode_image: " + std::to_string(image.width) + "x" +
                          std::to_string(image.height) + " does not match run resolution " +
                          std::to_string(expected_width_) + "x" + std::to_string(expected_height_));
  if (log_) log_->record("encode-image:" + image.digest());
  std::vector<double> v = do_encode(image);
  if (v.size() != dim())
    throw DimensionMismatchError("latent encoder returned " + std::to_string(v.size()) +
                                 " values, declared " + std::to_string(dim()));
  return v;
}

VideoHandle DenoiserBackend::denoise(const DenoiseRequest& request) {
  if (request.schedule_run_id != request.embedding_run_id)
    throw PreconditionError("denoise: schedule from run '" + request.schedule_run_id +
                            "' but embedding from run '" + request.embedding_run_id + "'");
  if (log_) log_->record("denoise:" + sha256_hex(request.schedule_bytes));
  return do_denoise(request);
}

}  // namespace cce::backends
