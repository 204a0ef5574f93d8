#include "cce/keyframe/keyframes.hpp"

#include <algorithm>
#include <cmath>

#include "cce/error.hpp"
#include "cce/util/digest.hpp"

namespace cce::keyframe {

using nlohmann::json;

json Keyframe::to_json() const {
  json j = {{"t_index", t_index},
            {"image", {{"digest", image.digest}, {"width", image.width}, {"height", image.height}}},
            {"source", source == KeyframeSource::kGenerated ? "generated" : "edited"}};
  if (op) j["operator"] = op->to_json();
  return j;
}

Keyframe Keyframe::from_json(const json& j) {
  Keyframe k;
  k.t_index = j.at("t_index").get<int>();
  const auto& img = j.at("image");
  k.image = {img.at("digest").get<std::string>(), img.at("width").get<int>(), img.at("height").get<int>()};
  const auto source = j.at("source").get<std::string>();
  if (source != "generated" && source != "edited") throw SchemaError("unknown keyframe source '" + source + "'");
  k.source = source == "generated" ? KeyframeSource::kGenerated : KeyframeSource::kEdited;
  if (j.contains("operator")) k.op = EditOperator::from_json(j.at("operator"));
  return k;
}

backends::Image render_cue(const EditOperator& op, int width, int height) {
  auto img = backends::Image::filled(width, height, {0.0f, 0.0f, 0.0f});
  const auto ink = static_cast<float>(0.25 + 0.75 * op.magnitude);
  auto px = [&](double u, int n) { return std::clamp(static_cast<int>(std::lround(u * (n - 1))), 0, n - 1); };
  auto plot = [&](int x, int y, std::array<float, 3> c) {
    float* p = img.at(x, y);
    for (int k = 0; k < 3; ++k) p[k] = c[k] * ink;
  };
  const auto& r = op.region;
  const int x0 = px(r.x, width), x1 = px(r.x + r.w, width);
  const int y0 = px(r.y, height), y1 = px(r.y + r.h, height);
  for (int x = x0; x <= x1; ++x) {
    plot(x, y0, {1, 1, 1});
    plot(x, y1, {1, 1, 1});
  }
  for (int y = y0; y <= y1; ++y) {
    plot(x0, y, {1, 1, 1});
    plot(x1, y, {1, 1, 1});
  }
  if (op.kind == OperatorKind::kDrag && (r.dx != 0.0 || r.dy != 0.0)) {
    const double cx = r.x + r.w / 2, cy = r.y + r.h / 2;
    const int steps = std::max(width, height);
    for (int s = 0; s <= steps; ++s) {
      const double a = static_cast<double>(s) / steps;
      plot(px(cx + a * r.dx, width), px(cy + a * r.dy, height), {1, 0, 0});
    }
  }
  return img;
}

std::string edit_request_key(const std::string& image_digest, const EditOperator& op) {
  return json_digest({{"image", image_digest}, {"operator", op.to_json()}, {"instruction", op.instruction}});
}

std::vector<Keyframe> synthesize_keyframes(std::size_t event_count, const std::vector<EditOperator>& operators,
                                           const std::string& first_prompt, backends::ImageEditBackend& editor,
                                           backends::ImageStore& store, const SynthesisOptions& options) {
  if (event_count == 0) throw PreconditionError("synthesize_keyframes: empty chain");
  if (operators.size() != event_count - 1)
    throw PreconditionError("synthesize_keyframes: " + std::to_string(operators.size()) + " operators for " +
                            std::to_string(event_count) + " events");
  if (first_prompt.empty()) throw PreconditionError("synthesize_keyframes: empty first prompt");

  auto with_t = [](int t, auto&& fn) {
    try {
      return fn();
    } catch (const BackendError& e) {
      throw BackendError("keyframe " + std::to_string(t) + ": " + e.what());
    }
  };

  std::vector<Keyframe> out;
  const int t1 = options.first_t_index;
  const std::string gen_key =
      json_digest({{"generate", first_prompt}, {"width", options.width}, {"height", options.height}});
  backends::ImageRef ref;
  if (auto hit = store.lookup_request(gen_key)) {
    ref = *hit;
    editor.record_cached(backends::ImageEditBackend::generate_entry(first_prompt, options.width, options.height));
  } else {
    ref = store.put(with_t(t1, [&] { return editor.generate(first_prompt, options.width, options.height); }));
    store.remember_request(gen_key, ref);
  }
  out.push_back({t1, ref, KeyframeSource::kGenerated, std::nullopt});

  for (std::size_t i = 0; i < operators.size(); ++i) {
    const auto& op = operators[i];
    const int t = t1 + static_cast<int>(i) + 1;
    const std::string key = edit_request_key(ref.digest, op);
    if (auto hit = store.lookup_request(key)) {
      editor.record_cached(backends::ImageEditBackend::edit_entry(ref.digest, op.to_json(), op.instruction));
      ref = *hit;
    } else {
      auto source = store.get(ref);
      if (!source) throw PreconditionError("synthesize_keyframes: image " + ref.digest + " missing from store");
      const backends::EditCue cue{render_cue(op, source->width, source->height), op.to_json()};
      ref = store.put(with_t(t, [&] { return editor.edit(*source, cue, op.instruction); }));
      store.remember_request(key, ref);
    }
    out.push_back({t, ref, KeyframeSource::kEdited, op});
  }
  return out;
}

}  // namespace cce::keyframe
