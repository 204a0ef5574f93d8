#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cce/backends/backend.hpp"
#include "cce/backends/image.hpp"
#include "cce/keyframe/operator.hpp"

namespace cce::keyframe {

enum class KeyframeSource { kGenerated, kEdited };

struct Keyframe {
  int t_index = 1;
  backends::ImageRef image;
  KeyframeSource source = KeyframeSource::kGenerated;
  /// Set for edited keyframes.
  std::optional<EditOperator> op;

  nlohmann::json to_json() const;
  static Keyframe from_json(const nlohmann::json& j);
};

/// Operator cue drawn on a blank canvas: region outline, plus a stroke from
/// the region centre along (dx, dy) for drags. Stroke intensity follows the
/// magnitude.
backends::Image render_cue(const EditOperator& op, int width, int height);

/// Cache key of an edit request: (source image digest, operator, instruction).
std::string edit_request_key(const std::string& image_digest, const EditOperator& op);

struct SynthesisOptions {
  int width = 64;
  int height = 36;
  int first_t_index = 1;
};

/// v_1 generated from first_prompt, then v_t = Edit(v_{t-1}; O_t). Images
/// land in `store`; identical requests are served from its request memo.
std::vector<Keyframe> synthesize_keyframes(std::size_t event_count, const std::vector<EditOperator>& operators,
                                           const std::string& first_prompt, backends::ImageEditBackend& editor,
                                           backends::ImageStore& store, const SynthesisOptions& options = {});

}  // namespace cce::keyframe
