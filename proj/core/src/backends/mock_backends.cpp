#include "cce/backends/mock_backends.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "cce/error.hpp"
#include "cce/util/digest.hpp"
#include "cce/util/rng.hpp"

namespace cce::backends {
namespace {

struct Rect {
  int x0, y0, x1, y1;
};

double num(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.is_object()) return fallback;
  auto it = j.find(key);
  return it != j.end() && it->is_number() ? it->get<double>() : fallback;
}

Rect region_rect(const nlohmann::json& region, int w, int h) {
  const double x = num(region, "x", 0.0), y = num(region, "y", 0.0);
  const double rw = num(region, "w", 1.0), rh = num(region, "h", 1.0);
  auto px = [](double v, int n) { return std::clamp(static_cast<int>(std::lround(v * n)), 0, n); };
  return {px(x, w), px(y, h), px(x + rw, w), px(y + rh, h)};
}

std::string attribute(const nlohmann::json& op, const char* key, const std::string& fallback) {
  const auto& attrs = op.contains("attributes") ? op.at("attributes") : nlohmann::json::object();
  auto it = attrs.find(key);
  return it != attrs.end() && it->is_string() ? it->get<std::string>() : fallback;
}

double signed_arc(double from, double to) {
  double d = std::fmod(to - from, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d <= -180.0) d += 360.0;
  return d;
}

void recolor(Image& img, const Rect& r, double magnitude, double max_shift, const std::string& target) {
  std::optional<double> target_hue;
  if (auto c = named_color(target)) target_hue = rgb_to_hsv((*c)[0], (*c)[1], (*c)[2]).h;
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x) {
      float* p = img.at(x, y);
      Hsv hsv = rgb_to_hsv(p[0], p[1], p[2]);
      double shift = magnitude * max_shift;
      if (target_hue) {
        const double arc = signed_arc(hsv.h, *target_hue);
        shift = std::copysign(std::min(shift, std::abs(arc)), arc);
      }
      hsv.h = std::fmod(hsv.h + shift + 360.0, 360.0);
      const auto rgb = hsv_to_rgb(hsv);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(rgb[c]);
    }
}

void blend(Image& img, const Rect& r, double magnitude, const std::array<float, 3>& fill) {
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x) {
      float* p = img.at(x, y);
      for (int c = 0; c < 3; ++c)
        p[c] = static_cast<float>((1.0 - magnitude) * p[c] + magnitude * fill[c]);
    }
}

void drag(Image& img, const Image& src, const Rect& r, int dx, int dy) {
  const float* bg = src.at(0, 0);
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x) std::copy(bg, bg + 3, img.at(x, y));
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x) {
      const int tx = x + dx, ty = y + dy;
      if (tx < 0 || ty < 0 || tx >= img.width || ty >= img.height) continue;
      const float* s = src.at(x, y);
      std::copy(s, s + 3, img.at(tx, ty));
    }
}

void resize(Image& img, const Image& src, const Rect& r, double scale) {
  const double cx = 0.5 * (r.x0 + r.x1), cy = 0.5 * (r.y0 + r.y1);
  const float* bg = src.at(0, 0);
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x) std::copy(bg, bg + 3, img.at(x, y));
  const int nx0 = std::max(0, static_cast<int>(std::floor(cx - (cx - r.x0) * scale)));
  const int nx1 = std::min(img.width, static_cast<int>(std::ceil(cx + (r.x1 - cx) * scale)));
  const int ny0 = std::max(0, static_cast<int>(std::floor(cy - (cy - r.y0) * scale)));
  const int ny1 = std::min(img.height, static_cast<int>(std::ceil(cy + (r.y1 - cy) * scale)));
  for (int y = ny0; y < ny1; ++y)
    for (int x = nx0; x < nx1; ++x) {
      const int sx = static_cast<int>(std::floor(cx + (x + 0.5 - cx) / scale));
      const int sy = static_cast<int>(std::floor(cy + (y + 0.5 - cy) / scale));
      if (sx < r.x0 || sx >= r.x1 || sy < r.y0 || sy >= r.y1) continue;
      const float* s = src.at(sx, sy);
      std::copy(s, s + 3, img.at(x, y));
    }
}

void relight(Image& img, const Rect& r, double factor) {
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x) {
      float* p = img.at(x, y);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(std::clamp(p[c] * factor, 0.0, 1.0));
    }
}

}  // namespace

std::vector<double> MockTextEncoder::do_encode(std::string_view text) {
  const std::string hex = sha256_hex(text);
  std::uint64_t state = seed_;
  for (std::size_t i = 0; i < 16; ++i)
    state = state * 31 + static_cast<std::uint64_t>(std::stoi(hex.substr(4 * i, 4), nullptr, 16));
  std::vector<double> v(dim_);
  for (auto& x : v) {
    const std::uint64_t bits = splitmix64(state);
    x = static_cast<double>(bits >> 11) / 9007199254740992.0 * 2.0 - 1.0;
  }
  return v;
}

Image MockImageEditor::do_generate(std::string_view prompt, int width, int height) {
  ++generate_calls_;
  std::array<float, 3> color = *named_color("gray");
  std::string word;
  const std::string text = std::string(prompt) + " ";
  for (char ch : text) {
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      continue;
    }
    if (auto c = named_color(word)) {
      color = *c;
      break;
    }
    word.clear();
  }
  Image img = Image::filled(width, height, color);
  const std::array<float, 3> dark = {color[0] * 0.6f, color[1] * 0.6f, color[2] * 0.6f};
  const Rect r = region_rect({{"x", 0.25}, {"y", 0.25}, {"w", 0.5}, {"h", 0.5}}, width, height);
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x) std::copy(dark.begin(), dark.end(), img.at(x, y));
  return img;
}

Image MockImageEditor::do_edit(const Image& source, const EditCue& cue, std::string_view) {
  ++edit_calls_;
  const auto& op = cue.op;
  const double magnitude = num(op, "magnitude", 0.0);
  if (magnitude == 0.0) return source;
  const std::string kind = op.value("kind", std::string("recolor"));
  const nlohmann::json region = op.value("region", nlohmann::json::object());
  const Rect r = region_rect(region, source.width, source.height);
  Image out = source;
  if (kind == "recolor") {
    recolor(out, r, magnitude, max_hue_shift_, attribute(op, "target_color", ""));
  } else if (kind == "mask_inpaint") {
    const auto fill = named_color(attribute(op, "fill_color", "white")).value_or(*named_color("white"));
    blend(out, r, magnitude, fill);
  } else if (kind == "drag") {
    const int dx = static_cast<int>(std::lround(magnitude * num(region, "dx", 0.0) * source.width));
    const int dy = static_cast<int>(std::lround(magnitude * num(region, "dy", 0.0) * source.height));
    drag(out, source, r, dx, dy);
  } else if (kind == "resize") {
    const double sign = attribute(op, "direction", "grow") == "shrink" ? -1.0 : 1.0;
    resize(out, source, r, std::max(0.05, 1.0 + sign * magnitude));
  } else if (kind == "relight") {
    const double sign = attribute(op, "direction", "brighten") == "darken" ? -1.0 : 1.0;
    relight(out, r, 1.0 + sign * magnitude);
  } else {
    throw BackendError("mock editor: unknown operator kind '" + kind + "'");
  }
  return out;
}

MockLatentEncoder::MockLatentEncoder(std::size_t dim) : dim_(dim) {
  if (dim == 0 || dim % 3 != 0) throw ConfigError("mock latent dim must be a positive multiple of 3");
  const int blocks = static_cast<int>(dim / 3);
  gx_ = blocks;
  gy_ = 1;
  for (int g = static_cast<int>(std::sqrt(static_cast<double>(blocks))); g >= 1; --g)
    if (blocks % g == 0) {
      gy_ = g;
      gx_ = blocks / g;
      break;
    }
}

std::vector<double> MockLatentEncoder::do_encode(const Image& image) {
  if (image.width < gx_ || image.height < gy_)
    throw ImageShapeError("image smaller than the latent grid");
  std::vector<double> sums(dim_, 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(gx_ * gy_), 0);
  for (int y = 0; y < image.height; ++y) {
    const int by = static_cast<int>(static_cast<long long>(y) * gy_ / image.height);
    for (int x = 0; x < image.width; ++x) {
      const int bx = static_cast<int>(static_cast<long long>(x) * gx_ / image.width);
      const std::size_t b = static_cast<std::size_t>(by * gx_ + bx);
      const float* p = image.at(x, y);
      for (int c = 0; c < 3; ++c) sums[3 * b + c] += p[c];
      ++counts[b];
    }
  }
  for (std::size_t b = 0; b < counts.size(); ++b)
    for (int c = 0; c < 3; ++c) sums[3 * b + c] /= static_cast<double>(counts[b]);
  return sums;
}

VideoHandle MockDenoiser::do_denoise(const DenoiseRequest& request) {
  const std::string digest = sha256_hex(std::span<const std::uint8_t>(request.schedule_bytes));
  nlohmann::json meta = {{"frame_count", request.frame_count},
                         {"dim", request.dim},
                         {"sigma", request.sigma},
                         {"seed", request.seed},
                         {"schedule_digest", digest},
                         {"schedule_run_id", request.schedule_run_id},
                         {"embedding_run_id", request.embedding_run_id},
                         {"positive_dim", request.positive.size()},
                         {"negative_dim", request.negative.size()},
                         {"stub", true}};
  return {"mock://denoise/" + digest, std::move(meta)};
}

}  // namespace cce::backends
