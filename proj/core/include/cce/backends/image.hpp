#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace cce::backends {

/// Linear RGB raster, float channels in [0, 1], row-major, interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;

  static Image filled(int width, int height, std::array<float, 3> color);

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  float* at(int x, int y) { return &rgb[3 * (static_cast<std::size_t>(y) * width + x)]; }
  const float* at(int x, int y) const {
    return &rgb[3 * (static_cast<std::size_t>(y) * width + x)];
  }

  /// SHA-256 over dimensions and raw channel bytes.
  std::string digest() const;

  bool operator==(const Image&) const = default;
};

/// Content-addressed handle; pixel data lives in an ImageStore.
struct ImageRef {
  std::string digest;
  int width = 0;
  int height = 0;

  bool operator==(const ImageRef&) const = default;
};

std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(const std::vector<std::uint8_t>& bytes);

struct Hsv {
  double h;  // degrees in [0, 360)
  double s;
  double v;
};
Hsv rgb_to_hsv(double r, double g, double b);
std::array<double, 3> hsv_to_rgb(const Hsv& hsv);

/// Saturation-weighted circular mean hue in degrees [0, 360).
double mean_hue(const Image& image);

/// Named colors used by mock generation and recolor targets.
std::optional<std::array<float, 3>> named_color(const std::string& name);

/// Thread-safe content-addressed image store. With a directory, every image
/// is persisted as `<digest>.png` (viewable) plus `<digest>.rgbf` (exact
/// float channels), and lookups fall back to disk.
class ImageStore {
 public:
  ImageStore() = default;
  explicit ImageStore(std::filesystem::path directory);

  ImageRef put(const Image& image);
  std::shared_ptr<const Image> get(const ImageRef& ref) const;
  bool contains(const std::string& digest) const;

  /// Memo of edit requests: request key -> produced image digest.
  std::optional<ImageRef> lookup_request(const std::string& key) const;
  void remember_request(const std::string& key, const ImageRef& ref);

  const std::optional<std::filesystem::path>& directory() const { return directory_; }

 private:
  std::optional<std::filesystem::path> directory_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::shared_ptr<const Image>> images_;
  std::map<std::string, ImageRef> requests_;
};

}  // namespace cce::backends
