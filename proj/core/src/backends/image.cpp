#include "cce/backends/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "cce/error.hpp"
#include "cce/util/digest.hpp"

namespace cce::backends {

Image Image::filled(int width, int height, std::array<float, 3> color) {
  Image img;
  img.width = width;
  img.height = height;
  img.rgb.resize(3 * img.pixel_count());
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    std::copy(color.begin(), color.end(), img.rgb.begin() + 3 * i);
  return img;
}

std::string Image::digest() const {
  Sha256 h;
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(width),
                                 static_cast<std::uint32_t>(height)};
  std::uint8_t header[8];
  for (int i = 0; i < 2; ++i)
    for (int b = 0; b < 4; ++b) header[4 * i + b] = static_cast<std::uint8_t>(dims[i] >> (8 * b));
  h.update(std::span<const std::uint8_t>(header, 8));
  // Channel bytes in little-endian order regardless of host.
  std::vector<std::uint8_t> bytes(rgb.size() * 4);
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &rgb[i], 4);
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  h.update(bytes);
  return h.hex_digest();
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(image.rgb.size());
  for (std::size_t i = 0; i < pixels.size(); ++i)
    pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.rgb[i], 0.0f, 1.0f) * 255.0f));
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr))
    throw BackendError(std::string("png sizing failed: ") + png.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw BackendError(std::string("png encode failed: ") + png.message);
  out.resize(size);
  return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
    throw BackendError(std::string("png decode failed: ") + png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr))
    throw BackendError(std::string("png decode failed: ") + png.message);
  Image img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.rgb.resize(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) img.rgb[i] = static_cast<float>(pixels[i]) / 255.0f;
  return img;
}

Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r)
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    else if (mx == g)
      h = 60.0 * ((b - r) / delta + 2.0);
    else
      h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  return {h, mx > 0.0 ? delta / mx : 0.0, mx};
}

std::array<double, 3> hsv_to_rgb(const Hsv& hsv) {
  const double h = std::fmod(std::fmod(hsv.h, 360.0) + 360.0, 360.0);
  const double c = hsv.v * hsv.s;
  const double x = c * (1.0 - std::fabs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = hsv.v - c;
  double r = 0, g = 0, b = 0;
  if (h < 60) { r = c; g = x; }
  else if (h < 120) { r = x; g = c; }
  else if (h < 180) { g = c; b = x; }
  else if (h < 240) { g = x; b = c; }
  else if (h < 300) { r = x; b = c; }
  else { r = c; b = x; }
  return {r + m, g + m, b + m};
}

double mean_hue(const Image& image) {
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const Hsv hsv = rgb_to_hsv(image.rgb[3 * i], image.rgb[3 * i + 1], image.rgb[3 * i + 2]);
    const double rad = hsv.h * std::numbers::pi / 180.0;
    sx += hsv.s * std::cos(rad);
    sy += hsv.s * std::sin(rad);
  }
  double deg = std::atan2(sy, sx) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 360.0;
  return deg;
}

std::optional<std::array<float, 3>> named_color(const std::string& name) {
  static const std::map<std::string, std::array<float, 3>> kColors = {
      {"red", {0.85f, 0.1f, 0.1f}},     {"orange", {0.95f, 0.55f, 0.1f}},
      {"yellow", {0.95f, 0.9f, 0.15f}}, {"green", {0.15f, 0.7f, 0.2f}},
      {"blue", {0.15f, 0.3f, 0.85f}},   {"purple", {0.5f, 0.1f, 0.5f}},
      {"violet", {0.55f, 0.15f, 0.75f}}, {"magenta", {0.8f, 0.1f, 0.6f}},
      {"pink", {0.95f, 0.5f, 0.7f}},    {"white", {0.95f, 0.95f, 0.95f}},
      {"black", {0.05f, 0.05f, 0.05f}}, {"gray", {0.5f, 0.5f, 0.5f}},
      {"brown", {0.45f, 0.3f, 0.15f}},  {"clear", {0.8f, 0.9f, 0.95f}},
      {"cyan", {0.1f, 0.8f, 0.85f}},
  };
  auto it = kColors.find(name);
  if (it == kColors.end()) return std::nullopt;
  return it->second;
}

namespace {

void write_file(const std::filesystem::path& p, std::span<const std::uint8_t> bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> raw_bytes(const Image& image) {
  std::vector<std::uint8_t> bytes(8 + image.rgb.size() * 4);
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(image.width),
                                 static_cast<std::uint32_t>(image.height)};
  for (int i = 0; i < 2; ++i)
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<std::uint8_t>(dims[i] >> (8 * b));
  for (std::size_t i = 0; i < image.rgb.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &image.rgb[i], 4);
    for (int b = 0; b < 4; ++b) bytes[8 + 4 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return bytes;
}

std::optional<Image> read_raw(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8) return std::nullopt;
  auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes[off + b]) << (8 * b);
    return v;
  };
  Image img;
  img.width = static_cast<int>(u32(0));
  img.height = static_cast<int>(u32(4));
  const std::size_t n = 3 * img.pixel_count();
  if (bytes.size() != 8 + 4 * n) return std::nullopt;
  img.rgb.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = u32(8 + 4 * i);
    std::memcpy(&img.rgb[i], &bits, 4);
  }
  return img;
}

}  // namespace

ImageStore::ImageStore(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(*directory_);
}

ImageRef ImageStore::put(const Image& image) {
  ImageRef ref{image.digest(), image.width, image.height};
  std::lock_guard lock(mu_);
  if (!images_.count(ref.digest)) {
    images_[ref.digest] = std::make_shared<const Image>(image);
    if (directory_) {
      write_file(*directory_ / (ref.digest + ".rgbf"), raw_bytes(image));
      write_file(*directory_ / (ref.digest + ".png"), encode_png(image));
    }
  }
  return ref;
}

std::shared_ptr<const Image> ImageStore::get(const ImageRef& ref) const {
  std::lock_guard lock(mu_);
  if (auto it = images_.find(ref.digest); it != images_.end()) return it->second;
  if (directory_) {
    if (auto img = read_raw(*directory_ / (ref.digest + ".rgbf")); img && img->digest() == ref.digest) {
      auto shared = std::make_shared<const Image>(std::move(*img));
      images_[ref.digest] = shared;
      return shared;
    }
  }
  throw PreconditionError("image " + ref.digest + " not in store");
}

bool ImageStore::contains(const std::string& digest) const {
  std::lock_guard lock(mu_);
  if (images_.count(digest)) return true;
  return directory_ && std::filesystem::exists(*directory_ / (digest + ".rgbf"));
}

std::optional<ImageRef> ImageStore::lookup_request(const std::string& key) const {
  std::lock_guard lock(mu_);
  if (auto it = requests_.find(key); it != requests_.end()) return it->second;
  if (directory_) {
    std::ifstream in(*directory_ / (key + ".req"));
    ImageRef ref;
    if (in >> ref.digest >> ref.width >> ref.height) return ref;
  }
  return std::nullopt;
}

void ImageStore::remember_request(const std::string& key, const ImageRef& ref) {
  std::lock_guard lock(mu_);
  requests_[key] = ref;
  if (directory_) {
    std::ofstream out(*directory_ / (key + ".req"));
    out << ref.digest << ' ' << ref.width << ' ' << ref.height << '\n';
  }
}

}  // namespace cce::backends
