#pragma once

#include <atomic>
#include <cstdint>

#include "cce/backends/backend.hpp"

namespace cce::backends {

/// Seeded hash of the text expanded to `dim` values in [-1, 1].
class MockTextEncoder : public TextEncoderBackend {
 public:
  explicit MockTextEncoder(std::size_t dim = 16, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {}
  std::size_t dim() const override { return dim_; }

 protected:
  std::vector<double> do_encode(std::string_view text) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Parametric image editor. Each operator kind is a fixed transform of the
/// region named in the cue, scaled by the operator magnitude:
///   recolor       hue moves magnitude * max_hue_shift degrees toward
///                 attributes.target_color along the shorter arc
///   mask_inpaint  blend toward attributes.fill_color (default white)
///   drag          translate region content by magnitude * (dx, dy)
///   resize        scale region about its center by 1 +/- magnitude
///   relight       scale brightness by 1 +/- magnitude
/// Magnitude 0 returns the source unchanged.
class MockImageEditor : public ImageEditBackend {
 public:
  explicit MockImageEditor(double max_hue_shift = 60.0) : max_hue_shift_(max_hue_shift) {}

  double max_hue_shift() const { return max_hue_shift_; }
  int edit_calls() const { return edit_calls_.load(); }
  int generate_calls() const { return generate_calls_.load(); }

 protected:
  /// Fills with the first color named in the prompt and draws a darker
  /// same-hue rectangle over the central region.
  Image do_generate(std::string_view prompt, int width, int height) override;
  Image do_edit(const Image& source, const EditCue& cue, std::string_view instruction) override;

 private:
  double max_hue_shift_;
  std::atomic<int> edit_calls_{0};
  std::atomic<int> generate_calls_{0};
};

/// Blockwise mean pool: the image is split into a grid of blocks and the
/// per-channel mean of each block becomes one latent entry. Linear in the
/// pixels. `dim` must be a multiple of 3.
class MockLatentEncoder : public LatentEncoderBackend {
 public:
  explicit MockLatentEncoder(std::size_t dim = 48);
  std::size_t dim() const override { return dim_; }
  int grid_x() const { return gx_; }
  int grid_y() const { return gy_; }

 protected:
  std::vector<double> do_encode(const Image& image) override;

 private:
  std::size_t dim_;
  int gx_;
  int gy_;
};

/// Records what it was asked to denoise; produces no pixels.
class MockDenoiser : public DenoiserBackend {
 protected:
  VideoHandle do_denoise(const DenoiseRequest& request) override;
};

}  // namespace cce::backends
