#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "cce/backends/backend.hpp"
#include "cce/backends/image.hpp"

namespace cce::backends {

/// The five backend roles of one run plus the shared call log and image
/// store.
struct BackendSuite {
  std::shared_ptr<ReasoningBackend> reasoner;
  std::shared_ptr<TextEncoderBackend> text_encoder;
  std::shared_ptr<ImageEditBackend> editor;
  std::shared_ptr<LatentEncoderBackend> latent_encoder;
  std::shared_ptr<DenoiserBackend> denoiser;
  std::shared_ptr<CallLog> call_log = std::make_shared<CallLog>();
  std::shared_ptr<ImageStore> images = std::make_shared<ImageStore>();
};

struct SuiteOptions {
  std::uint64_t seed = 0;
  /// Scenario fixtures for the mock reasoner.
  std::optional<std::filesystem::path> fixtures;
  double max_hue_shift = 60.0;
  /// Image store directory; in-memory when unset.
  std::optional<std::filesystem::path> cache_dir;
};

/// Builds mocks for "mock" endpoints and shim clients otherwise. Descriptors
/// sharing an endpoint share one client (and its cache).
BackendSuite make_suite(const std::vector<BackendDescriptor>& descriptors,
                        const SuiteOptions& options = {});

/// One mock descriptor per role with the given vector dimensions.
std::vector<BackendDescriptor> mock_descriptors(int text_dim = 16, int latent_dim = 48);

}  // namespace cce::backends
