#include "cce/backends/suite.hpp"

#include <map>

#include "cce/backends/http_backends.hpp"
#include "cce/backends/mock_backends.hpp"
#include "cce/backends/mock_reasoner.hpp"
#include "cce/error.hpp"

namespace cce::backends {

namespace {

int dim_or(const BackendDescriptor& d, const char* key, int fallback) {
  auto it = d.dims.find(key);
  return it == d.dims.end() ? fallback : it->second;
}

}  // namespace

BackendSuite make_suite(const std::vector<BackendDescriptor>& descriptors, const SuiteOptions& options) {
  BackendSuite suite;
  if (options.cache_dir) suite.images = std::make_shared<ImageStore>(*options.cache_dir);
  std::map<std::string, std::shared_ptr<ShimClient>> clients;
  auto client_for = [&](const BackendDescriptor& d) {
    auto& c = clients[d.endpoint];
    if (!c) c = std::make_shared<ShimClient>(HttpOptions{d.endpoint, d.token, d.timeout_s, d.max_retries});
    return c;
  };
  for (const auto& d : descriptors) {
    d.validate();
    switch (d.kind) {
      case BackendKind::kReasoning:
        if (d.is_mock()) {
          suite.reasoner = options.fixtures
                               ? std::make_shared<MockReasoner>(MockReasoner::load_scenarios(*options.fixtures))
                               : std::make_shared<MockReasoner>();
        } else {
          suite.reasoner = std::make_shared<HttpReasoner>(client_for(d), d.model_id);
        }
        break;
      case BackendKind::kTextEncoder:
        if (d.is_mock())
          suite.text_encoder = std::make_shared<MockTextEncoder>(dim_or(d, "text", 16), options.seed);
        else
          suite.text_encoder = std::make_shared<HttpTextEncoder>(client_for(d));
        break;
      case BackendKind::kImageEditor:
        if (d.is_mock())
          suite.editor = std::make_shared<MockImageEditor>(options.max_hue_shift);
        else
          suite.editor = std::make_shared<HttpImageEditor>(client_for(d));
        break;
      case BackendKind::kLatentEncoder:
        if (d.is_mock())
          suite.latent_encoder = std::make_shared<MockLatentEncoder>(dim_or(d, "latent", 48));
        else
          suite.latent_encoder = std::make_shared<HttpLatentEncoder>(client_for(d));
        break;
      case BackendKind::kDenoiser:
        if (d.is_mock())
          suite.denoiser = std::make_shared<MockDenoiser>();
        else
          suite.denoiser = std::make_shared<HttpDenoiser>(client_for(d));
        break;
    }
  }
  if (!suite.reasoner || !suite.text_encoder || !suite.editor || !suite.latent_encoder || !suite.denoiser)
    throw ConfigError("backend suite needs one descriptor per role");
  suite.reasoner->set_call_log(suite.call_log);
  suite.text_encoder->set_call_log(suite.call_log);
  suite.editor->set_call_log(suite.call_log);
  suite.latent_encoder->set_call_log(suite.call_log);
  suite.denoiser->set_call_log(suite.call_log);
  return suite;
}

std::vector<BackendDescriptor> mock_descriptors(int text_dim, int latent_dim) {
  std::vector<BackendDescriptor> out;
  for (auto k : {BackendKind::kReasoning, BackendKind::kTextEncoder, BackendKind::kImageEditor,
                 BackendKind::kLatentEncoder, BackendKind::kDenoiser}) {
    BackendDescriptor d;
    d.kind = k;
    if (k == BackendKind::kTextEncoder) d.dims["text"] = text_dim;
    if (k == BackendKind::kLatentEncoder) d.dims["latent"] = latent_dim;
    out.push_back(d);
  }
  return out;
}

}  // namespace cce::backends
