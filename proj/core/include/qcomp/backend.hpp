#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "qcomp/semantic.hpp"

namespace qcomp {

struct GenerationParams {
  double temperature = 0.5;
  std::size_t max_context_tokens = 6000;
  std::size_t max_output_tokens = 512;

  void validate() const;
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  // Throws BackendError on failure.
  virtual std::string generate(std::string_view prompt, const GenerationParams& params) = 0;
  virtual std::string id() const = 0;
};

// In-process backend whose output is a pure function of (prompt, params).
class DeterministicStub final : public GenerationBackend {
 public:
  using Responder = std::function<std::string(std::string_view prompt, const GenerationParams& params)>;

  DeterministicStub();  // uses extractive_stub_response
  explicit DeterministicStub(Responder responder, std::string id = "deterministic-stub");

  std::string generate(std::string_view prompt, const GenerationParams& params) override;
  std::string id() const override { return id_; }

 private:
  Responder responder_;
  std::string id_;
};

/// Default stub behaviour. Reads the payload after the last "---" line of the
/// prompt and answers in the layout the prompt asks for: TOPICS/KEY FINDINGS
/// blocks for card prompts, "n,query" CSV rows for query prompts, otherwise
/// one question per line built from the payload's sentences.
std::string extractive_stub_response(std::string_view prompt, const GenerationParams& params);

struct HttpEndpoint {
  std::string url;    // http://host[:port]/path
  std::string token;  // sent as "Authorization: Bearer <token>" when non-empty
  double timeout_seconds = 120.0;
};

// POST {"prompt","temperature","max_tokens"} -> {"text"}.
class HttpGenerationBackend final : public GenerationBackend {
 public:
  explicit HttpGenerationBackend(HttpEndpoint endpoint);
  std::string generate(std::string_view prompt, const GenerationParams& params) override;
  std::string id() const override { return "http:" + endpoint_.url; }

 private:
  HttpEndpoint endpoint_;
};

// POST {"text"} -> {"embedding":[...],"model":"..."}. The dimension is fixed
// by the first response unless given up front.
class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(HttpEndpoint endpoint, std::size_t dim = 0);
  std::vector<float> compute(std::string_view text) override;
  std::size_t dimension() const override;
  std::string model_id() const override;

 private:
  HttpEndpoint endpoint_;
  mutable std::mutex mutex_;
  std::size_t dim_;
  std::string model_;
};

// Caps the number of in-flight requests to the wrapped backend.
class BoundedGeneration final : public GenerationBackend {
 public:
  BoundedGeneration(GenerationBackend& inner, std::ptrdiff_t max_in_flight = 4);
  std::string generate(std::string_view prompt, const GenerationParams& params) override;
  std::string id() const override { return inner_.id(); }

 private:
  GenerationBackend& inner_;
  std::counting_semaphore<1024> slots_;
};

class BoundedEmbedding final : public EmbeddingBackend {
 public:
  BoundedEmbedding(EmbeddingBackend& inner, std::ptrdiff_t max_in_flight = 4);
  std::vector<float> compute(std::string_view text) override;
  std::size_t dimension() const override { return inner_.dimension(); }
  std::string model_id() const override { return inner_.model_id(); }

 private:
  EmbeddingBackend& inner_;
  std::counting_semaphore<1024> slots_;
};

}  // namespace qcomp
