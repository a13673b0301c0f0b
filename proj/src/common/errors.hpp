#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace consearch {

// Unreadable dump or corpus file.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Request is valid but not allowed in the current state (e.g. a feature
// disabled by the session mode).
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Field-level validation failure on user edits.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transport-level failure talking to a model provider. Always retryable.
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmbeddingError : public std::runtime_error {
 public:
  EmbeddingError(const std::string& what, std::size_t batch_offset)
      : std::runtime_error(what), batch_offset_(batch_offset) {}

  std::size_t batch_offset() const noexcept { return batch_offset_; }
  bool retryable() const noexcept { return true; }

 private:
  std::size_t batch_offset_;
};

// An LLM step could not produce a schema-conforming result.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string template_id, const std::string& what)
      : std::runtime_error(what), template_id_(std::move(template_id)) {}

  const std::string& template_id() const noexcept { return template_id_; }

 private:
  std::string template_id_;
};

}  // namespace consearch
