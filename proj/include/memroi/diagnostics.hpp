#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace memroi {

enum class Severity { Error, Warning, Note };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  int line = 0;  // 1-based; 0 when the diagnostic has no source position
  int column = 0;

  bool operator==(const Diagnostic&) const = default;
};

std::string to_string(const Diagnostic& d);

// Thrown by every operation that can fail. Carries one or more diagnostics;
// what() is the first one rendered.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string message);
  explicit Error(Diagnostic diag);
  explicit Error(std::vector<Diagnostic> diags);

  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

}  // namespace memroi
