#include "memroi/diagnostics.hpp"

namespace memroi {

std::string to_string(const Diagnostic& d) {
  std::string out;
  if (d.line > 0) {
    out += std::to_string(d.line) + ":" + std::to_string(d.column) + ": ";
  }
  switch (d.severity) {
    case Severity::Error: out += "error: "; break;
    case Severity::Warning: out += "warning: "; break;
    case Severity::Note: out += "note: "; break;
  }
  out += d.message;
  return out;
}

namespace {
std::string first_message(const std::vector<Diagnostic>& diags) {
  return diags.empty() ? std::string("unknown error") : to_string(diags.front());
}
}  // namespace

Error::Error(std::string message)
    : Error(Diagnostic{Severity::Error, std::move(message), 0, 0}) {}

Error::Error(Diagnostic diag) : Error(std::vector<Diagnostic>{std::move(diag)}) {}

Error::Error(std::vector<Diagnostic> diags)
    : std::runtime_error(first_message(diags)), diags_(std::move(diags)) {}

}  // namespace memroi
