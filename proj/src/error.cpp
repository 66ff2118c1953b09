#include "htp/error.hpp"

#include <utility>

namespace htp {

namespace {

std::string join_expected(const std::vector<std::string>& expected) {
  std::string out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i > 0) out += ", ";
    out += expected[i];
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::string message, std::size_t position, std::size_t token,
                       std::vector<std::string> expected)
    : Error(expected.empty() ? message
                             : message + " (expected " + join_expected(expected) + ")"),
      position_(position),
      token_(token),
      expected_(std::move(expected)) {}

ParseError ParseError::at_line(std::size_t line) const {
  ParseError copy(*this);
  copy.line_ = line;
  return copy;
}

StratificationError::StratificationError(std::vector<std::string> cycle)
    : Error([&] {
        std::string msg = "theory is not stratified: negative cycle through";
        for (const auto& p : cycle) msg += " " + p;
        return msg;
      }()),
      cycle_(std::move(cycle)) {}

FormatError::FormatError(std::string message, std::size_t line)
    : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

CertificationError::CertificationError(std::string message, std::vector<std::string> ids)
    : Error(std::move(message)), ids_(std::move(ids)) {}

AdapterError::AdapterError(std::string message, std::string field_path)
    : Error(field_path + ": " + message), field_path_(std::move(field_path)) {}

BackendError::BackendError(Kind kind, std::string message)
    : Error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

const char* to_string(BackendError::Kind kind) {
  switch (kind) {
    case BackendError::Kind::Transport: return "transport";
    case BackendError::Kind::RateLimitExhausted: return "rate-limit-exhausted";
    case BackendError::Kind::MissingFixture: return "missing-fixture";
    case BackendError::Kind::BadResponse: return "bad-response";
  }
  return "unknown";
}

}  // namespace htp
