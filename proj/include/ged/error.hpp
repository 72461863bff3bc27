#pragma once

#include <stdexcept>
#include <string>

namespace ged {

enum class ErrorCode {
  Parse = 1,
  Integrity,
  Dimension,
  Domain,
  SizeLimit,
  Infeasible,
  Io,
  Usage,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ged
