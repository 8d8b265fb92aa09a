#pragma once

#include <stdexcept>
#include <string>

namespace hbndb {

// Every failure raised by the library carries a stable, machine-readable code
// (e.g. "non_positive_zpl", "wfc_count_mismatch") next to the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace hbndb
