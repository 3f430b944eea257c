#pragma once

#include <stdexcept>
#include <string>

namespace s2k {

/// Base of every typed failure raised by the toolchain. `kind()` is the
/// stable name written into manifests and failure logs.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define S2K_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

S2K_DEFINE_ERROR(PreconditionError);
S2K_DEFINE_ERROR(EmptyAfterCleaning);
S2K_DEFINE_ERROR(TokenizerFailure);
S2K_DEFINE_ERROR(BackendUnavailable);
S2K_DEFINE_ERROR(ContextTooLong);
S2K_DEFINE_ERROR(UnsupportedCapability);
S2K_DEFINE_ERROR(UnparseableResponse);
S2K_DEFINE_ERROR(MalformedGeneration);
S2K_DEFINE_ERROR(UnknownReasoningType);
S2K_DEFINE_ERROR(NormalizationError);
S2K_DEFINE_ERROR(EmptyInput);
S2K_DEFINE_ERROR(ConfigError);
S2K_DEFINE_ERROR(StaleInput);
S2K_DEFINE_ERROR(IoError);
S2K_DEFINE_ERROR(SchemaError);
S2K_DEFINE_ERROR(InjectedFault);

#undef S2K_DEFINE_ERROR

}  // namespace s2k
