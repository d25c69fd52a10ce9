#pragma once

#include <stdexcept>
#include <string>

namespace figsynth {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FIGSYNTH_DEFINE_ERROR(Name)    \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

// No JSON object/list could be extracted, or mandatory fields are missing.
FIGSYNTH_DEFINE_ERROR(ParseFailure);
FIGSYNTH_DEFINE_ERROR(ConfigError);
// Retries spent without a successful round trip.
FIGSYNTH_DEFINE_ERROR(GatewayExhausted);
// 401/403 from the backend. Never retried.
FIGSYNTH_DEFINE_ERROR(AuthError);
FIGSYNTH_DEFINE_ERROR(StoreMissing);
FIGSYNTH_DEFINE_ERROR(RenderError);
FIGSYNTH_DEFINE_ERROR(NotApplicable);
FIGSYNTH_DEFINE_ERROR(UnboundReference);
FIGSYNTH_DEFINE_ERROR(IOFailure);
FIGSYNTH_DEFINE_ERROR(DuplicateId);
FIGSYNTH_DEFINE_ERROR(BadFractions);
FIGSYNTH_DEFINE_ERROR(EmptyInput);

#undef FIGSYNTH_DEFINE_ERROR

// Real mode without the API key variable set.
class MissingApiKey : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace figsynth
