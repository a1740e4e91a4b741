#pragma once

#include <stdexcept>
#include <string>

namespace hamflow {

/// Base of every error raised by the library. `name()` is the stable
/// identifier the CLI prints on failure.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define HAMFLOW_DEFINE_ERROR(Type)                                  \
  class Type : public Error {                                       \
   public:                                                          \
    explicit Type(const std::string& what) : Error(#Type, what) {} \
  }

HAMFLOW_DEFINE_ERROR(ValidationError);
HAMFLOW_DEFINE_ERROR(NumericalError);
HAMFLOW_DEFINE_ERROR(HyperbolicityError);
HAMFLOW_DEFINE_ERROR(ConvergenceError);
HAMFLOW_DEFINE_ERROR(InconsistentKernelError);
HAMFLOW_DEFINE_ERROR(EndpointSingularError);
HAMFLOW_DEFINE_ERROR(PartitionError);
HAMFLOW_DEFINE_ERROR(ClusteredCrossingError);
HAMFLOW_DEFINE_ERROR(DegenerateCrossingError);
HAMFLOW_DEFINE_ERROR(BasePointError);
HAMFLOW_DEFINE_ERROR(CertificateUnavailable);
HAMFLOW_DEFINE_ERROR(ConfigError);

#undef HAMFLOW_DEFINE_ERROR

}  // namespace hamflow
