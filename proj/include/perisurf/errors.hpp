#pragma once

#include <stdexcept>
#include <string>

namespace perisurf {

// Base of every error raised by the library. The CLI maps InputError to
// exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define PERISURF_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(#Name, what) {}   \
  };

PERISURF_DEFINE_ERROR(InputError)
PERISURF_DEFINE_ERROR(DomainError)
PERISURF_DEFINE_ERROR(DegenerateMap)
PERISURF_DEFINE_ERROR(MeshMismatch)
PERISURF_DEFINE_ERROR(SingularPoint)
PERISURF_DEFINE_ERROR(SingularSystem)
PERISURF_DEFINE_ERROR(NonConvergence)
PERISURF_DEFINE_ERROR(AmbiguousLocation)
PERISURF_DEFINE_ERROR(Stagnation)
PERISURF_DEFINE_ERROR(MaxOuterIterations)

#undef PERISURF_DEFINE_ERROR

}  // namespace perisurf
