#pragma once

#include <stdexcept>
#include <string>

namespace ddsplit {

/// Failure categories; the CLI maps these onto exit codes.
enum class ErrorKind {
  invalid_argument,
  coefficient_violation,
  alignment,
  degenerate_decomposition,
  overlap_collision,
  unsupported_decomposition,
  size_limit,
  contract,
  no_convergence,
  non_finite,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures of the numerics rather than of the inputs.
  bool is_numerical() const noexcept {
    return kind_ == ErrorKind::no_convergence || kind_ == ErrorKind::non_finite ||
           kind_ == ErrorKind::contract;
  }

 private:
  ErrorKind kind_;
};

#define DDSPLIT_DEFINE_ERROR(Name, Kind)                                      \
  class Name : public Error {                                                 \
   public:                                                                    \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}  \
  };

DDSPLIT_DEFINE_ERROR(InvalidArgument, invalid_argument)
DDSPLIT_DEFINE_ERROR(CoefficientViolation, coefficient_violation)
DDSPLIT_DEFINE_ERROR(AlignmentError, alignment)
DDSPLIT_DEFINE_ERROR(DegenerateDecomposition, degenerate_decomposition)
DDSPLIT_DEFINE_ERROR(OverlapCollision, overlap_collision)
DDSPLIT_DEFINE_ERROR(UnsupportedDecomposition, unsupported_decomposition)
DDSPLIT_DEFINE_ERROR(SizeLimitError, size_limit)
DDSPLIT_DEFINE_ERROR(ContractError, contract)
DDSPLIT_DEFINE_ERROR(NoConvergence, no_convergence)
DDSPLIT_DEFINE_ERROR(NonFiniteValue, non_finite)

#undef DDSPLIT_DEFINE_ERROR

/// Throws the subclass matching `kind`, so context can be added without losing the category.
[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& what) {
  switch (kind) {
    case ErrorKind::invalid_argument: throw InvalidArgument(what);
    case ErrorKind::coefficient_violation: throw CoefficientViolation(what);
    case ErrorKind::alignment: throw AlignmentError(what);
    case ErrorKind::degenerate_decomposition: throw DegenerateDecomposition(what);
    case ErrorKind::overlap_collision: throw OverlapCollision(what);
    case ErrorKind::unsupported_decomposition: throw UnsupportedDecomposition(what);
    case ErrorKind::size_limit: throw SizeLimitError(what);
    case ErrorKind::contract: throw ContractError(what);
    case ErrorKind::no_convergence: throw NoConvergence(what);
    case ErrorKind::non_finite: throw NonFiniteValue(what);
  }
  throw Error(kind, what);
}

}  // namespace ddsplit
