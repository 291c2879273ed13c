#ifndef FLEXIDX_ERRORS_HPP
#define FLEXIDX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace flexidx {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Model ingestion.
class SchemaError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };

// Linear algebra.
class NotSPDError : public Error { using Error::Error; };
class SingularError : public Error { using Error::Error; };
class RankDeficientError : public Error { using Error::Error; };

// Solvers.
class IterationLimitError : public Error { using Error::Error; };
class NoCandidatesError : public Error { using Error::Error; };
class UnboundedPsiError : public Error { using Error::Error; };
class NotInteriorError : public Error { using Error::Error; };

// Special functions.
class DomainError : public Error { using Error::Error; };

} // namespace flexidx

#endif // FLEXIDX_ERRORS_HPP
