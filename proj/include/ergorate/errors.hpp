#ifndef ERGORATE_ERRORS_HPP
#define ERGORATE_ERRORS_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ergorate {

enum class ErrorKind {
  NegativeRate,
  NonConservative,
  Reducible,
  SingularSystem,
  InvalidDistribution,
  InvalidWeight,
  InvalidBeta,
  ZeroRate,
  EigenFailure,
  Overflow,
  InsufficientData,
  NoiseFloor,
  TooLarge,
  NoDrift,
  InvalidInput,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NegativeRate: return "NegativeRate";
    case ErrorKind::NonConservative: return "NonConservative";
    case ErrorKind::Reducible: return "Reducible";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::InvalidWeight: return "InvalidWeight";
    case ErrorKind::InvalidBeta: return "InvalidBeta";
    case ErrorKind::ZeroRate: return "ZeroRate";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NoiseFloor: return "NoiseFloor";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::NoDrift: return "NoDrift";
    case ErrorKind::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable kind and, where it applies, the
/// offending row/state index.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(what), kind_(kind), index_(index) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> index_;
};

}  // namespace ergorate

#endif  // ERGORATE_ERRORS_HPP
