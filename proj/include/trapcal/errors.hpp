#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace trapcal {

// Base of all domain errors thrown by the toolkit.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A type or operation precondition was violated at construction time.
struct InvalidParameter : Error {
  using Error::Error;
};

// Sensitivity direction has zero length (settings equal, or cancelling wavevectors).
struct DegenerateDirection : Error {
  using Error::Error;
};

// Requested RF amplitude scale leaves at least one radial frequency imaginary.
struct IonLost : Error {
  using Error::Error;
};

struct LengthMismatch : Error {
  using Error::Error;
};

struct UnknownId : Error {
  using Error::Error;
};

struct ZeroDenominator : Error {
  using Error::Error;
};

// Estimator inputs carry no phase information (both quadratures exactly 1/2).
struct UndefinedEstimate : Error {
  using Error::Error;
};

struct OddM : Error {
  using Error::Error;
};

// Pass halfwidths do not form the pi/2^(j-1) ladder.
struct BadSchedule : Error {
  using Error::Error;
};

// A scanned phase wrapped outside the estimator range.
struct RangeOverflow : Error {
  using Error::Error;
};

struct RankDeficient : Error {
  using Error::Error;
};

struct TooShort : Error {
  using Error::Error;
};

// A closed-loop observable is insensitive to its assigned field component.
struct NoProgress : Error {
  using Error::Error;
};

struct ScenarioUnknown : Error {
  using Error::Error;
};

// Carries every violation found while validating a config, not just the first.
struct ConfigInvalid : Error {
  explicit ConfigInvalid(std::vector<std::string> violations_)
      : Error(join(violations_)), violations(std::move(violations_)) {}

  std::vector<std::string> violations;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid config:";
    for (const auto& e : v) {
      s += "\n  - " + e;
    }
    return s;
  }
};

}  // namespace trapcal
