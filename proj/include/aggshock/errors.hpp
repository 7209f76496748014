#pragma once

#include <stdexcept>
#include <string>

namespace aggshock {

// Error vocabulary shared by all modules. Each maps one failure mode of the
// estimation pipeline; Monte Carlo runners catch these per replication.

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct SingularDesign : std::runtime_error {
  explicit SingularDesign(const std::string& what) : std::runtime_error(what) {}
};

struct NoBracket : std::runtime_error {
  explicit NoBracket(const std::string& what) : std::runtime_error(what) {}
};

struct NoFixedPoint : std::runtime_error {
  explicit NoFixedPoint(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateSample : std::runtime_error {
  explicit DegenerateSample(const std::string& what) : std::runtime_error(what) {}
};

struct ThetaOutOfRange : std::runtime_error {
  explicit ThetaOutOfRange(const std::string& what) : std::runtime_error(what) {}
};

struct SingularJacobian : std::runtime_error {
  explicit SingularJacobian(const std::string& what) : std::runtime_error(what) {}
};

struct EvaluationError : std::runtime_error {
  explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace aggshock
