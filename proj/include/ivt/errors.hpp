#ifndef IVT_ERRORS_HPP
#define IVT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ivt {

/// Base class for all solver-suite errors.
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

class NonPositiveJacobian : public SolverError {
public:
  explicit NonPositiveJacobian(const std::string& msg) : SolverError(msg) {}
};

class NonPositiveTemperature : public SolverError {
public:
  explicit NonPositiveTemperature(const std::string& msg) : SolverError(msg) {}
};

class ConcentrationOutOfRange : public SolverError {
public:
  explicit ConcentrationOutOfRange(const std::string& msg) : SolverError(msg) {}
};

class NewtonDivergence : public SolverError {
public:
  explicit NewtonDivergence(const std::string& msg) : SolverError(msg) {}
};

class LocalNewtonDivergence : public SolverError {
public:
  explicit LocalNewtonDivergence(const std::string& msg) : SolverError(msg) {}
};

class ActiveSetCycling : public SolverError {
public:
  explicit ActiveSetCycling(const std::string& msg) : SolverError(msg) {}
};

class ZeroNormDirection : public SolverError {
public:
  explicit ZeroNormDirection(const std::string& msg) : SolverError(msg) {}
};

class SingularMatrix : public SolverError {
public:
  SingularMatrix(const std::string& msg, int dof) : SolverError(msg), pivot_dof(dof) {}
  int pivot_dof;
};

class StepSizeFloor : public SolverError {
public:
  explicit StepSizeFloor(const std::string& msg) : SolverError(msg) {}
};

class ConfigError : public SolverError {
public:
  explicit ConfigError(const std::string& msg) : SolverError(msg) {}
};

class SimulationError : public SolverError {
public:
  SimulationError(const std::string& msg, int step) : SolverError(msg), step_index(step) {}
  int step_index;
};

} // namespace ivt

#endif
