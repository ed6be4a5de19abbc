#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsfb {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed parameters or inputs that violate a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A time value that is not a member of the time scale, or a value outside an
// operator's mathematical domain (e.g. z = -1/mu for the cylinder transform).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A request that runs past the truncated end of a finite time scale.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

// I + mu(t) A(t) is (numerically) singular at node `t`.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double t) : Error(what), node_(t) {}
  double node() const { return node_; }

 private:
  double node_;
};

// A Gramian failed the min-singular-value gate.
class ControllabilityError : public Error {
 public:
  ControllabilityError(const std::string& what, double t, double eps1,
                       double eps2)
      : Error(what), node_(t), eps1_(eps1), eps2_(eps2) {}
  double node() const { return node_; }
  double eps1() const { return eps1_; }
  double eps2() const { return eps2_; }

 private:
  double node_;
  double eps1_;
  double eps2_;
};

// A gain schedule has no entry for a node that a simulation needs.
class CoverageError : public Error {
 public:
  CoverageError(const std::string& what, double t) : Error(what), node_(t) {}
  double node() const { return node_; }

 private:
  double node_;
};

// The simulated state norm exceeded the divergence threshold.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double t) : Error(what), node_(t) {}
  double node() const { return node_; }

 private:
  double node_;
};

// -alpha is not positively regressive (1 - mu(t) alpha <= 0) at some node.
class RateInadmissibleError : public Error {
 public:
  RateInadmissibleError(const std::string& what, double t)
      : Error(what), node_(t) {}
  double node() const { return node_; }

 private:
  double node_;
};

// Several per-node failures collected while building a gain schedule.
class ScheduleError : public Error {
 public:
  struct NodeFailure {
    double t;
    std::string kind;  // "controllability", "singularity", "domain", "other"
    std::string message;
  };

  ScheduleError(const std::string& what, std::vector<NodeFailure> failures)
      : Error(what), failures_(std::move(failures)) {}
  const std::vector<NodeFailure>& failures() const { return failures_; }

 private:
  std::vector<NodeFailure> failures_;
};

}  // namespace tsfb
