#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tsfb::verify {

struct PropertyResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double measured = 0.0;   // worst residual / failure count observed
  double threshold = 0.0;  // pass bound for `measured`
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 20240601;
  int exp_law_scales = 200;
  int closure_pairs = 10000;
  // Test hook: relative noise of this size (drawn from the seed) is applied
  // to every exponential evaluated by the exponential-law checks.
  double exp_perturbation = 0.0;
};

// Exponential laws, closed forms, Hilger-plane predicates and transforms.
std::vector<PropertyResult> run_calculus(const VerifyOptions& options);
// Transition matrices, Gramian symmetry, PSD sandwich, identity residuals.
std::vector<PropertyResult> run_gramian(const VerifyOptions& options);
// Gain schedules, certificates and closed-loop decay on the motor model.
std::vector<PropertyResult> run_stability(const VerifyOptions& options);

// suite: calculus | gramian | stability | all
std::vector<PropertyResult> run_suite(const std::string& suite,
                                      const VerifyOptions& options);

std::string report_json(const std::vector<PropertyResult>& results);

bool all_passed(const std::vector<PropertyResult>& results);

}  // namespace tsfb::verify
