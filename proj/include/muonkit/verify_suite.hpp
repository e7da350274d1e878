#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace muonkit {

enum class VerifyScope { polynomials, prop1, prop2, sketch_moments, noise_moments, flops, lemma1 };

/// Scope names as typed on the command line: polynomials, prop1, prop2,
/// sketch-moments, noise-moments, flops, lemma1. Throws ConfigError otherwise.
VerifyScope parse_verify_scope(const std::string& name);
std::string to_string(VerifyScope scope);
std::vector<VerifyScope> all_verify_scopes();

/// Fixed seed for every suite draw.
inline constexpr std::uint64_t kVerifySeed = 20240611;

struct CheckResult {
  std::string scope;
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  std::size_t failures() const noexcept;
  bool passed() const noexcept { return failures() == 0; }
};

VerifyReport run_verify_suite(std::span<const VerifyScope> scopes, std::uint64_t seed = kVerifySeed);

/// Writes verify.csv (scope,check,passed,value,threshold,detail) and verify.txt.
void write_verify_report(const VerifyReport& report, const std::string& directory);
std::string format_verify_text(const VerifyReport& report);

}  // namespace muonkit
