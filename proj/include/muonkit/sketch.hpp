#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "muonkit/matrix.hpp"
#include "muonkit/polar.hpp"
#include "muonkit/rng.hpp"

namespace muonkit {

enum class SketchKind { gaussian, kaczmarz };

/// Lifted randomized polar parameters. The sketch width is ell = rank + oversampling.
struct SketchConfig {
  int rank = 1;
  int oversampling = 2;
  int power_iterations = 0;
  SketchKind kind = SketchKind::gaussian;

  int ell() const noexcept { return rank + oversampling; }
  /// Throws PreconditionError unless rank >= 1, oversampling >= 2, power_iterations >= 0
  /// and ell fits inside a rows x cols matrix.
  void validate(Index rows, Index cols) const;

  friend bool operator==(const SketchConfig&, const SketchConfig&) = default;
};

/// Head/tail split of a spectrum at target rank s.
struct SpectrumSummary {
  std::vector<double> sigma;  // nonincreasing, nonnegative
  int s = 1;
  double head = 0.0;  // sum_{j <= s} sigma_j^2
  double tail = 0.0;  // sum_{j > s} sigma_j^2
  double gap = 0.0;   // sigma_{s+1} / sigma_s

  double nuclear() const noexcept;
};

/// Throws PreconditionError unless 1 <= s < sigma.size(), sigma is sorted
/// nonincreasing and nonnegative, and sigma_s > 0.
SpectrumSummary summarize_spectrum(std::span<const double> sigma, int s);

/// n x ell matrix of independent N(0, 1) entries.
Matrix gaussian_sketch(Index n, Index ell, RngStream& rng);

/// Column sample of a Kaczmarz-style sketch: column k of Omega is
/// e_{index[k]} * scale[k], with scale = 1 / sqrt(ell * pi_index).
struct KaczmarzDraw {
  std::vector<Index> index;
  std::vector<double> scale;
};

/// Squared-column-norm sampling probabilities of m. Throws DegenerateInputError for m = 0.
std::vector<double> column_probabilities(const Matrix& m);
KaczmarzDraw kaczmarz_draw(const Matrix& m, Index ell, RngStream& rng);
/// Dense n x ell form of `kaczmarz_draw`.
Matrix kaczmarz_sketch(const Matrix& m, Index ell, RngStream& rng);

/// Full output of one lifted randomized polar realization.
struct LiftedPolar {
  Matrix value;  // Q Z_q, same shape as the input
  Matrix basis;  // Q, orthonormal columns spanning the powered sketch range
  double delta = 0.0;
  int draws = 1;  // 2 when the first sketch was degenerate and a resample was needed
};

/// Project down (Y = (M M^T)^h M Omega, Q = orth(Y), B = Q^T M), run the
/// polynomial schedule on B / delta, lift back with Q.
///
/// Powers are applied as Y <- M (M^T Y). For h <= 2 no re-orthonormalization
/// happens in between; for larger h the columns lose independence in double
/// precision, so Y is re-orthonormalized after every power (same range in
/// exact arithmetic).
LiftedPolar lifted_polar(const Matrix& m, const SketchConfig& scfg, const PolarConfig& pcfg,
                         RngStream& rng);

inline Matrix randomized_polar(const Matrix& m, const SketchConfig& scfg, const PolarConfig& pcfg,
                               RngStream& rng) {
  return lifted_polar(m, scfg, pcfg, rng).value;
}

/// (1/delta) [H_s - s/(p-1) rho_s^{4h} T_s]_+ , the Gaussian expected-alignment bound.
double prop2_lower_bound(const SpectrumSummary& spec, int p, int h, double delta);

/// Smallest integer h making the bound positive, or nullopt when the gap
/// ratio is 1 and h = 0 already fails.
std::optional<int> choose_power_iterations(const SpectrumSummary& spec, int p);

struct ThetaGamma {
  double theta = 0.0;
  double gamma = 1.0;
  bool degenerate = true;  // theta == 0: the bound certifies nothing
};

ThetaGamma theta_and_gamma(const SpectrumSummary& spec, int p, int h, double delta);

std::string to_string(SketchKind kind);

}  // namespace muonkit
