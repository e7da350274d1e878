#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "muonkit/matrix.hpp"

namespace muonkit {

enum class MomentumKind { nesterov, polyak };

/// State of one matrix parameter under Muon. Each parameter owns its own state.
struct MuonState {
  Matrix x;  // X_k
  Matrix c;  // C_k, zero at k = 0
  std::int64_t k = 0;
  MomentumKind kind = MomentumKind::nesterov;
  double beta = 0.9;
  double eta = 0.01;
};

MuonState make_muon_state(Matrix x0, MomentumKind kind, double beta, double eta);

/// Maps the momentum matrix to an update direction (exact, polynomial or randomized polar).
using PolarMap = std::function<Matrix(const Matrix&)>;

/// C_k = beta C_{k-1} + G_k; M_k = beta C_k + G_k (Nesterov) or C_k (Polyak);
/// X_{k+1} = X_k - eta * polar(M_k). A zero M_k gives a zero update and
/// `polar` is not called.
MuonState muon_step(const MuonState& state, const Matrix& g, const PolarMap& polar);

/// The momentum matrix M_k that `muon_step(state, g, ...)` would feed to polar.
Matrix momentum_matrix(const MuonState& state, const Matrix& g);

/// Rescaled Nesterov momentum by its own recursion:
/// M~_k = beta M~_{k-1} + (1 - beta) ((1 + beta) G_k - beta G_{k-1}).
/// With C_0 = 0 take G_0 = 0 and M~_0 = 0. Agrees with (1 - beta) M_k.
Matrix scaled_momentum(const MuonState& state, const Matrix& g_current, const Matrix& g_previous,
                       const Matrix& m_tilde_previous);

enum class ScheduleSource { theorem1, corollary1, manual };

struct Schedule {
  double eta = 0.0;
  double beta = 0.0;
  ScheduleSource source = ScheduleSource::manual;
  std::int64_t horizon = 0;
  double alpha = 2.0;
};

/// eta = K^{-(2a-1)/(3a-2)}, beta = 1 - K^{-a/(3a-2)}; needs K >= 2 and a in (1, 2].
Schedule theorem1_schedule(std::int64_t horizon, double alpha);
/// eta = K^{-3/4}, beta = 1 - K^{-1/2}; needs K >= 2.
Schedule corollary1_schedule(std::int64_t horizon);

/// Conservative constant in the batch-moment bound; at most 2 for every alpha in (1, 2].
inline constexpr double kBatchMomentConstant = 2.0;

/// Smallest integer batch size strictly above
/// {2 sqrt(pi) (1 + sqrt(d0) (1 + nu_bar)) C^{1/alpha} sigma1 / (1 - gamma_bar)}^{alpha/(alpha-1)}.
/// Returns 1 when sigma1 = 0.
std::int64_t min_batch_size(double alpha, double sigma1, std::int64_t d0, double gamma_bar,
                            double nu_bar);

enum class BaselineKind { sgd_momentum, sgd_nesterov, adamw };

struct BaselineHyper {
  double lr = 1e-3;
  double momentum = 0.9;  // SGD variants
  double beta1 = 0.9;     // AdamW
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct BaselineState {
  Matrix x;
  Matrix m;  // momentum buffer / first moment
  Matrix v;  // second moment (AdamW only)
  std::int64_t k = 0;
};

BaselineState make_baseline_state(Matrix x0);

/// One textbook update:
///   sgd_momentum: b = mu b + g;  x -= lr b
///   sgd_nesterov: b = mu b + g;  x -= lr (g + mu b)
///   adamw:        decoupled weight decay, bias-corrected moments.
BaselineState baseline_step(BaselineKind kind, const BaselineState& state, const Matrix& g,
                            const BaselineHyper& hyper);

/// Every optimizer the runner and the FLOP model know about.
enum class OptimizerKind { muon_nesterov, muon_polyak, sgd_momentum, sgd_nesterov, adamw };

bool is_muon(OptimizerKind kind) noexcept;

std::string to_string(OptimizerKind kind);
std::string to_string(MomentumKind kind);
std::string to_string(ScheduleSource source);
std::string to_string(BaselineKind kind);

}  // namespace muonkit
