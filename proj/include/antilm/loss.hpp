#pragma once

// the combined training objective: plain NLL on positive tokens plus an
// alpha-weighted unlikelihood penalty on negative tokens,
//
//   L_neg = -alpha * sum_i ln(1 - exp(-ell_i)),
//
// where ell_i is the per-token cross entropy. the raw term diverges as
// ell -> 0 (model certain of a negative token), so exp(-ell) is clamped to
// at most 1-eps, bounding each token's penalty at -alpha*ln(eps).

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

namespace antilm {

inline void check_unlikelihood_args(double alpha, double eps) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("unlikelihood floor must be in (0, 0.5)");
}

// ln(1 - exp(-ell)) for ell > 0, stable on both sides of ell = ln 2
inline double log1mexp(double ell) {
  if (ell < std::numbers::ln2) return std::log(-std::expm1(-ell));
  return std::log1p(-std::exp(-ell));
}

// true when exp(-ell) would exceed the 1-eps clamp
inline bool unlikelihood_clamped(double ell, double eps) {
  // exp(-ell) > 1-eps  <=>  ell < -ln(1-eps)
  return ell < -std::log1p(-eps);
}

inline double negative_token_loss(double ell, double alpha, double eps) {
  if (unlikelihood_clamped(ell, eps)) return -alpha * std::log(eps);
  return -alpha * log1mexp(ell);
}

// d/d ell of negative_token_loss; zero inside the clamp region
inline double negative_token_dloss(double ell, double alpha, double eps) {
  if (unlikelihood_clamped(ell, eps)) return 0.0;
  double q = std::exp(-ell);
  return -alpha * q / (1.0 - q);
}

inline double positive_loss(std::span<const double> token_losses) {
  if (token_losses.empty()) throw std::invalid_argument("positive_loss: empty token losses");
  double sum = 0.0;
  for (double ell : token_losses) sum += ell;
  return sum;
}

inline double negative_loss(std::span<const double> token_losses, double alpha, double eps) {
  check_unlikelihood_args(alpha, eps);
  if (alpha == 0.0) return 0.0;
  double sum = 0.0;
  for (double ell : token_losses) sum += negative_token_loss(ell, alpha, eps);
  return sum;
}

inline double combined_loss(std::span<const double> pos_losses, std::span<const double> neg_losses,
                            double alpha, double eps) {
  double pos = pos_losses.empty() ? 0.0 : positive_loss(pos_losses);
  return pos + negative_loss(neg_losses, alpha, eps);
}

}  // namespace antilm
