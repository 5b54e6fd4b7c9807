#pragma once

// Symbol-error probability of noncoherent M-ary FSK:
//   P(M, rho) = 1/M * sum_{i=2..M} (-1)^i C(M, i) exp(-(1 - 1/i) rho)

#include <cmath>
#include <limits>
#include <vector>

#include "occnav/core_model.hpp"

namespace occnav {

inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

namespace detail {

// C(m, i) for i = 0..m. Exact integers in long double up to m = 64;
// log-gamma beyond that.
inline std::vector<long double> binomial_row(int m) {
  std::vector<long double> c(m + 1);
  if (m <= 64) {
    c[0] = 1.0L;
    for (int i = 1; i <= m; ++i) c[i] = c[i - 1] * (m - i + 1) / i;
  } else {
    for (int i = 0; i <= m; ++i) c[i] = std::exp(static_cast<long double>(log_binomial(m, i)));
  }
  return c;
}

// 1 - e^-rho/M * sum_k rho^k h_k(M) / k!, where h_k(M) is the complete
// homogeneous symmetric polynomial of degree k in 1, 1/2, ..., 1/M. Same
// value as the alternating sum, but every term is positive.
inline long double mfsk_error_series(int m, long double rho) {
  std::vector<long double> h(m + 1, 1.0L);  // h_0(n) = 1
  long double sum = 1.0L, coef = 1.0L;
  for (int k = 1; k < 100000; ++k) {
    h[0] = 0.0L;
    for (int n = 1; n <= m; ++n) h[n] = h[n - 1] + h[n] / n;  // h_k(n) from h_{k-1}(n)
    coef *= rho / k;
    const long double term = coef * h[m];
    sum += term;
    if (k > rho && term < sum * 1e-21L) break;
  }
  return 1.0L - std::exp(-rho) * sum / m;
}

}  // namespace detail

/// Eq. as written over the symbol SNR rho. The alternating sum cancels
/// heavily for large M at small rho; when its rounding bound is too loose
/// the positive-term series is used instead.
inline double mfsk_error(int m, double rho) {
  if (m < 2) throw DomainError("M must be at least 2");
  if (!(rho >= 0.0)) throw DomainError("SNR must be non-negative");
  const auto c = detail::binomial_row(m);
  long double sum = 0.0L, mag = 0.0L;
  for (int i = 2; i <= m; ++i) {
    const long double t = c[i] * std::exp(-(1.0L - 1.0L / i) * rho);
    sum += (i % 2 == 0) ? t : -t;
    mag += t;
  }
  const long double direct = sum / m;
  const long double eps = std::numeric_limits<long double>::epsilon();
  if (4.0L * eps * mag / m <= 1e-14L * std::abs(direct)) return static_cast<double>(direct);
  return static_cast<double>(detail::mfsk_error_series(m, rho));
}

/// Bit-error probability at per-bit SNR: the symbol carries log2(M) bits,
/// so rho_symbol = log2(M) rho_bit, and a symbol error hits each bit with
/// probability (M/2)/(M-1).
inline double mfsk_bit_error(int m, double rho_bit) {
  if (m < 2 || (m & (m - 1)) != 0) throw DomainError("M must be a power of two");
  const double k = std::log2(static_cast<double>(m));
  return mfsk_error(m, k * rho_bit) * (m / 2.0) / (m - 1.0);
}

inline double db_to_linear(double db) { return db == 0.0 ? 1.0 : std::pow(10.0, db / 10.0); }

struct MfskErrorPoint {
  double snr_db{0.0};
  int m{2};
  double rho{0.0};
  double p_symbol{0.0};  // at symbol SNR rho
  double p_bit{0.0};     // at bit SNR rho
};

inline std::vector<MfskErrorPoint> ber_sweep(const std::vector<int>& orders, double snr_db_lo, double snr_db_hi,
                                             double step_db) {
  if (orders.empty() || !(step_db > 0.0) || snr_db_hi < snr_db_lo) throw DomainError("empty BER sweep");
  std::vector<MfskErrorPoint> out;
  const int n = static_cast<int>(std::floor((snr_db_hi - snr_db_lo) / step_db + 1e-9));
  for (int k = 0; k <= n; ++k) {
    const double db = snr_db_lo + k * step_db;
    const double rho = db_to_linear(db);
    for (int m : orders) out.push_back({db, m, rho, mfsk_error(m, rho), mfsk_bit_error(m, rho)});
  }
  return out;
}

}  // namespace occnav
