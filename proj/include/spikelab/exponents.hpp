#pragma once

// Exponent bookkeeping for the coupled system -Lap u + u = v^q,
// -Lap v + v = u^p. The subcriticality condition (strict) is
//   1/(p+1) + 1/(q+1) > (N-2)/N,
// and the dual exponents are alpha = (p+1)/p, beta = (q+1)/q with critical
// thresholds beta* = N(q+1)/(Nq - 2(q+1)), alpha* = N(p+1)/(Np - 2(p+1))
// (infinite when the denominator is nonpositive).
//
// bootstrap_exponents runs the integrability ladder
//   p_1 = beta*, q_1 = alpha*,
//   p_{n+1} = N q_n / (N q - 2 q_n),  q_{n+1} = N p_{n+1} / (N p - 2 p_{n+1});
// under subcriticality it escapes in finitely many steps (Unbounded).
// Otherwise the ladder stalls below its stationary exponent: the two-step
// recursion composes to the Moebius map F(q) = Nq/(Npq - 2(p+1)q), whose
// nonzero fixed point q0 = N(pq-1)/(2(p+1)) is repelling forward (F'(q0) = pq)
// and the start q_1 = alpha* <= q+1 <= q0 sits below it, so the forward
// iterates sag toward 0. The recorded q_limit is the stationary exponent
// itself, recovered by iterating the inverse map q <- Npq·z/(N + 2(p+1)z),
// which contracts to q0 at rate 1/(pq) (MaxIter tag).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikelab {

struct ExponentPair {
  double p = 0;
  double q = 0;
  int N = 0;

  ExponentPair() = default;
  ExponentPair(double p_, double q_, int N_) : p(p_), q(q_), N(N_) {
    if (!(p > 1.0) || !(q > 1.0)) throw std::invalid_argument("exponents: need p > 1 and q > 1");
    if (N < 1) throw std::invalid_argument("exponents: need N >= 1");
  }

  double alpha() const { return (p + 1.0) / p; }
  double beta() const { return (q + 1.0) / q; }

  double beta_star() const {
    double den = N * q - 2.0 * (q + 1.0);
    if (den <= 0) return std::numeric_limits<double>::infinity();
    return N * (q + 1.0) / den;
  }

  double alpha_star() const {
    double den = N * p - 2.0 * (p + 1.0);
    if (den <= 0) return std::numeric_limits<double>::infinity();
    return N * (p + 1.0) / den;
  }

  bool hc_holds() const {
    return 1.0 / (p + 1.0) + 1.0 / (q + 1.0) > (N - 2.0) / N;
  }

  // p+1 < beta* and q+1 < alpha* (trivially true when the star is infinite).
  bool dual_subcritical() const {
    return p + 1.0 < beta_star() && q + 1.0 < alpha_star();
  }
};

enum class BootstrapTag { Unbounded, MaxIter, ImmediateRegularity };

inline std::string bootstrap_tag_name(BootstrapTag t) {
  switch (t) {
    case BootstrapTag::Unbounded: return "Unbounded";
    case BootstrapTag::MaxIter: return "MaxIter";
    case BootstrapTag::ImmediateRegularity: return "ImmediateRegularity";
  }
  return "?";
}

struct BootstrapResult {
  BootstrapTag tag = BootstrapTag::MaxIter;
  std::vector<double> p_seq;  // p_1, p_2, ...
  std::vector<double> q_seq;  // q_1, q_2, ...
  double q_limit = std::numeric_limits<double>::quiet_NaN();
  int steps = 0;
};

inline double bootstrap_fixed_point(const ExponentPair& e) {
  return e.N * (e.p * e.q - 1.0) / (2.0 * (e.p + 1.0));
}

inline BootstrapResult bootstrap_exponents(const ExponentPair& e, int max_iter = 200,
                                           double tol = 1e-12) {
  BootstrapResult r;
  double bs = e.beta_star(), as = e.alpha_star();
  if (std::isinf(bs) || std::isinf(as)) {
    r.tag = BootstrapTag::ImmediateRegularity;
    return r;
  }
  double pn = bs, qn = as;
  r.p_seq.push_back(pn);
  r.q_seq.push_back(qn);
  for (int it = 1; it < max_iter; ++it) {
    double dp = e.N * e.q - 2.0 * qn;
    if (dp <= 0) {
      r.tag = BootstrapTag::Unbounded;
      r.steps = it;
      return r;
    }
    double pn1 = e.N * qn / dp;
    double dq = e.N * e.p - 2.0 * pn1;
    if (dq <= 0) {
      r.tag = BootstrapTag::Unbounded;
      r.p_seq.push_back(pn1);
      r.steps = it;
      return r;
    }
    double qn1 = e.N * pn1 / dq;
    r.p_seq.push_back(pn1);
    r.q_seq.push_back(qn1);
    if (std::abs(qn1 - qn) < tol && std::abs(pn1 - pn) < tol) {
      r.steps = it;
      break;
    }
    pn = pn1;
    qn = qn1;
  }
  r.tag = BootstrapTag::MaxIter;
  if (r.steps == 0) r.steps = max_iter;
  // stationary exponent of the ladder via the contractive inverse direction
  double D = e.N * e.p * e.q, C = 2.0 * (e.p + 1.0);
  double z = e.alpha_star();
  for (int it = 0; it < 400; ++it) {
    double z1 = D * z / (e.N + C * z);
    if (std::abs(z1 - z) < 1e-14 * std::max(1.0, std::abs(z1))) {
      z = z1;
      break;
    }
    z = z1;
  }
  r.q_limit = z;
  return r;
}

}  // namespace spikelab
