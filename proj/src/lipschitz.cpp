#include "mspmdp/lipschitz.hpp"

#include <cmath>

namespace mspmdp {

namespace {

void check_reg(const RegularityData& reg, int T) {
  reg.validate(T);
  require(reg.rho > 0.0, Errc::SlaterViolation, "rho must be positive");
}

}  // namespace

ConstantTable value_function_constants(const RegularityData& reg, int T) {
  check_reg(reg, T);
  ConstantTable table;
  table.T = T;
  const double L_S = reg.maxLS();
  table.L_X = Vector::Zero(T);
  for (int t = 1; t <= T; ++t) table.L_X[t - 1] = reg.A * reg.L_g[t - 1] / reg.rho;
  table.L = Vector::Zero(T);
  double L_next = 0.0;  // L_{T+1} = 0
  for (int t = T; t >= 1; --t) {
    table.L[t - 1] =
        (reg.L_C[t - 1] + L_next) * L_S + table.L_X[t - 1] + table.L_X[t - 1] * L_S;
    L_next = table.L[t - 1];
  }
  return table;
}

ConstantTable feasible_set_constants(const RegularityData& reg, int T) {
  check_reg(reg, T);
  ConstantTable table;
  table.T = T;
  const double L_S = reg.maxLS();
  const double L_g = reg.maxLg();
  const double q = reg.A * L_g / reg.rho;

  table.LX_feas = Vector::Zero(T);
  table.l_s = Vector::Zero(T);
  double lx_prev = 0.0, ls = 0.0;  // L_{X,0} = 0, l_{s,1} = 0
  for (int t = 1; t <= T; ++t) {
    const double lx = q * (ls + lx_prev + 1.0);
    table.LX_feas[t - 1] = lx;
    table.l_s[t - 1] = ls;
    ls = L_S * (ls + lx + 1.0);
    lx_prev = lx;
  }
  table.L_X_global = T >= 1 ? table.LX_feas.maxCoeff() : 0.0;

  // Closed form through the characteristic roots of
  // r^2 - (q L_S + q + L_S) r + q L_S = 0, cross-checked against the recursion.
  const double b = q * L_S + q + L_S;
  const double disc = b * b - 4.0 * q * L_S;
  if (disc >= 0.0) {
    const double r1 = 0.5 * (b + std::sqrt(disc));
    const double r2 = 0.5 * (b - std::sqrt(disc));
    table.r1 = r1;
    table.r2 = r2;
    const double resonance = 1.0 - q - L_S;
    for (int t = 1; t <= T; ++t) {
      double closed;
      if (std::abs(resonance) > 1e-9 && std::abs(r1 - r2) > 1e-9) {
        const double cstar = q / resonance;
        closed = cstar / (r1 - r2) *
                     ((r2 - 1.0) * std::pow(r1, t + 1) - (r1 - 1.0) * std::pow(r2, t + 1)) +
                 cstar;
      } else if (std::abs(resonance) <= 1e-9) {
        const double qs = q * L_S;
        closed = q * q * L_S / ((1.0 - qs) * (1.0 - qs)) * (std::pow(qs, t) - 1.0) +
                 q * t / (1.0 - qs);
      } else {
        // Double root off resonance: (a + c t) r^t + fixed point. A vanishing
        // root collapses the transient entirely.
        const double r = 0.5 * (r1 + r2);
        const double cstar = q / resonance;
        if (std::abs(r) < 1e-12) {
          closed = cstar;
        } else {
          const double a = -cstar;
          const double c = (q - cstar - a * r) / r;
          closed = (a + c * t) * std::pow(r, t) + cstar;
        }
      }
      require(std::abs(closed - table.LX_feas[t - 1]) <=
                  1e-9 * std::max(1.0, std::abs(table.LX_feas[t - 1])),
              Errc::InvalidInput, "closed form disagrees with the feasible-set recursion");
    }
  }
  return table;
}

ConstantTable endogenous_coeffs(const RegularityData& reg, int T) {
  ConstantTable table = value_function_constants(reg, T);
  const double L_C = reg.maxLC();
  const double L_S = reg.maxLS();

  table.L_hat = Vector::Zero(T);
  for (int t = 1; t <= T; ++t) {
    const double L_next = t < T ? table.L[t] : 0.0;  // L_{t+1}
    table.L_hat[t - 1] =
        L_C * L_S + L_C * table.L_X[t - 1] + L_C + L_next * L_S + L_next * table.L_X[t - 1];
  }

  // Triangular feasible-set coefficients in zeta: L_{X,t,t-1} = A L_{g,t} L_S / rho,
  // and for j <= t-2
  //   L_{X,t,j} = (A L_{g,t}/rho)(L_{X,t-1,j} + L_S^{t-j} + sum_{k=j+1}^{t-1} L_S^{t-1-k} L_{X,k,j}).
  table.L_X_tj = Matrix::Zero(T + 1, T + 1);
  for (int t = 1; t <= T; ++t) {
    const double qt = reg.A * reg.L_g[t - 1] / reg.rho;
    table.L_X_tj(t, t - 1) = qt * L_S;
    for (int j = 0; j <= t - 2; ++j) {
      double sum = 0.0;
      for (int k = j + 1; k <= t - 1; ++k)
        sum += std::pow(L_S, t - 1 - k) * table.L_X_tj(k, j);
      table.L_X_tj(t, j) = qt * (table.L_X_tj(t - 1, j) + std::pow(L_S, t - j) + sum);
    }
  }

  // H_t: per-stage bracket of the projected-objective estimate; H_T = L_C.
  table.H = Vector::Zero(T + 1);
  for (int t = 0; t <= T - 1; ++t) {
    const double LX_t = t >= 1 ? table.L_X[t - 1] : 0.0;  // L_{X,0} = 0
    const double L_next = t + 1 <= T ? table.L[t] : 0.0;  // L_{t+1}
    double value = L_C * L_S + L_C * LX_t + L_C + L_next * L_S + L_next * LX_t + L_C;
    double sum1 = 0.0;
    for (int k = t + 1; k <= T; ++k) sum1 += table.L_X_tj(k, t);
    value += L_C * sum1;
    double sum2 = 0.0;
    for (int k = 1; k <= T - 1 - t; ++k)
      for (int l = k + t + 1; l <= T; ++l) sum2 += std::pow(L_S, k) * table.L_X_tj(l - k, t);
    value += L_C * sum2;
    double sum3 = 0.0;
    for (int k = 1; k <= T - t; ++k) sum3 += std::pow(L_S, k);
    value += L_C * sum3;
    table.H[t] = value;
  }
  table.H[T] = L_C;
  return table;
}

ConstantTable exogenous_global_coeffs(const RegularityData& reg, int T) {
  ConstantTable table = feasible_set_constants(reg, T);
  const double L_C = reg.maxLC();
  const double L_S = reg.maxLS();
  const double L_X = table.L_X_global;

  // L_theta = T L_C (L_X + 1) + L_C (L_X + 1) sum_{t=1}^T sum_{k=1}^{t-1} L_S^k,
  // evaluated as the direct double sum (the geometric closed forms reduce to it).
  double tail = 0.0;
  for (int t = 1; t <= T; ++t)
    for (int k = 1; k <= t - 1; ++k) tail += std::pow(L_S, k);
  table.L_theta = T * L_C * (L_X + 1.0) + L_C * (L_X + 1.0) * tail;

  // L_sigma = L_C (T + 1 + sum_{t=1}^T sum_{k=1}^t L_S^k); at L_S = 1 this is
  // the T + 1 + T(T+1)/2 evaluation.
  double state_sum = 0.0;
  for (int t = 1; t <= T; ++t)
    for (int k = 1; k <= t; ++k) state_sum += std::pow(L_S, k);
  table.L_sigma1 = L_C * (T + 1.0 + state_sum);
  table.L_sigma2 = L_C * (T + 1.0 + T * (T + 1.0) / 2.0);
  table.L_sigma = L_S == 1.0 ? table.L_sigma2 : table.L_sigma1;
  return table;
}

ConstantTable stagewise_coeffs(const RegularityData& reg, const Vector& L_Q, int T) {
  require(L_Q.size() == T, Errc::MissingRegularity,
          "conditional-kernel moduli must cover stages 2..T+1");
  require(L_Q.minCoeff() >= 0.0, Errc::InvalidModulus, "L_Q must be nonnegative");
  ConstantTable table = feasible_set_constants(reg, T);
  const double L_S = reg.maxLS();
  const double L_g = reg.maxLg();
  const double factor = (L_g * reg.A / reg.rho + 1.0) * (L_S + 1.0);

  // L_Q[t-1] holds L_{Q_{t+1}} for t = 1..T-1; the stage-(T+1) modulus is zero.
  table.L_v = Vector::Zero(T);
  double L_v_next = 0.0;  // L_{v,T+1} = 0
  for (int t = T; t >= 1; --t) {
    const double lq = t < T ? L_Q[t - 1] : 0.0;  // L_{Q_{t+1}}
    table.L_v[t - 1] = (reg.L_C[t - 1] + std::max(L_v_next, L_v_next * lq)) * factor;
    L_v_next = table.L_v[t - 1];
  }

  table.L_xi = Vector::Zero(T);
  for (int t = 1; t <= T; ++t) {
    const double L_v_tp1 = t < T ? table.L_v[t] : 0.0;
    const double lq = t < T ? L_Q[t - 1] : 0.0;  // L_{Q_{t+1}}
    table.L_xi[t - 1] =
        reg.L_C[t - 1] * (table.LX_feas[t - 1] + 1.0) + L_v_tp1 * (table.LX_feas[t - 1] + lq);
  }
  return table;
}

ConstantTable full_constant_table(const RegularityData& reg, int T) {
  ConstantTable table = endogenous_coeffs(reg, T);
  const ConstantTable exo = exogenous_global_coeffs(reg, T);
  table.LX_feas = exo.LX_feas;
  table.l_s = exo.l_s;
  table.r1 = exo.r1;
  table.r2 = exo.r2;
  table.L_theta = exo.L_theta;
  table.L_sigma1 = exo.L_sigma1;
  table.L_sigma2 = exo.L_sigma2;
  table.L_sigma = exo.L_sigma;
  table.L_X_global = exo.L_X_global;
  if (reg.L_Q) {
    const ConstantTable st = stagewise_coeffs(reg, *reg.L_Q, T);
    table.L_v = st.L_v;
    table.L_xi = st.L_xi;
  }
  return table;
}

GrowthCondition growth_from_strong_convexity(double mu) {
  require(mu > 0.0, Errc::InvalidModulus, "strong-convexity modulus must be positive");
  return GrowthCondition{mu, 2.0};
}

}  // namespace mspmdp
