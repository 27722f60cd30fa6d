#include "feame/weights.hpp"

#include "feame/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <type_traits>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace feame {

namespace {

constexpr int kMaxT = 30;

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return r;
}

using Real = long double;
using Complex = std::complex<Real>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Below this |beta| the direct system is nearly singular (it is exactly singular at beta = 0).
constexpr double kContourSwitch = 0.15;
constexpr Real kContourRadius = 0.3L;
constexpr int kContourPoints = 64;

/// Coefficients of a^s (1+a)^p (1+ab)^q in powers of a, padded to `len`.
template <class S>
Vec<S> expand(int shift, int p, int q, S b, int len) {
  std::vector<S> A(p + 1), B(q + 1);
  for (int k = 0; k <= p; ++k) A[k] = static_cast<S>(static_cast<Real>(binomial(p, k)));
  S bk = static_cast<S>(1.0L);
  for (int k = 0; k <= q; ++k, bk *= b) B[k] = static_cast<S>(static_cast<Real>(binomial(q, k))) * bk;
  Vec<S> c = Vec<S>::Zero(len);
  for (int i = 0; i <= p; ++i) {
    for (int j = 0; j <= q; ++j) {
      const int deg = shift + i + j;
      if (deg >= len) throw std::logic_error("weight polynomial degree overflow");
      c(deg) += A[i] * B[j];
    }
  }
  return c;
}

template <class S>
struct System {
  Mat<S> A;
  Vec<S> rhs;
};

/// Row-equilibrated coefficient system for m at b = e^z, or for m / (b - 1) when !scale_rhs.
template <class S>
System<S> build_system(int T, int y1, const std::vector<WeightKey>& keys, S z, bool scale_rhs = true) {
  const int n = 2 * T - 2;
  const S b = std::exp(z);
  System<S> sys{Mat<S>(n, n), Vec<S>()};
  for (int c = 0; c < n; ++c) {
    const auto& k = keys[c];
    sys.A.col(c) = expand<S>(k.n1, k.n1 - k.yT, T - 2 - k.n1 + k.yT, b, n);
  }
  sys.rhs = expand<S>(1, T - 2 - y1, T - 3 + y1, b, n);
  if (scale_rhs) {
    if constexpr (std::is_same_v<S, Real>) {
      sys.rhs *= std::expm1(z);
    } else {
      sys.rhs *= b - static_cast<S>(1.0L);
    }
  }
  for (int r = 0; r < n; ++r) {
    const Real scale = sys.A.row(r).cwiseAbs().maxCoeff();
    if (scale > 0.0L) {
      sys.A.row(r) /= static_cast<S>(scale);
      sys.rhs(r) /= static_cast<S>(scale);
    }
  }
  return sys;
}

template <class S>
Vec<S> solve_refined(const System<S>& sys) {
  const Eigen::FullPivLU<Mat<S>> lu(sys.A);
  Vec<S> m = lu.solve(sys.rhs);
  for (int it = 0; it < 2; ++it) m += lu.solve(Vec<S>(sys.rhs - sys.A * m));
  return m;
}

double condition_number(const Mat<Real>& A) {
  Eigen::JacobiSVD<Mat<Real>> svd(A);
  const auto& sv = svd.singularValues();
  const auto n = sv.size();
  return sv(n - 1) > 0.0L ? static_cast<double>(sv(0) / sv(n - 1)) : std::numeric_limits<double>::infinity();
}

void check_T(int T) {
  if (T < 3) throw std::invalid_argument("weights need T >= 3");
  if (T > kMaxT) throw std::invalid_argument("T = " + std::to_string(T) + " exceeds the supported maximum of 30");
}

}  // namespace

std::vector<WeightKey> weight_keys(int T) {
  std::vector<WeightKey> keys;
  for (int y1 = 0; y1 <= 1; ++y1) {
    for (int n1 = 0; n1 <= T - 1; ++n1) {
      for (int yT = 0; yT <= 1; ++yT) {
        if (n1 >= yT && n1 <= T - 2 + yT) keys.push_back({y1, yT, n1});
      }
    }
  }
  return keys;
}

std::vector<double> n11_counts(const WeightKey& s, int T) {
  // dp[y_prev][n1][n11] over periods 2..T.
  const int N = T;
  auto idx = [N](int n1, int n11) { return n1 * N + n11; };
  std::vector<double> cur[2], nxt[2];
  for (auto* v : {&cur[0], &cur[1], &nxt[0], &nxt[1]}) v->assign(static_cast<std::size_t>(N * N), 0.0);
  cur[s.y1][idx(0, 0)] = 1.0;
  for (int t = 2; t <= T; ++t) {
    for (auto& v : nxt) std::fill(v.begin(), v.end(), 0.0);
    for (int yp = 0; yp <= 1; ++yp) {
      for (int n1 = 0; n1 < N; ++n1) {
        for (int n11 = 0; n11 < N; ++n11) {
          const double c = cur[yp][idx(n1, n11)];
          if (c == 0.0) continue;
          const bool last = t == T;
          for (int y = 0; y <= 1; ++y) {
            if (last && y != s.yT) continue;
            const int m1 = n1 + y;
            const int m11 = n11 + (yp == 1 && y == 1);
            if (m1 >= N || m11 >= N) continue;
            nxt[y][idx(m1, m11)] += c;
          }
        }
      }
    }
    std::swap(cur, nxt);
  }
  std::vector<double> out(static_cast<std::size_t>(std::max(T, 1)), 0.0);
  if (s.n1 < 0 || s.n1 >= N) return out;
  for (int n11 = 0; n11 < N && n11 < static_cast<int>(out.size()); ++n11) {
    out[n11] = cur[s.yT][idx(s.n1, n11)];
  }
  return out;
}

double class_exp_sum(const WeightKey& s, int T, double beta) {
  const auto counts = n11_counts(s, T);
  double total = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] != 0.0) total += counts[k] * std::exp(beta * static_cast<double>(k));
  }
  return total;
}

WeightTable solve_weights(int T, double beta) {
  check_T(T);
  if (!std::isfinite(beta)) throw std::invalid_argument("beta must be finite");
  const int n = 2 * T - 2;
  WeightTable table;
  table.T = T;
  table.beta = beta;
  const bool near_zero = std::abs(beta) < kContourSwitch;
  for (int y1 = 0; y1 <= 1; ++y1) {
    std::vector<WeightKey> keys;
    for (const auto& k : weight_keys(T)) {
      if (k.y1 == y1) keys.push_back(k);
    }
    Vec<Real> m;
    if (beta == 0.0) {
      table.condition[y1] = condition_number(build_system<Real>(T, y1, keys, kContourRadius).A);
      m = Vec<Real>::Zero(n);
    } else if (!near_zero) {
      const auto sys = build_system<Real>(T, y1, keys, static_cast<Real>(beta));
      table.condition[y1] = condition_number(sys.A);
      if (!std::isfinite(table.condition[y1])) {
        throw std::runtime_error("singular weight system at T=" + std::to_string(T) + ", beta=" + std::to_string(beta));
      }
      m = solve_refined(sys);
    } else {
      // m / (e^beta - 1) is analytic in beta; trapezoid rule for the Cauchy integral on |z| = radius.
      table.condition[y1] = condition_number(build_system<Real>(T, y1, keys, kContourRadius).A);
      Vec<Complex> acc = Vec<Complex>::Zero(n);
      const Real pi = std::acos(-1.0L);
      for (int k = 0; k < kContourPoints; ++k) {
        const Complex z = std::polar(kContourRadius, 2 * pi * (k + 0.5L) / kContourPoints);
        acc += solve_refined(build_system<Complex>(T, y1, keys, z, false)) * (z / (z - static_cast<Real>(beta)));
      }
      m = std::expm1(static_cast<Real>(beta)) * (acc / static_cast<Real>(kContourPoints)).real();
    }
    if (table.condition[y1] > 1e10) table.ill_conditioned = true;
    for (int c = 0; c < n; ++c) {
      table.m[keys[c]] = static_cast<double>(m(c));
      table.w[keys[c]] = static_cast<double>(m(c) / static_cast<Real>(class_exp_sum(keys[c], T, beta)));
    }
  }
  return table;
}

WeightTable closed_form_weights(int T, double beta) {
  if (T < 4 || T > 7) throw std::invalid_argument("closed-form weights exist for T in {4,5,6,7}");
  const double b = std::exp(beta);
  const double e = std::expm1(beta);
  std::map<WeightKey, double> w;
  switch (T) {
    case 4:
      w[{0, 0, 1}] = e / 2;
      w[{0, 1, 2}] = e / (1 + b);
      w[{1, 0, 1}] = e / (1 + b);
      w[{1, 1, 2}] = e / 2;
      break;
    case 5:
      w[{0, 0, 1}] = e / 3;
      w[{0, 0, 2}] = e / (1 + 2 * b);
      w[{0, 1, 2}] = e / (2 + b);
      w[{0, 1, 3}] = e / (2 + b);
      w[{1, 0, 1}] = e / (2 + b);
      w[{1, 0, 2}] = e / (2 + b);
      w[{1, 1, 2}] = e / (1 + 2 * b);
      w[{1, 1, 3}] = e / 3;
      break;
    case 6:
      w[{0, 0, 1}] = e / 4;
      w[{0, 0, 2}] = 2 * e / (3 + 3 * b);
      w[{0, 1, 2}] = e / (3 + b);
      w[{0, 0, 3}] = e / (2 + 2 * b);
      w[{0, 1, 3}] = e * (1 + b) / (1 + 4 * b + b * b);
      w[{0, 1, 4}] = e / (3 + b);
      w[{1, 0, 1}] = e / (3 + b);
      w[{1, 0, 2}] = e * (1 + b) / (1 + 4 * b + b * b);
      w[{1, 1, 2}] = e / (2 + 2 * b);
      w[{1, 0, 3}] = e / (3 + b);
      w[{1, 1, 3}] = 2 * e / (3 + 3 * b);
      w[{1, 1, 4}] = e / 4;
      break;
    case 7:
      w[{0, 0, 1}] = e / 5;
      w[{0, 0, 2}] = 3 * e / (6 + 4 * b);
      w[{0, 1, 2}] = e / (4 + b);
      w[{0, 0, 3}] = e * (1 + 2 * b) / (1 + 6 * b + 3 * b * b);
      w[{0, 1, 3}] = e * (2 + b) / (3 + 6 * b + b * b);
      w[{0, 0, 4}] = e / (3 + 2 * b);
      w[{0, 1, 4}] = e * (2 + b) / (3 + 6 * b + b * b);
      w[{0, 1, 5}] = e / (4 + b);
      w[{1, 0, 1}] = e / (4 + b);
      w[{1, 0, 2}] = e * (2 + b) / (3 + 6 * b + b * b);
      w[{1, 1, 2}] = e / (3 + 2 * b);
      w[{1, 0, 3}] = e * (2 + b) / (3 + 6 * b + b * b);
      w[{1, 1, 3}] = e * (1 + 2 * b) / (1 + 6 * b + 3 * b * b);
      w[{1, 0, 4}] = e / (4 + b);
      w[{1, 1, 4}] = 3 * e / (6 + 4 * b);
      w[{1, 1, 5}] = e / 5;
      break;
  }
  WeightTable table;
  table.T = T;
  table.beta = beta;
  for (const auto& k : weight_keys(T)) {
    auto it = w.find(k);
    const double wk = it == w.end() ? 0.0 : it->second;
    table.w[k] = wk;
    table.m[k] = wk * class_exp_sum(k, T, beta);
  }
  return table;
}

double ame1_from_weights(const HistoryDistribution& freqs, const WeightTable& table, const std::string& x_key) {
  if (static_cast<int>(freqs.window_length()) != table.T) {
    throw std::invalid_argument("frequency window length " + std::to_string(freqs.window_length()) +
                                " does not match weight table T=" + std::to_string(table.T));
  }
  if (freqs.num_alternatives() != 2) throw std::invalid_argument("weights apply to binary histories");
  double total = 0.0;
  for (const auto& [key, f] : freqs.entries()) {
    if (key.x_key != x_key) continue;
    auto it = table.w.find(binary_statistic(key.y));
    if (it != table.w.end()) total += it->second * f;
  }
  return total;
}

double ame1_from_weights(const HistoryDistribution& freqs, const WeightTable& table) {
  double total = 0.0;
  for (const auto& k : freqs.x_keys()) total += freqs.key_share(k) * ame1_from_weights(freqs, table, k);
  return total;
}

}  // namespace feame
