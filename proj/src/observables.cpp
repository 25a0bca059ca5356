#include "otoc/observables.hpp"

#include <cmath>
#include <stdexcept>

namespace otoc {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int l = 2; l <= n; ++l) {
        const double p2 = ((2 * l - 1) * x * p1 - (l - 1) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

// Orthonormal associated Legendre P_kq(cos theta) with Condon-Shortley
// phase, so Y_kq = P_kq(cos theta) e^{i q phi} for q >= 0.  Fills
// table[k] for k in [q, k_max].
void normalized_legendre(int q, int k_max, double cos_t, double sin_t,
                         std::vector<double>& table) {
  table.assign(k_max + 1, 0.0);
  double pqq = std::sqrt(1.0 / (4.0 * M_PI));
  for (int m = 1; m <= q; ++m)
    pqq *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * sin_t;
  if (q > k_max) return;
  table[q] = pqq;
  if (q + 1 > k_max) return;
  table[q + 1] = std::sqrt(2.0 * q + 3.0) * cos_t * pqq;
  for (int l = q + 2; l <= k_max; ++l) {
    const double a =
        std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - q * q));
    const double b = std::sqrt(
        ((l - 1.0) * (l - 1.0) - q * q) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
    table[l] = a * (cos_t * table[l - 1] - b * table[l - 2]);
  }
}

}  // namespace

double WignerGrid::sphere_integral() const {
  double total = 0.0;
  const double dphi = 2.0 * M_PI / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    double row = 0.0;
    for (int j = 0; j < n_phi; ++j) row += values(i, j);
    total += theta_weights[i] * row * dphi;
  }
  return total;
}

WignerGrid wigner(const DickeState& state, int n_theta, int n_phi) {
  const int dim = state.spin.dim();
  const int two_s = state.spin.two_s;
  if (dim > 201)
    throw std::invalid_argument("wigner: supported up to 2S+1 = 201");
  if (state.amps.size() != dim)
    throw std::invalid_argument("wigner: amplitude size mismatch");
  if (n_theta <= 0) n_theta = two_s + 2;
  if (n_phi <= 0) n_phi = 4 * two_s + 4;
  if (n_phi <= 2 * two_s)
    throw std::invalid_argument("wigner: n_phi must exceed 2*(2S)");

  // Multipole moments rho_kq = Tr[rho T_kq^dag] = conj(<psi|T_kq|psi>)
  // with the orthonormal tensor operators
  // (T_kq)_{m+q, m} = sqrt((2k+1)/(2S+1)) <S m; k q | S m+q>.
  // Each tensor lives on a single diagonal, so every moment is one
  // Clebsch-Gordan-weighted sum over m.
  Eigen::MatrixXcd rho_kq = Eigen::MatrixXcd::Zero(two_s + 1, 2 * two_s + 1);
  const auto q_col = [two_s](int q) { return q + two_s; };
  const double s = state.spin.s();
  for (int k = 0; k <= two_s; ++k) {
    const double scale = std::sqrt((2.0 * k + 1.0) / dim);
    for (int q = -k; q <= k; ++q) {
      cplx moment(0.0, 0.0);
      for (int col = 0; col < dim; ++col) {
        const double m = s - col;  // ket projection
        const int row = col - q;   // bra projection m + q
        if (row < 0 || row >= dim) continue;
        const double cg = clebsch_gordan(s, m, k, q, s, m + q);
        if (cg == 0.0) continue;
        moment += std::conj(state.amps[row]) * (scale * cg) * state.amps[col];
      }
      rho_kq(k, q_col(q)) = std::conj(moment);
    }
  }

  WignerGrid grid;
  grid.n_theta = n_theta;
  grid.n_phi = n_phi;
  std::vector<double> x;
  gauss_legendre(n_theta, x, grid.theta_weights);
  grid.thetas.resize(n_theta);
  for (int i = 0; i < n_theta; ++i) grid.thetas[i] = std::acos(-x[i]);
  // nodes were ascending in cos; flip so thetas ascend
  grid.phis.resize(n_phi);
  for (int j = 0; j < n_phi; ++j) grid.phis[j] = 2.0 * M_PI * j / n_phi;
  grid.values.resize(n_theta, n_phi);

  std::vector<double> legendre;
  std::vector<cplx> a_q(2 * two_s + 1);
  for (int i = 0; i < n_theta; ++i) {
    const double ct = std::cos(grid.thetas[i]);
    const double st = std::sin(grid.thetas[i]);
    std::fill(a_q.begin(), a_q.end(), cplx(0.0, 0.0));
    for (int q = 0; q <= two_s; ++q) {
      normalized_legendre(q, two_s, ct, st, legendre);
      for (int k = q; k <= two_s; ++k) {
        const double p = legendre[k];
        a_q[q_col(q)] += rho_kq(k, q_col(q)) * p;
        if (q > 0) {
          // Y_{k,-q} = (-1)^q conj(Y_kq)
          const double sign = (q % 2 == 0) ? 1.0 : -1.0;
          a_q[q_col(-q)] += rho_kq(k, q_col(-q)) * sign * p;
        }
      }
    }
    for (int j = 0; j < n_phi; ++j) {
      cplx w = a_q[q_col(0)];
      for (int q = 1; q <= two_s; ++q) {
        const cplx e = std::exp(cplx(0.0, q * grid.phis[j]));
        w += a_q[q_col(q)] * e + a_q[q_col(-q)] * std::conj(e);
      }
      grid.values(i, j) = w.real();
    }
  }
  return grid;
}

namespace {

long double log_factorial(double v) {
  static const std::vector<long double> table = [] {
    std::vector<long double> t(2048, 0.0L);
    for (std::size_t i = 2; i < t.size(); ++i)
      t[i] = t[i - 1] + std::log(static_cast<long double>(i));
    return t;
  }();
  const long long n = std::llround(v);
  if (n >= 0 && n < static_cast<long long>(table.size())) return table[n];
  return std::lgammal(static_cast<long double>(v) + 1.0L);
}

bool non_negative_integer(double v) {
  return v > -1e-9 && std::abs(v - std::round(v)) < 1e-9;
}

}  // namespace

double clebsch_gordan(double j1, double m1, double j2, double m2, double j,
                      double m) {
  if (std::abs(m1 + m2 - m) > 1e-9) return 0.0;
  if (j < std::abs(j1 - j2) - 1e-9 || j > j1 + j2 + 1e-9) return 0.0;
  if (std::abs(m1) > j1 + 1e-9 || std::abs(m2) > j2 + 1e-9 ||
      std::abs(m) > j + 1e-9)
    return 0.0;
  // All (j +- m) combinations must be integers.
  for (double v : {j1 + m1, j1 - m1, j2 + m2, j2 - m2, j + m, j - m,
                   j1 + j2 - j, j1 - j2 + j, -j1 + j2 + j})
    if (!non_negative_integer(v)) return 0.0;

  const long double prefactor =
      0.5L * (std::log(2.0L * static_cast<long double>(j) + 1.0L) +
              log_factorial(j1 + j2 - j) + log_factorial(j1 - j2 + j) +
              log_factorial(-j1 + j2 + j) - log_factorial(j1 + j2 + j + 1) +
              log_factorial(j1 + m1) + log_factorial(j1 - m1) +
              log_factorial(j2 + m2) + log_factorial(j2 - m2) +
              log_factorial(j + m) + log_factorial(j - m));

  const int k_min = static_cast<int>(std::round(
      std::max({0.0, j2 - j - m1, j1 + m2 - j})));
  const int k_max = static_cast<int>(std::round(
      std::min({j1 + j2 - j, j1 - m1, j2 + m2})));
  long double sum = 0.0L;
  for (int k = k_min; k <= k_max; ++k) {
    const long double log_term =
        log_factorial(k) + log_factorial(j1 + j2 - j - k) +
        log_factorial(j1 - m1 - k) + log_factorial(j2 + m2 - k) +
        log_factorial(j - j2 + m1 + k) + log_factorial(j - j1 - m2 + k);
    const long double term = expl(prefactor - log_term);
    sum += (k % 2 == 0) ? term : -term;
  }
  return static_cast<double>(sum);
}

DecayTime decay_time(std::span<const double> times,
                     std::span<const double> magnitudes, double threshold) {
  if (times.size() != magnitudes.size() || times.empty())
    throw std::invalid_argument("decay_time: empty or mismatched series");
  DecayTime result;
  result.threshold = threshold;
  if (magnitudes[0] < threshold) {
    result.t_cross = times[0];
    return result;
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (magnitudes[i] < threshold) {
      const double y0 = magnitudes[i - 1];
      const double y1 = magnitudes[i];
      const double frac = (y0 - threshold) / (y0 - y1);
      result.t_cross = times[i - 1] + frac * (times[i] - times[i - 1]);
      return result;
    }
  }
  return result;  // no crossing, reported explicitly as empty
}

}  // namespace otoc
