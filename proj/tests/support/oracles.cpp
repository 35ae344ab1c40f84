#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {
namespace {

double MaxPairGap(const std::vector<double>& v) {
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      best = std::max(best, std::fabs(v[i] - v[j]));
    }
  }
  return best;
}

// Lower regularized gamma P(a, x) by its power series.
double GammaSeries(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < 100000; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a, x) by the modified Lentz continued fraction.
double GammaContinuedFraction(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double DdpClassification(const std::vector<int>& predictions,
                         const std::vector<int>& groups, int p) {
  std::vector<double> rate(p);
  for (int g = 0; g < p; ++g) {
    double members = 0, positive = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i] != g) continue;
      members += 1;
      if (predictions[i] == 1) positive += 1;
    }
    rate[g] = positive / members;
  }
  return MaxPairGap(rate);
}

double DdpRetrieval(const std::vector<std::int64_t>& selected,
                    const std::vector<std::int64_t>& population) {
  double k = 0, z = 0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    k += static_cast<double>(selected[i]);
    z += static_cast<double>(population[i]);
  }
  std::vector<double> a(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const double ki = static_cast<double>(selected[i]);
    const double zi = static_cast<double>(population[i]);
    a[i] = ki / k - (zi - ki) / (z - k);
  }
  return MaxPairGap(a);
}

double Dtpr(const std::vector<int>& predictions, const std::vector<int>& truth,
            const std::vector<int>& groups, int p) {
  std::vector<double> tpr(p);
  for (int g = 0; g < p; ++g) {
    double positives = 0, hits = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i] != g || truth[i] != 1) continue;
      positives += 1;
      if (predictions[i] == 1) hits += 1;
    }
    tpr[g] = hits / positives;
  }
  return MaxPairGap(tpr);
}

double Skew(const std::vector<std::int64_t>& selected,
            const std::vector<double>& desired) {
  double k = 0;
  for (auto s : selected) k += static_cast<double>(s);
  double worst = 0.0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i] == 0) return std::numeric_limits<double>::infinity();
    const double rf = static_cast<double>(selected[i]) / k;
    worst = std::max(worst, std::fabs(std::log(rf / desired[i])));
  }
  return worst;
}

double DdpRep(const std::vector<std::int64_t>& positives, std::int64_t total) {
  std::vector<double> share;
  for (auto c : positives) {
    share.push_back(static_cast<double>(c) / static_cast<double>(total));
  }
  return MaxPairGap(share);
}

double ChiSquareSf(double x, int df) {
  if (x <= 0.0) return 1.0;
  const double a = 0.5 * df;
  const double h = 0.5 * x;
  if (h < a + 1.0) return 1.0 - GammaSeries(a, h);
  return GammaContinuedFraction(a, h);
}

AgResult AlexanderGovern(const std::vector<std::vector<double>>& groups) {
  const std::size_t k = groups.size();
  std::vector<double> mean(k), se(k), w(k);
  double wsum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const auto& g = groups[j];
    const double n = static_cast<double>(g.size());
    double s = 0.0;
    for (double v : g) s += v;
    mean[j] = s / n;
    double ss = 0.0;
    for (double v : g) ss += (v - mean[j]) * (v - mean[j]);
    se[j] = std::sqrt(ss / (n - 1.0) / n);
    w[j] = 1.0 / (se[j] * se[j]);
    wsum += w[j];
  }
  double u = 0.0;
  for (std::size_t j = 0; j < k; ++j) u += w[j] * mean[j];
  u /= wsum;

  double stat = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double t = (mean[j] - u) / se[j];
    const double nu = static_cast<double>(groups[j].size()) - 1.0;
    const double a = nu - 0.5;
    const double b = 48.0 * a * a;
    const double c = std::sqrt(a * std::log(1.0 + t * t / nu));
    const double z = c + (std::pow(c, 3) + 3.0 * c) / b -
                     (4.0 * std::pow(c, 7) + 33.0 * std::pow(c, 5) +
                      240.0 * std::pow(c, 3) + 855.0 * c) /
                         (10.0 * b * b + 8.0 * b * std::pow(c, 4) + 1000.0 * b);
    stat += z * z;
  }
  return {stat, ChiSquareSf(stat, static_cast<int>(k) - 1)};
}

double ProbeLoss(const ProbeProblem& pr, const std::vector<double>& theta,
                 std::vector<double>* gradient) {
  const std::size_t n = pr.x.size();
  const std::size_t d = pr.x.front().size();
  const std::size_t m = static_cast<std::size_t>(pr.classes - 1);
  auto at = [&](std::size_t row, std::size_t col) { return theta[row * m + col]; };
  if (gradient) gradient->assign(theta.size(), 0.0);

  double loss = 0.0;
  std::vector<double> z(pr.classes);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m; ++c) {
      double s = at(d, c);
      for (std::size_t j = 0; j < d; ++j) s += pr.x[i][j] * at(j, c);
      z[c] = s;
    }
    z[m] = 0.0;
    const double top = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - top);
    const double log_norm = top + std::log(denom);
    loss += log_norm - z[pr.y[i]];
    if (gradient) {
      for (std::size_t c = 0; c < m; ++c) {
        const double r = std::exp(z[c] - log_norm) -
                         (static_cast<std::size_t>(pr.y[i]) == c ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) {
          (*gradient)[j * m + c] += r * pr.x[i][j] / static_cast<double>(n);
        }
        (*gradient)[d * m + c] += r / static_cast<double>(n);
      }
    }
  }
  loss /= static_cast<double>(n);
  double wsq = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t c = 0; c < m; ++c) {
      wsq += at(j, c) * at(j, c);
      if (gradient) (*gradient)[j * m + c] += pr.l2 * at(j, c);
    }
  }
  return loss + 0.5 * pr.l2 * wsq;
}

double ProbeFitLoss(const ProbeProblem& pr, int max_iter, double tol) {
  const std::size_t size = (pr.x.front().size() + 1) *
                           static_cast<std::size_t>(pr.classes - 1);
  std::vector<double> theta(size, 0.0), grad, trial(size);
  double loss = ProbeLoss(pr, theta, &grad);
  double step = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    double gmax = 0.0, gsq = 0.0;
    for (double g : grad) {
      gmax = std::max(gmax, std::fabs(g));
      gsq += g * g;
    }
    if (gmax < tol) break;
    step *= 2.0;
    bool moved = false;
    for (; step >= 1e-16; step /= 2.0) {
      for (std::size_t i = 0; i < size; ++i) trial[i] = theta[i] - step * grad[i];
      if (ProbeLoss(pr, trial, nullptr) <= loss - 1e-4 * step * gsq) {
        theta = trial;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    loss = ProbeLoss(pr, theta, &grad);
  }
  return loss;
}

}  // namespace oracle
