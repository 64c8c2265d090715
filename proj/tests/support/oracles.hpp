#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "modarc/neural.hpp"

namespace modarc::oracle {

// Straight-line motion folded back into [lo, hi]. A blocked unit step is
// consumed by the bounce, so the mirror sits half a pixel outside the range.
inline double fold(double unconstrained, int lo, int hi) {
  const double a = lo - 0.5;
  const double b = hi + 0.5;
  const double span = b - a;
  double x = std::fmod(unconstrained - a, 2 * span);
  if (x < 0) x += 2 * span;
  return x <= span ? a + x : b - (x - span);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
  return std::abs(analytic - numeric) / scale;
}

struct GradProbe {
  double analytic = 0;
  double numeric = 0;
  double rel_error = 0;
};

// Central finite differences on randomly chosen parameter entries.
inline std::vector<GradProbe> gradient_probes(const DenseNet& net, const TrainBatch& batch,
                                              int probes, std::uint64_t seed,
                                              double h = 1e-4) {
  const NetParams grads = backward(net, batch).gradients;
  std::vector<double*> entries;
  std::vector<double> analytic;
  DenseNet work = net;
  work.params().for_each_layer([&](DenseLayer& l) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) entries.push_back(l.weight.data() + i);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) entries.push_back(l.bias.data() + i);
  });
  grads.for_each_layer([&](const DenseLayer& l) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) analytic.push_back(l.weight.data()[i]);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) analytic.push_back(l.bias.data()[i]);
  });
  auto central = [&](std::size_t k, double step) {
    const double saved = *entries[k];
    *entries[k] = saved + step;
    const double up = backward(work, batch).loss;
    *entries[k] = saved - step;
    const double down = backward(work, batch).loss;
    *entries[k] = saved;
    return (up - down) / (2 * step);
  };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, entries.size() - 1);
  std::vector<GradProbe> out;
  // A probe whose stencil straddles a ReLU kink is not a valid reference;
  // it shows up as disagreement between step h and h/10, and is redrawn.
  for (int attempts = 0; int(out.size()) < probes && attempts < 100 * probes; ++attempts) {
    const std::size_t k = pick(rng);
    const double numeric = central(k, h);
    if (relative_error(numeric, central(k, h / 10)) > 1e-3) continue;
    out.push_back({analytic[k], numeric, relative_error(analytic[k], numeric)});
  }
  return out;
}

// A three-layer split-head net and a random regression batch for it.
inline Topology gradcheck_topology() { return {6, {8}, {{"a", 5, 2}, {"b", 4, 1}}}; }

inline TrainBatch random_batch(const Topology& t, int rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  TrainBatch b;
  b.inputs = Eigen::MatrixXd::NullaryExpr(rows, t.inputs, [&] { return n(rng); });
  for (const auto& head : t.heads) {
    b.targets.push_back(Eigen::MatrixXd::NullaryExpr(rows, head.outputs, [&] { return n(rng); }));
  }
  return b;
}

}  // namespace modarc::oracle

namespace modarc::oracle {

// Pearson statistic of observed counts against expected probabilities.
inline double chi_square(const std::vector<long>& counts, const std::vector<double>& probs) {
  long n = 0;
  for (long c : counts) n += c;
  double stat = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = probs[i] * double(n);
    stat += (counts[i] - e) * (counts[i] - e) / e;
  }
  return stat;
}

// Upper 1% critical values of the chi-square distribution, by degrees of
// freedom.
inline double chi_square_critical_1pct(int dof) {
  static const double table[] = {0,      6.635,  9.210,  11.345, 13.277, 15.086, 16.812,
                                 18.475, 20.090, 21.666, 23.209, 24.725, 26.217, 27.688,
                                 29.141, 30.578, 32.000, 33.409, 34.805, 36.191, 37.566};
  return table[dof];
}

inline std::vector<double> softmax(const std::vector<double>& values, double tau) {
  double hi = values.front();
  for (double v : values) hi = std::max(hi, v);
  std::vector<double> out;
  double z = 0;
  for (double v : values) z += std::exp((v - hi) / tau);
  for (double v : values) out.push_back(std::exp((v - hi) / tau) / z);
  return out;
}

}  // namespace modarc::oracle
