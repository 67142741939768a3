#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "solarqm/error.hpp"

namespace solarqm {

/// Strictly increasing probabilities in the open unit interval at which
/// empirical CDFs are evaluated. The default is the 99 centiles
/// 0.01, 0.02, ..., 0.99.
class ProbabilitySet {
public:
  explicit ProbabilitySet(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2) throw InvalidInput("probability set needs at least 2 entries");
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      if (!(probs_[i] > 0.0) || !(probs_[i] < 1.0))
        throw InvalidInput("probability " + std::to_string(probs_[i]) +
                           " is outside the open interval (0, 1)");
      if (i > 0 && !(probs_[i] > probs_[i - 1]))
        throw InvalidInput("probability set must be strictly increasing");
    }
  }

  static ProbabilitySet centiles() {
    std::vector<double> p(99);
    for (int k = 1; k <= 99; ++k) p[static_cast<std::size_t>(k - 1)] = k / 100.0;
    return ProbabilitySet(std::move(p));
  }

  /// Parses "start:stop:step" (e.g. "0.01:0.99:0.01") or a comma-separated
  /// list ("0.1,0.5,0.9").
  static ProbabilitySet parse(const std::string& spec) {
    std::vector<double> p;
    if (spec.find(':') != std::string::npos) {
      double a = 0, b = 0, c = 0;
      if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &a, &b, &c) != 3 || !(c > 0))
        throw InvalidInput("cannot parse probability range \"" + spec +
                           "\" (expected start:stop:step)");
      for (int k = 0;; ++k) {
        const double v = a + k * c;
        if (v > b + c * 1e-9) break;
        p.push_back(v);
      }
    } else {
      std::size_t pos = 0;
      while (pos <= spec.size()) {
        std::size_t next = spec.find(',', pos);
        if (next == std::string::npos) next = spec.size();
        try {
          p.push_back(std::stod(spec.substr(pos, next - pos)));
        } catch (const std::exception&) {
          throw InvalidInput("cannot parse probability list \"" + spec + "\"");
        }
        pos = next + 1;
      }
    }
    return ProbabilitySet(std::move(p));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }
  const std::vector<double>& values() const { return probs_; }
  auto begin() const { return probs_.begin(); }
  auto end() const { return probs_.end(); }

  friend bool operator==(const ProbabilitySet&, const ProbabilitySet&) = default;

private:
  std::vector<double> probs_;
};

/// Empirical quantiles by linear interpolation of order statistics: with the
/// sample sorted ascending and h = (n - 1) p, the p-quantile is
/// x[floor(h)] + (h - floor(h)) * (x[floor(h) + 1] - x[floor(h)]).
/// Output is non-decreasing in p.
inline std::vector<double> empirical_quantiles(std::vector<double> sample,
                                               const ProbabilitySet& probs) {
  if (sample.empty()) throw InvalidInput("empirical quantiles require a nonempty sample");
  for (double v : sample)
    if (!std::isfinite(v))
      throw InvalidInput("empirical quantiles require finite sample values");
  std::sort(sample.begin(), sample.end());
  const std::size_t n = sample.size();
  std::vector<double> out(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double h = static_cast<double>(n - 1) * probs[k];
    const double lo = std::floor(h);
    const std::size_t i = static_cast<std::size_t>(lo);
    if (i + 1 >= n) {
      out[k] = sample[n - 1];
    } else {
      out[k] = sample[i] + (h - lo) * (sample[i + 1] - sample[i]);
    }
  }
  return out;
}

}  // namespace solarqm
