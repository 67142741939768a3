#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "solarqm/quantile.hpp"

namespace solarqm {

/// Monotone piecewise-linear map through paired (model, observed) quantile
/// knots, evaluated in logit-clearsky-index space.
///
/// Evaluation interpolates linearly between knots. Runs of tied model
/// coordinates collapse to a single knot carrying the mean of their observed
/// coordinates, which keeps the map single-valued. Outside the knot range the
/// map extrapolates linearly with the slope of the two lowest (respectively
/// highest) knots with unequal model coordinates; slopes are floored at 0. If
/// every model coordinate ties, the map degenerates to a unit-slope shift
/// anchored at the median observed coordinate.
class TransferFunction {
public:
  TransferFunction(std::vector<double> model_q, std::vector<double> observed_q)
      : x_(std::move(model_q)), y_(std::move(observed_q)) {
    if (x_.empty() || x_.size() != y_.size())
      throw InvalidInput("transfer function requires matching nonempty knot arrays");
    for (std::size_t k = 0; k < x_.size(); ++k) {
      if (!std::isfinite(x_[k]) || !std::isfinite(y_[k]))
        throw InvalidInput("transfer function knots must be finite");
      if (k > 0 && (x_[k] < x_[k - 1] || y_[k] < y_[k - 1]))
        throw InvalidInput("transfer function knots must be non-decreasing");
    }

    std::size_t i = 0;
    while (i < x_.size()) {
      std::size_t j = i;
      double sum = 0.0;
      while (j < x_.size() && x_[j] == x_[i]) sum += y_[j], ++j;
      cx_.push_back(x_[i]);
      cy_.push_back(sum / static_cast<double>(j - i));
      i = j;
    }

    if (cx_.size() == 1) {
      // flat model CDF: no slope information, shift by the median
      const std::size_t n = y_.size();
      cy_[0] = (n % 2 == 1) ? y_[n / 2] : 0.5 * (y_[n / 2 - 1] + y_[n / 2]);
      slope_low_ = slope_high_ = 1.0;
    } else {
      const std::size_t m = cx_.size();
      slope_low_ = std::max(0.0, (cy_[1] - cy_[0]) / (cx_[1] - cx_[0]));
      slope_high_ = std::max(0.0, (cy_[m - 1] - cy_[m - 2]) / (cx_[m - 1] - cx_[m - 2]));
    }
  }

  double operator()(double v) const {
    if (!std::isfinite(v)) throw InvalidInput("transfer function input must be finite");
    if (v <= cx_.front()) return cy_.front() + slope_low_ * (v - cx_.front());
    if (v >= cx_.back()) return cy_.back() + slope_high_ * (v - cx_.back());
    const auto it = std::upper_bound(cx_.begin(), cx_.end(), v);
    const std::size_t k = static_cast<std::size_t>(it - cx_.begin()) - 1;
    const double w = (v - cx_[k]) / (cx_[k + 1] - cx_[k]);
    return cy_[k] + w * (cy_[k + 1] - cy_[k]);
  }

  /// Raw knots as fitted (one per probability, ties preserved); this is the
  /// serialized form.
  const std::vector<double>& knots_x() const { return x_; }
  const std::vector<double>& knots_y() const { return y_; }

  double slope_low() const { return slope_low_; }
  double slope_high() const { return slope_high_; }

  friend bool operator==(const TransferFunction& a, const TransferFunction& b) {
    return a.x_ == b.x_ && a.y_ == b.y_;
  }

private:
  std::vector<double> x_, y_;    // fitted knots
  std::vector<double> cx_, cy_;  // tie-collapsed knots used for evaluation
  double slope_low_ = 1.0;
  double slope_high_ = 1.0;
};

/// Quantile map between two samples: knot k pairs the model sample's
/// p_k-quantile with the observed sample's p_k-quantile.
inline TransferFunction build_transfer(const std::vector<double>& mod_sample,
                                       const std::vector<double>& obs_sample,
                                       const ProbabilitySet& probs) {
  return TransferFunction(empirical_quantiles(mod_sample, probs),
                          empirical_quantiles(obs_sample, probs));
}

inline double apply_transfer(const TransferFunction& tf, double x) { return tf(x); }

}  // namespace solarqm
