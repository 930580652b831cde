#include "biclab/stats.hpp"

#include <boost/math/distributions/normal.hpp>
#include <limits>
#include <numbers>

#include "biclab/errors.hpp"

namespace biclab {

double Moments::variance() const {
  if (count < 2.0) return 0.0;
  const double m = sum / count;
  const double v = (sum_sq - count * m * m) / (count - 1.0);
  return v > 0.0 ? v : 0.0;
}

double Moments::standard_error() const {
  if (count < 2.0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(variance() / count);
}

LinearFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::invalid_input, "line fit needs at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::invalid_input, "line fit with constant abscissa");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::invalid_input, "quantile level outside (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double two_sided_z(double confidence) { return normal_quantile(0.5 + 0.5 * confidence); }

}  // namespace biclab
