#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qrenet {

enum class NoiseKind { logistic_difference, gaussian, uniform, custom_density };

std::string_view to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view name);

// A nonnegative density sampled on a uniform grid [lo, hi].
struct DensityGrid {
    double lo = -10.0;
    double hi = 10.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double spacing() const { return (hi - lo) / static_cast<double>(values.size() - 1); }
};

// Idiosyncratic noise of a single agent, exposed through the distribution of
// the difference eps(-s) - eps(s):
//   cdf_diff(z) = Prob[eps(-s) - eps(s) < z],   pdf_diff(z) = d/dz cdf_diff(z).
//
// The two alternatives share the same noise law, so the difference is
// symmetric: pdf_diff(z) == pdf_diff(-z) and cdf_diff(z) + cdf_diff(-z) == 1.
//
// Closed forms:
//   logistic_difference(beta): F(z) = 1 / (1 + exp(-beta z)),  f(0) = beta / 4
//   gaussian(sigma):           eps ~ N(0, sigma^2), so the difference has
//                              variance 2 sigma^2,           f(0) = 1 / (2 sigma sqrt(pi))
//   uniform(a):                eps ~ U[-a, a], triangular difference on [-2a, 2a],
//                                                            f(0) = 1 / (2a)
// Custom densities are tabulated (see build_custom).
//
// Immutable and cheap to copy; custom tables are shared.
class NoiseModel {
  public:
    static NoiseModel logistic(double beta);
    static NoiseModel gaussian(double sigma);
    static NoiseModel uniform(double half_width);

    NoiseKind kind() const { return kind_; }
    // beta, sigma or half-width; NaN for custom densities.
    double scale() const { return scale_; }

    double cdf_diff(double z) const;
    double pdf_diff(double z) const;
    double density_at_zero() const { return f0_; }

    // Choice probability of the alternative whose utility advantage is `gain`.
    double choice_probability(double gain) const { return cdf_diff(gain); }

    std::string describe() const;

  private:
    struct Table;
    friend NoiseModel build_custom(const DensityGrid& grid);

    NoiseModel(NoiseKind kind, double scale);

    NoiseKind kind_;
    double scale_;
    double f0_ = 0.0;
    std::shared_ptr<const Table> table_;
};

// Tabulates a user-supplied density phi of a single noise term.  phi is
// normalised, the difference density is its discrete self-correlation
// (trapezoidal weights), and the cdf is the exact integral of the piecewise
// linear difference density, so cdf' == pdf everywhere.
//
// Throws std::invalid_argument for fewer than 16 points, negative or
// non-finite samples and all-zero densities.
NoiseModel build_custom(const DensityGrid& grid);

// Samples `density` on `points` uniform nodes of [lo, hi].
template <class Density>
DensityGrid sample_density(Density&& density, double lo = -10.0, double hi = 10.0,
                           std::size_t points = 4096) {
    DensityGrid grid{lo, hi, {}};
    grid.values.resize(points);
    const double h = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i)
        grid.values[i] = density(lo + h * static_cast<double>(i));
    return grid;
}

// Two-column text file "z phi(z)" with uniform spacing in z.  Blank lines and
// lines starting with '#' are skipped.
DensityGrid load_density_file(const std::string& path);
DensityGrid parse_density_text(std::string_view text);

} // namespace qrenet
