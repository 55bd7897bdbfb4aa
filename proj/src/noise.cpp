#include "qrenet/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace qrenet {

namespace {

void require_finite(double z) {
    if (!std::isfinite(z))
        throw std::invalid_argument("noise: argument must be finite");
}

void require_positive_scale(double value, const char* name) {
    if (!std::isfinite(value) || value <= 0.0)
        throw std::invalid_argument(fmt::format("noise: {} must be positive and finite", name));
}

} // namespace

// Difference density on the lag grid z_j = j h, j = -(n-1) .. (n-1), together
// with its running integral at the nodes.
struct NoiseModel::Table {
    double h = 0.0;
    std::size_t center = 0;
    std::vector<double> pdf;
    std::vector<double> cdf;

    double z_max() const { return h * static_cast<double>(center); }

    double pdf_at(double z) const {
        const double u = std::abs(z) / h;
        if (u >= static_cast<double>(center))
            return 0.0;
        const auto k = static_cast<std::size_t>(u);
        const double tau = u - static_cast<double>(k);
        return pdf[center + k] + tau * (pdf[center + k + 1] - pdf[center + k]);
    }

    // Left tail; callers fold z > 0 through symmetry.
    double cdf_left(double z) const {
        const double u = (z + z_max()) / h;
        if (u <= 0.0)
            return 0.0;
        auto k = static_cast<std::size_t>(u);
        k = std::min(k, center - 1);
        const double tau = u - static_cast<double>(k);
        const double fa = pdf[k];
        const double fb = pdf[k + 1];
        return cdf[k] + h * (fa * tau + 0.5 * (fb - fa) * tau * tau);
    }
};

std::string_view to_string(NoiseKind kind) {
    switch (kind) {
    case NoiseKind::logistic_difference: return "logistic";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::uniform: return "uniform";
    case NoiseKind::custom_density: return "custom";
    }
    return "unknown";
}

NoiseKind noise_kind_from_string(std::string_view name) {
    if (name == "logistic") return NoiseKind::logistic_difference;
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "uniform") return NoiseKind::uniform;
    if (name == "custom") return NoiseKind::custom_density;
    throw std::invalid_argument(fmt::format("unknown noise family '{}'", name));
}

NoiseModel::NoiseModel(NoiseKind kind, double scale) : kind_(kind), scale_(scale) {}

NoiseModel NoiseModel::logistic(double beta) {
    require_positive_scale(beta, "beta");
    NoiseModel model(NoiseKind::logistic_difference, beta);
    model.f0_ = beta / 4.0;
    return model;
}

NoiseModel NoiseModel::gaussian(double sigma) {
    require_positive_scale(sigma, "sigma");
    NoiseModel model(NoiseKind::gaussian, sigma);
    model.f0_ = 1.0 / (2.0 * sigma * std::sqrt(std::numbers::pi));
    return model;
}

NoiseModel NoiseModel::uniform(double half_width) {
    require_positive_scale(half_width, "half_width");
    NoiseModel model(NoiseKind::uniform, half_width);
    model.f0_ = 1.0 / (2.0 * half_width);
    return model;
}

double NoiseModel::cdf_diff(double z) const {
    require_finite(z);
    switch (kind_) {
    case NoiseKind::logistic_difference: {
        const double x = scale_ * z;
        if (x >= 0.0)
            return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    }
    case NoiseKind::gaussian:
        return 0.5 * std::erfc(-z / (2.0 * scale_));
    case NoiseKind::uniform: {
        const double w = 2.0 * scale_;
        if (z <= -w) return 0.0;
        if (z >= w) return 1.0;
        if (z <= 0.0) return (w + z) * (w + z) / (2.0 * w * w);
        return 1.0 - (w - z) * (w - z) / (2.0 * w * w);
    }
    case NoiseKind::custom_density:
        if (z > 0.0)
            return 1.0 - table_->cdf_left(-z);
        return table_->cdf_left(z);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double NoiseModel::pdf_diff(double z) const {
    require_finite(z);
    switch (kind_) {
    case NoiseKind::logistic_difference: {
        const double e = std::exp(-scale_ * std::abs(z));
        return scale_ * e / ((1.0 + e) * (1.0 + e));
    }
    case NoiseKind::gaussian:
        return std::exp(-z * z / (4.0 * scale_ * scale_)) * f0_;
    case NoiseKind::uniform: {
        const double w = 2.0 * scale_;
        const double a = std::abs(z);
        return a >= w ? 0.0 : (w - a) / (w * w);
    }
    case NoiseKind::custom_density:
        return table_->pdf_at(z);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::string NoiseModel::describe() const {
    switch (kind_) {
    case NoiseKind::logistic_difference: return fmt::format("logistic(beta={})", scale_);
    case NoiseKind::gaussian: return fmt::format("gaussian(sigma={})", scale_);
    case NoiseKind::uniform: return fmt::format("uniform(half_width={})", scale_);
    case NoiseKind::custom_density:
        return fmt::format("custom(points={}, spacing={})", (table_->pdf.size() + 1) / 2, table_->h);
    }
    return "unknown";
}

NoiseModel build_custom(const DensityGrid& grid) {
    const std::size_t n = grid.size();
    if (n < 16)
        throw std::invalid_argument(fmt::format("custom noise: grid has {} points, need at least 16", n));
    if (!std::isfinite(grid.lo) || !std::isfinite(grid.hi) || grid.hi <= grid.lo)
        throw std::invalid_argument("custom noise: grid range must satisfy lo < hi");
    for (double v : grid.values)
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("custom noise: density samples must be finite and nonnegative");

    const double h = grid.spacing();
    std::vector<double> phi = grid.values;
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        mass += (i == 0 || i + 1 == n) ? 0.5 * phi[i] : phi[i];
    mass *= h;
    if (mass <= 0.0)
        throw std::invalid_argument("custom noise: density integrates to zero");
    for (double& v : phi)
        v /= mass;

    auto table = std::make_shared<NoiseModel::Table>();
    table->h = h;
    table->center = n - 1;
    table->pdf.assign(2 * n - 1, 0.0);

    // f(j h) = int phi(y) phi(y + j h) dy; the overlap at lag j has n - j nodes.
    for (std::size_t lag = 0; lag + 1 < n; ++lag) {
        const std::size_t overlap = n - lag;
        double acc = 0.0;
        for (std::size_t i = 0; i < overlap; ++i)
            acc += phi[i] * phi[i + lag];
        acc -= 0.5 * (phi[0] * phi[lag] + phi[overlap - 1] * phi[n - 1]);
        const double value = std::max(0.0, acc * h);
        table->pdf[table->center + lag] = value;
        table->pdf[table->center - lag] = value;
    }

    std::vector<double>& cdf = table->cdf;
    cdf.assign(table->pdf.size(), 0.0);
    for (std::size_t k = 1; k < cdf.size(); ++k)
        cdf[k] = cdf[k - 1] + 0.5 * h * (table->pdf[k - 1] + table->pdf[k]);

    // Renormalise so that the left half carries exactly one half of the mass.
    const double half = cdf[table->center];
    if (!(half > 0.0))
        throw std::invalid_argument("custom noise: degenerate difference density");
    const double norm = 0.5 / half;
    for (double& v : table->pdf) v *= norm;
    for (double& v : cdf) v *= norm;

    NoiseModel model(NoiseKind::custom_density, std::numeric_limits<double>::quiet_NaN());
    model.f0_ = table->pdf[table->center];
    model.table_ = std::move(table);
    return model;
}

DensityGrid parse_density_text(std::string_view text) {
    std::vector<double> zs;
    std::vector<double> values;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::istringstream fields(line);
        double z = 0.0;
        double v = 0.0;
        std::string trailing;
        if (!(fields >> z >> v) || (fields >> trailing))
            throw std::invalid_argument(fmt::format("density file line {}: expected 'z phi'", line_no));
        zs.push_back(z);
        values.push_back(v);
    }
    if (zs.size() < 2)
        throw std::invalid_argument("density file: need at least two samples");
    const double h = (zs.back() - zs.front()) / static_cast<double>(zs.size() - 1);
    if (!(h > 0.0))
        throw std::invalid_argument("density file: z must be increasing");
    for (std::size_t i = 1; i < zs.size(); ++i) {
        const double step = zs[i] - zs[i - 1];
        if (std::abs(step - h) > 1e-6 * h)
            throw std::invalid_argument(fmt::format("density file: non-uniform spacing near z = {}", zs[i]));
    }
    return DensityGrid{zs.front(), zs.back(), std::move(values)};
}

DensityGrid load_density_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument(fmt::format("cannot open density file '{}'", path));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_density_text(buffer.str());
}

} // namespace qrenet
