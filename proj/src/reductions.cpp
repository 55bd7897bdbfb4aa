#include "qrenet/reductions.hpp"

#include <algorithm>
#include <cmath>

namespace qrenet {

double curie_weiss_defect(const NoiseModel& noise, double J, double H, double m) {
    return 2.0 * noise.cdf_diff(2.0 * H + 2.0 * J * m) - 1.0 - m;
}

std::vector<double> curie_weiss_roots(const NoiseModel& noise, double J, double H, const ScanOptions& scan) {
    return scan_roots([&](double m) { return curie_weiss_defect(noise, J, H, m); }, -1.0, 1.0, scan);
}

double star_reduction_residual(const NoiseModel& noise, double J, double H, std::size_t n, double m_hub,
                               double m_leaf) {
    const double leaves = static_cast<double>(n - 1);
    const double hub = 2.0 * noise.cdf_diff(2.0 * H + 2.0 * J * leaves * m_leaf) - 1.0 - m_hub;
    const double leaf = 2.0 * noise.cdf_diff(2.0 * H + 2.0 * J * m_hub) - 1.0 - m_leaf;
    return std::max(std::abs(hub), std::abs(leaf));
}

double cycle_defect(const NoiseModel& noise, double J, double H, double m) {
    return 2.0 * noise.cdf_diff(2.0 * H + 4.0 * J * m) - 1.0 - m;
}

std::vector<double> cycle_roots(const NoiseModel& noise, double J, double H, const ScanOptions& scan) {
    return scan_roots([&](double m) { return cycle_defect(noise, J, H, m); }, -1.0, 1.0, scan);
}

} // namespace qrenet
