#include "qrenet/rootfind.hpp"

#include <cmath>
#include <stdexcept>

namespace qrenet {

double bisect_root(const std::function<double(double)>& fn, double lo, double hi, double xtol) {
    double flo = fn(lo);
    const double fhi = fn(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0))
        throw std::invalid_argument("bisect_root: bracket does not change sign");
    while (hi - lo > xtol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        const double fmid = fn(mid);
        if (fmid == 0.0)
            return mid;
        if ((fmid < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> scan_roots(const std::function<double(double)>& fn, double lo, double hi,
                               const ScanOptions& options) {
    if (!(hi > lo) || options.intervals == 0)
        throw std::invalid_argument("scan_roots: invalid scan range");
    const std::size_t n = options.intervals;
    const double step = (hi - lo) / static_cast<double>(n);
    std::vector<double> xs(n + 1);
    std::vector<double> fs(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        xs[k] = k == n ? hi : lo + step * static_cast<double>(k);
        fs[k] = fn(xs[k]);
    }
    std::vector<double> roots;
    for (std::size_t k = 0; k <= n; ++k) {
        if (fs[k] == 0.0)
            roots.push_back(xs[k]);
        if (k < n && fs[k] != 0.0 && fs[k + 1] != 0.0 && (fs[k] < 0.0) != (fs[k + 1] < 0.0))
            roots.push_back(bisect_root(fn, xs[k], xs[k + 1], options.xtol));
    }
    std::vector<double> merged;
    for (double r : roots)
        if (merged.empty() || r - merged.back() > 10.0 * options.xtol)
            merged.push_back(r);
    return merged;
}

} // namespace qrenet
