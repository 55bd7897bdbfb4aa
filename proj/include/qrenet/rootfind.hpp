#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace qrenet {

struct ScanOptions {
    std::size_t intervals = 2048;
    double xtol = 1e-12;
};

// Bisection on a bracket with fn(lo) and fn(hi) of opposite sign.
double bisect_root(const std::function<double(double)>& fn, double lo, double hi, double xtol = 1e-12);

// Every root found by a uniform sign-change scan of [lo, hi] followed by
// bisection.  Grid points where fn vanishes exactly are roots.  Sorted, with
// roots closer than 10 xtol merged.
std::vector<double> scan_roots(const std::function<double(double)>& fn, double lo, double hi,
                               const ScanOptions& options = {});

} // namespace qrenet
