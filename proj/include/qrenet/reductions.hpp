#pragma once

#include <cstddef>
#include <vector>

#include "qrenet/noise.hpp"
#include "qrenet/rootfind.hpp"

namespace qrenet {

// Reduced equations for symmetric topologies with uniform coupling J and
// field H.  Each *_defect returns right-hand side minus left-hand side.

// Complete graph, N -> infinity:  m = 2 F(2H + 2 J m) - 1.
double curie_weiss_defect(const NoiseModel& noise, double J, double H, double m);
std::vector<double> curie_weiss_roots(const NoiseModel& noise, double J, double H, const ScanOptions& scan = {});

// Star with n nodes (hub plus n - 1 leaves):
//   m_hub  = 2 F(2H + 2 J (n - 1) m_leaf) - 1
//   m_leaf = 2 F(2H + 2 J m_hub) - 1
// Returns the max-norm of both defects.
double star_reduction_residual(const NoiseModel& noise, double J, double H, std::size_t n, double m_hub,
                               double m_leaf);

// Cycle with the uniform ansatz:  m = 2 F(2H + 4 J m) - 1.
double cycle_defect(const NoiseModel& noise, double J, double H, double m);
std::vector<double> cycle_roots(const NoiseModel& noise, double J, double H, const ScanOptions& scan = {});

} // namespace qrenet
