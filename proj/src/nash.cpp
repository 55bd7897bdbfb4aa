#include "qrenet/nash.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <fmt/format.h>

namespace qrenet {

namespace {

void require_profile(const GameModel& model, std::span<const int> profile) {
    if (profile.size() != model.size())
        throw std::invalid_argument(
            fmt::format("profile has {} entries, model has {} agents", profile.size(), model.size()));
    for (int s : profile)
        if (s != 1 && s != -1)
            throw std::invalid_argument("profile entries must be -1 or +1");
}

// Incentive scale per agent, used to decide when an incentive is exactly zero.
std::vector<double> incentive_scale(const GameModel& model) {
    std::vector<double> scale(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        double s = std::abs(model.field(i));
        for (double w : model.weights().row_weights(i))
            s += std::abs(w);
        scale[i] = 1e-12 * std::max(1.0, s);
    }
    return scale;
}

} // namespace

bool is_pure_nash(const GameModel& model, std::span<const int> profile) {
    require_profile(model, profile);
    const auto scale = incentive_scale(model);
    const auto& W = model.weights();
    for (std::size_t i = 0; i < model.size(); ++i) {
        double incentive = model.field(i);
        auto cols = W.row_cols(i);
        auto ws = W.row_weights(i);
        for (std::size_t k = 0; k < cols.size(); ++k)
            incentive += ws[k] * profile[cols[k]];
        if (profile[i] * incentive < -scale[i])
            return false;
    }
    return true;
}

std::vector<PureProfile> pure_nash_bruteforce(const GameModel& model, std::size_t max_agents) {
    const std::size_t n = model.size();
    if (n > max_agents || n > 30)
        throw std::invalid_argument(fmt::format("pure Nash enumeration limited to {} agents, got {}", max_agents, n));
    const auto& W = model.weights();
    const auto scale = incentive_scale(model);

    // Start from all -1 and walk the Gray code, updating incentives per flip.
    std::vector<int> s(n, -1);
    std::vector<double> incentive(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = model.field(i);
        for (double w : W.row_weights(i))
            u -= w;
        incentive[i] = u;
    }

    std::vector<std::uint32_t> masks;
    auto check = [&](std::uint32_t mask) {
        for (std::size_t i = 0; i < n; ++i)
            if (s[i] * incentive[i] < -scale[i])
                return;
        masks.push_back(mask);
    };

    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint32_t gray = 0;
    check(gray);
    for (std::uint64_t k = 1; k < total; ++k) {
        const auto j = static_cast<std::size_t>(std::countr_zero(k));
        gray ^= (std::uint32_t{1} << j);
        const int delta = -2 * s[j];
        s[j] = -s[j];
        auto rows = W.col_rows(j);
        auto ws = W.col_weights(j);
        for (std::size_t r = 0; r < rows.size(); ++r)
            incentive[rows[r]] += ws[r] * delta;
        check(gray);
    }

    std::sort(masks.begin(), masks.end());
    std::vector<PureProfile> out;
    out.reserve(masks.size());
    for (std::uint32_t mask : masks) {
        PureProfile p(n);
        for (std::size_t i = 0; i < n; ++i)
            p[i] = (mask >> i) & 1u ? 1 : -1;
        // Re-verify without accumulated rounding.
        if (is_pure_nash(model, p))
            out.push_back(std::move(p));
    }
    return out;
}

double potential(const GameModel& model, std::span<const int> profile) {
    require_profile(model, profile);
    if (!model.weights().symmetric())
        throw std::invalid_argument("potential requires symmetric couplings");
    const auto& W = model.weights();
    double v = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        v += model.field(i) * profile[i];
        auto cols = W.row_cols(i);
        auto ws = W.row_weights(i);
        for (std::size_t k = 0; k < cols.size(); ++k)
            v += 0.5 * ws[k] * profile[i] * profile[cols[k]];
    }
    return v;
}

} // namespace qrenet
