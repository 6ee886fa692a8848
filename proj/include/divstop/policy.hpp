#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "divstop/errors.hpp"

namespace divstop {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool operator==(const Interval&) const = default;
};

/// Stopping region: sorted, pairwise disjoint closed intervals separated by
/// gaps of positive length. Empty means "never stop".
class Policy {
public:
    Policy() = default;

    static Policy empty() { return {}; }

    static Policy barrier(double floor, double a) { return from_intervals({{floor, a}}); }

    static Policy from_intervals(std::vector<Interval> iv, bool grid_aligned = false) {
        for (const auto& i : iv)
            if (!std::isfinite(i.lo) || !std::isfinite(i.hi) || i.hi < i.lo)
                throw ArgumentError("policy: intervals need finite lo <= hi");
        std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (std::size_t i = 1; i < iv.size(); ++i)
            if (!(iv[i].lo > iv[i - 1].hi)) throw ArgumentError("policy: intervals overlap or touch");
        Policy p;
        p.intervals_ = std::move(iv);
        p.grid_aligned_ = grid_aligned;
        return p;
    }

    /// Maximal runs of marked grid points, each as [first, last] of the run.
    static Policy from_grid_mask(std::span<const double> grid, const std::vector<char>& mask) {
        if (grid.size() != mask.size()) throw ArgumentError("policy: grid and mask sizes differ");
        std::vector<Interval> iv;
        std::size_t i = 0;
        while (i < grid.size()) {
            if (!mask[i]) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j + 1 < grid.size() && mask[j + 1]) ++j;
            iv.push_back({grid[i], grid[j]});
            i = j + 1;
        }
        return from_intervals(std::move(iv), true);
    }

    const std::vector<Interval>& intervals() const { return intervals_; }
    bool is_empty() const { return intervals_.empty(); }
    bool grid_aligned() const { return grid_aligned_; }

    bool contains(double x) const {
        auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                                   [](double v, const Interval& i) { return v < i.lo; });
        if (it == intervals_.begin()) return false;
        return std::prev(it)->contains(x);
    }

    std::vector<char> grid_mask(std::span<const double> grid) const {
        std::vector<char> m(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) m[i] = contains(grid[i]) ? 1 : 0;
        return m;
    }

    /// Where x sits relative to the stopping region.
    struct Location {
        enum class Kind { Inside, Below, Gap, Above, Never };
        Kind kind = Kind::Never;
        double lower = 0.0;  ///< nearest stopping point below (Gap, Above)
        double upper = 0.0;  ///< nearest stopping point above (Below, Gap)
    };

    Location locate(double x) const {
        using K = Location::Kind;
        if (intervals_.empty()) return {K::Never, 0.0, 0.0};
        auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                                   [](double v, const Interval& i) { return v < i.lo; });
        if (it == intervals_.begin()) return {K::Below, 0.0, intervals_.front().lo};
        const auto& left = *std::prev(it);
        if (left.contains(x)) return {K::Inside, x, x};
        if (it == intervals_.end()) return {K::Above, left.hi, 0.0};
        return {K::Gap, left.hi, it->lo};
    }

    bool is_subset_of(const Policy& other) const {
        for (const auto& i : intervals_) {
            const auto loc = other.locate(i.lo);
            if (loc.kind != Location::Kind::Inside) return false;
            auto it = std::upper_bound(other.intervals_.begin(), other.intervals_.end(), i.lo,
                                       [](double v, const Interval& j) { return v < j.lo; });
            if (!(std::prev(it)->hi >= i.hi)) return false;
        }
        return true;
    }

    bool operator==(const Policy& o) const { return intervals_ == o.intervals_; }

    std::string describe() const {
        if (intervals_.empty()) return "{}";
        std::string s;
        for (const auto& i : intervals_) {
            if (!s.empty()) s += " u ";
            s += "[" + std::to_string(i.lo) + ", " + std::to_string(i.hi) + "]";
        }
        return s;
    }

private:
    std::vector<Interval> intervals_;
    bool grid_aligned_ = false;
};

}  // namespace divstop
