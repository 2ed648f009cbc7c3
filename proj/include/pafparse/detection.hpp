#pragma once

// Part candidates from confidence maps by 8-neighbour non-maximum suppression.

#include <algorithm>
#include <span>
#include <vector>

#include "pafparse/core.hpp"

namespace pafparse {

struct PartCandidate {
    std::size_t part = 0;
    Point2 position;
    double score = 0.0;
    std::size_t id = 0; // dense per-part ordinal, 0 = highest score

    friend bool operator==(const PartCandidate&, const PartCandidate&) = default;
};

/// Candidates per part, each list sorted by descending score.
struct CandidateSet {
    std::vector<std::vector<PartCandidate>> parts;

    std::size_t total() const
    {
        std::size_t n = 0;
        for (const auto& p : parts)
            n += p.size();
        return n;
    }

    friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

struct NmsParams {
    double threshold = 0.1;
    bool subpixel = true;
};

namespace detail {
    /// Vertex offset of the parabola through (-1, l), (0, c), (1, r), or 0 when
    /// the three samples are not strictly concave.
    inline double parabola_offset(double l, double c, double r)
    {
        const double denom = l - 2.0 * c + r;
        if (!(denom < 0.0))
            return 0.0;
        return std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
    }
} // namespace detail

/// Local maxima above `threshold`. A pixel must be >= its later neighbours
/// and strictly > its earlier ones in (y, x) order, so a plateau yields only
/// its first pixel.
inline std::vector<PartCandidate> nms_peaks(const ScalarGrid& map, std::size_t part, const NmsParams& params = {})
{
    if (!(params.threshold >= 0.0))
        throw Error(ErrorKind::invalid_argument, "nms threshold must be >= 0");
    std::vector<PartCandidate> out;
    const int w = map.width(), h = map.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float v = map(x, y);
            if (!(v > params.threshold))
                continue;
            bool peak = true;
            for (int dy = -1; dy <= 1 && peak; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if ((dx == 0 && dy == 0) || !map.contains(x + dx, y + dy))
                        continue;
                    const float n = map(x + dx, y + dy);
                    const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (earlier ? !(v > n) : !(v >= n)) {
                        peak = false;
                        break;
                    }
                }
            }
            if (!peak)
                continue;
            Point2 pos { double(x), double(y) };
            if (params.subpixel) {
                if (x > 0 && x + 1 < w)
                    pos.x += detail::parabola_offset(map(x - 1, y), v, map(x + 1, y));
                if (y > 0 && y + 1 < h)
                    pos.y += detail::parabola_offset(map(x, y - 1), v, map(x, y + 1));
            }
            out.push_back({ part, pos, double(v), 0 });
        }
    }
    // Raster order is the tie-break for equal scores.
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i].id = i;
    return out;
}

inline CandidateSet detect_all(std::span<const ScalarGrid> maps, const NmsParams& params = {}, unsigned threads = 1)
{
    CandidateSet set;
    set.parts.resize(maps.size());
    parallel_for(maps.size(), threads, [&](std::size_t j) { set.parts[j] = nms_peaks(maps[j], j, params); });
    return set;
}

} // namespace pafparse
