#pragma once

// Limb scoring: the affinity-field line integral and the midpoint baselines.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "pafparse/core.hpp"
#include "pafparse/detection.hpp"
#include "pafparse/groundtruth.hpp"
#include "pafparse/topology.hpp"

namespace pafparse {

enum class Interpolation { bilinear, nearest };

/// Where the uniform samples of u in [0, 1] sit.
enum class SampleLayout {
    endpoints, // u_i = i / (n - 1), both endpoints included
    centered,  // u_i = (i + 1/2) / n, the midpoint rule
};

struct IntegralParams {
    int num_samples = 10;
    Interpolation interpolation = Interpolation::bilinear;
    SampleLayout layout = SampleLayout::centered;

    void validate() const
    {
        if (num_samples < 2)
            throw Error(ErrorKind::invalid_argument, "line integral needs at least 2 samples");
    }
};

inline double sample_position(int i, int n, SampleLayout layout)
{
    return layout == SampleLayout::endpoints ? double(i) / double(n - 1) : (double(i) + 0.5) / double(n);
}

/// Mean over uniformly spaced u of L(p(u)) . (b - a) / |b - a|.
inline double line_integral(const VectorGrid& field, Point2 a, Point2 b, const IntegralParams& params = {})
{
    params.validate();
    const LimbSegment seg = limb_segment(a, b);
    double sum = 0.0;
    for (int i = 0; i < params.num_samples; ++i) {
        const double u = sample_position(i, params.num_samples, params.layout);
        const Point2 p = (1.0 - u) * a + u * b;
        const Point2 v = params.interpolation == Interpolation::bilinear ? sample_bilinear(field, p)
                                                                         : sample_nearest(field, p);
        sum += dot(v, seg.direction);
    }
    return sum / params.num_samples;
}

/// Scored candidate limb. Coincident endpoints carry -infinity and are never
/// matched.
struct ConnectionScore {
    std::size_t limb = 0;
    std::size_t m = 0; // candidate id at j1
    std::size_t n = 0; // candidate id at j2
    double score = 0.0;

    friend bool operator==(const ConnectionScore&, const ConnectionScore&) = default;
};

inline constexpr double excluded_score = -std::numeric_limits<double>::infinity();

/// Generic scorer over all (m, n) pairs of each limb's endpoint candidates.
template <typename PairScorer>
std::vector<std::vector<ConnectionScore>> score_pairs(
    const CandidateSet& candidates, const Topology& topo, unsigned threads, PairScorer&& scorer)
{
    if (candidates.parts.size() != topo.num_parts())
        throw Error(ErrorKind::dimension_mismatch, "candidate set does not match topology part count");
    std::vector<std::vector<ConnectionScore>> out(topo.num_limbs());
    parallel_for(topo.num_limbs(), threads, [&](std::size_t c) {
        const Limb limb = topo.limb(c);
        const auto& from = candidates.parts[limb.from];
        const auto& to = candidates.parts[limb.to];
        auto& scores = out[c];
        scores.reserve(from.size() * to.size());
        for (const auto& a : from) {
            for (const auto& b : to) {
                const double s = a.position == b.position ? excluded_score : scorer(c, a.position, b.position);
                scores.push_back({ c, a.id, b.id, s });
            }
        }
    });
    return out;
}

inline std::vector<std::vector<ConnectionScore>> score_connections(std::span<const VectorGrid> fields,
    const CandidateSet& candidates, const Topology& topo, const IntegralParams& params = {}, unsigned threads = 1)
{
    params.validate();
    if (fields.size() != topo.num_limbs())
        throw Error(ErrorKind::dimension_mismatch, "field channel count does not match limb count");
    return score_pairs(candidates, topo, threads,
        [&](std::size_t c, Point2 a, Point2 b) { return line_integral(fields[c], a, b, params); });
}

/// Baseline incidence score: the midpoint channel sampled at the limb's
/// intermediate point(s), averaged.
inline double midpoint_score(const ScalarGrid& map, Point2 a, Point2 b, MidpointVariant variant = MidpointVariant::one)
{
    limb_segment(a, b);
    const auto fractions = midpoint_fractions(variant);
    double sum = 0.0;
    for (double u : fractions)
        sum += sample_bilinear(map, (1.0 - u) * a + u * b);
    return sum / double(fractions.size());
}

inline std::vector<std::vector<ConnectionScore>> score_connections_midpoint(std::span<const ScalarGrid> midpoint_maps,
    const CandidateSet& candidates, const Topology& topo, MidpointVariant variant, unsigned threads = 1)
{
    if (midpoint_maps.size() != topo.num_limbs())
        throw Error(ErrorKind::dimension_mismatch, "midpoint channel count does not match limb count");
    return score_pairs(candidates, topo, threads,
        [&](std::size_t c, Point2 a, Point2 b) { return midpoint_score(midpoint_maps[c], a, b, variant); });
}

} // namespace pafparse
