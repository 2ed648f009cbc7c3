#pragma once

// Seeded synthetic scenes built from an articulated skeleton template, and a
// noise model for confidence maps and fields.

#include <cstdint>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pafparse/core.hpp"
#include "pafparse/groundtruth.hpp"
#include "pafparse/topology.hpp"

namespace pafparse {

/// Canonical pose, one point per part, in torso-length units (y down).
struct SkeletonTemplate {
    std::vector<Point2> positions;
};

inline SkeletonTemplate parse_template(std::istream& in, const Topology& topo)
{
    std::string line;
    std::size_t lineno = 0;
    if (!detail::next_content_line(in, line, lineno))
        throw Error(ErrorKind::malformed_input, "empty template file");
    const std::size_t n = detail::parse_count(line, "template", lineno);
    if (n != topo.num_parts())
        detail::malformed(lineno, "template has " + std::to_string(n) + " parts, topology has "
                + std::to_string(topo.num_parts()));
    SkeletonTemplate t;
    t.positions.resize(n);
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (!detail::next_content_line(in, line, lineno))
            throw Error(ErrorKind::malformed_input, "unexpected end of template");
        std::istringstream ss(line);
        std::string name, extra;
        Point2 p;
        if (!(ss >> name >> p.x >> p.y) || (ss >> extra))
            detail::malformed(lineno, "expected '<part> <x> <y>'");
        const auto idx = topo.part_index(name);
        if (!idx || seen[*idx])
            detail::malformed(lineno, "unknown or repeated part '" + name + "'");
        seen[*idx] = true;
        t.positions[*idx] = p;
    }
    return t;
}

inline SkeletonTemplate parse_template(std::string_view text, const Topology& topo)
{
    std::istringstream in { std::string(text) };
    return parse_template(in, topo);
}

/// Radial layout for topologies without a template file: children fan out
/// from their parent at half a torso length.
inline SkeletonTemplate default_template(const Topology& topo)
{
    if (topo.kind() != TopologyKind::tree)
        throw Error(ErrorKind::invalid_argument, "template layout needs a tree topology");
    const std::size_t n = topo.num_parts();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& l : topo.limbs()) {
        adj[l.from].push_back(l.to);
        adj[l.to].push_back(l.from);
    }
    SkeletonTemplate t;
    t.positions.assign(n, {});
    std::vector<double> heading(n, std::numbers::pi / 2);
    std::vector<bool> placed(n, false);
    std::queue<std::size_t> q;
    q.push(0);
    placed[0] = true;
    while (!q.empty()) {
        const std::size_t p = q.front();
        q.pop();
        std::vector<std::size_t> kids;
        for (std::size_t c : adj[p])
            if (!placed[c])
                kids.push_back(c);
        const double spread = p == 0 ? 2 * std::numbers::pi / double(std::max<std::size_t>(kids.size(), 1)) : 0.7;
        for (std::size_t i = 0; i < kids.size(); ++i) {
            const double angle = p == 0 ? heading[p] + spread * double(i)
                                        : heading[p] + spread * (double(i) - 0.5 * double(kids.size() - 1));
            heading[kids[i]] = angle;
            t.positions[kids[i]] = t.positions[p] + Point2 { 0.5 * std::cos(angle), 0.5 * std::sin(angle) };
            placed[kids[i]] = true;
            q.push(kids[i]);
        }
    }
    return t;
}

inline SkeletonTemplate template_for(const Topology& topo)
{
    if (topo == topology_preset(Preset::mpii14))
        return parse_template(presets::mpii14_template, topo);
    if (topo == topology_preset(Preset::coco18))
        return parse_template(presets::coco18_template, topo);
    return default_template(topo);
}

struct SceneConfig {
    int width = 640;
    int height = 480;
    int min_persons = 1;
    int max_persons = 1;
    double scale_min = 30.0; // torso length, pixels
    double scale_max = 40.0;
    double rotation_range = 0.3; // |whole-body rotation| <= this, radians
    double limb_jitter = 0.15;   // per-limb angular jitter, radians
    double length_jitter = 0.1;  // per-limb relative length jitter
    double min_separation = 42.0;     // between keypoints of different persons
    double min_limb_separation = 0.0; // between limbs of different persons; 0 disables
    double occlusion_prob = 0.0;
    double margin = 2.0; // keypoints stay this far inside [0, width - 1] x [0, height - 1]
    /// When set, person centres are drawn within this radius of the canvas
    /// centre instead of anywhere on it.
    std::optional<double> cluster_radius;
    /// Every person after the first must have a limb crossing the same limb
    /// type of an earlier person.
    bool require_crossing = false;
    int max_retries = 1000;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (width <= 0 || height <= 0)
            throw Error(ErrorKind::invalid_argument, "canvas must have positive size");
        if (min_persons < 0 || max_persons < min_persons)
            throw Error(ErrorKind::invalid_argument, "person count range is empty");
        if (!(scale_min > 0.0) || scale_max < scale_min)
            throw Error(ErrorKind::invalid_argument, "scale range is empty");
        if (rotation_range < 0.0 || limb_jitter < 0.0 || length_jitter < 0.0 || length_jitter >= 1.0)
            throw Error(ErrorKind::invalid_argument, "jitter and rotation ranges must be non-negative");
        if (min_separation < 0.0 || min_limb_separation < 0.0 || margin < 0.0)
            throw Error(ErrorKind::invalid_argument, "separations must be non-negative");
        if (!(occlusion_prob >= 0.0 && occlusion_prob <= 1.0))
            throw Error(ErrorKind::invalid_argument, "occlusion probability must lie in [0, 1]");
        if (max_retries < 1)
            throw Error(ErrorKind::invalid_argument, "max_retries must be >= 1");
    }
};

namespace detail {
    inline double segment_distance(Point2 a, Point2 b, Point2 p)
    {
        const Point2 d = b - a;
        const double len2 = dot(d, d);
        const double t = len2 > 0 ? std::clamp(dot(p - a, d) / len2, 0.0, 1.0) : 0.0;
        return distance(a + t * d, p);
    }

    inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

    inline bool segments_cross(Point2 a, Point2 b, Point2 c, Point2 d)
    {
        const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
        const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
        return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
    }

    inline double segments_distance(Point2 a, Point2 b, Point2 c, Point2 d)
    {
        if (segments_cross(a, b, c, d))
            return 0.0;
        return std::min({ segment_distance(a, b, c), segment_distance(a, b, d), segment_distance(c, d, a),
            segment_distance(c, d, b) });
    }

    /// Tree traversal order from part 0: (child, parent) pairs.
    inline std::vector<std::pair<std::size_t, std::size_t>> traversal(const Topology& topo)
    {
        std::vector<std::vector<std::size_t>> adj(topo.num_parts());
        for (const auto& l : topo.limbs()) {
            adj[l.from].push_back(l.to);
            adj[l.to].push_back(l.from);
        }
        std::vector<std::pair<std::size_t, std::size_t>> order;
        std::vector<bool> seen(topo.num_parts(), false);
        std::queue<std::size_t> q;
        q.push(0);
        seen[0] = true;
        while (!q.empty()) {
            const std::size_t p = q.front();
            q.pop();
            for (std::size_t c : adj[p]) {
                if (seen[c])
                    continue;
                seen[c] = true;
                order.emplace_back(c, p);
                q.push(c);
            }
        }
        return order;
    }
} // namespace detail

/// Deterministic in `cfg.seed`. Persons are placed one at a time by rejection
/// sampling; each gets `max_retries` attempts.
inline Scene generate_scene(const SceneConfig& cfg, const Topology& topo, const SkeletonTemplate& tmpl)
{
    cfg.validate();
    if (topo.kind() != TopologyKind::tree)
        throw Error(ErrorKind::invalid_argument, "scene generation needs a tree topology");
    if (tmpl.positions.size() != topo.num_parts())
        throw Error(ErrorKind::dimension_mismatch, "template does not match topology");

    std::mt19937_64 rng(cfg.seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    Scene scene;
    scene.width = cfg.width;
    scene.height = cfg.height;
    const int count = std::uniform_int_distribution<int>(cfg.min_persons, cfg.max_persons)(rng);
    const auto order = detail::traversal(topo);

    // Template extent at maximum scale must fit inside the usable canvas.
    double tx0 = 1e300, ty0 = 1e300, tx1 = -1e300, ty1 = -1e300;
    for (auto p : tmpl.positions) {
        tx0 = std::min(tx0, p.x);
        ty0 = std::min(ty0, p.y);
        tx1 = std::max(tx1, p.x);
        ty1 = std::max(ty1, p.y);
    }
    if (count > 0
        && (std::max(tx1 - tx0, ty1 - ty0) * cfg.scale_min * (1.0 + cfg.length_jitter)
            > std::min(cfg.width, cfg.height) - 1 - 2 * cfg.margin))
        throw Error(ErrorKind::placement_failure, "canvas too small for a person at the requested scale");

    std::vector<std::vector<Point2>> placed;
    for (int k = 0; k < count; ++k) {
        bool ok = false;
        std::vector<Point2> pts(topo.num_parts());
        for (int attempt = 0; attempt < cfg.max_retries && !ok; ++attempt) {
            const double scale = uniform(cfg.scale_min, cfg.scale_max);
            const double rotation = cfg.rotation_range > 0 ? uniform(-cfg.rotation_range, cfg.rotation_range) : 0.0;
            pts[0] = { 0.0, 0.0 };
            for (auto [child, parent] : order) {
                const double jitter = cfg.limb_jitter > 0 ? uniform(-cfg.limb_jitter, cfg.limb_jitter) : 0.0;
                const double stretch
                    = cfg.length_jitter > 0 ? uniform(1.0 - cfg.length_jitter, 1.0 + cfg.length_jitter) : 1.0;
                const Point2 offset = tmpl.positions[child] - tmpl.positions[parent];
                pts[child] = pts[parent] + (scale * stretch) * rotate(offset, rotation + jitter);
            }
            double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
            for (auto p : pts) {
                x0 = std::min(x0, p.x);
                y0 = std::min(y0, p.y);
                x1 = std::max(x1, p.x);
                y1 = std::max(y1, p.y);
            }
            // Translation range keeping every keypoint inside the margin.
            double lo_x = cfg.margin - x0, hi_x = cfg.width - 1 - cfg.margin - x1;
            double lo_y = cfg.margin - y0, hi_y = cfg.height - 1 - cfg.margin - y1;
            const double draw_x = uniform(0.0, 1.0), draw_y = uniform(0.0, 1.0);
            if (cfg.cluster_radius) {
                const double cx = 0.5 * cfg.width - 0.5 * (x0 + x1), cy = 0.5 * cfg.height - 0.5 * (y0 + y1);
                lo_x = std::max(lo_x, cx - *cfg.cluster_radius);
                hi_x = std::min(hi_x, cx + *cfg.cluster_radius);
                lo_y = std::max(lo_y, cy - *cfg.cluster_radius);
                hi_y = std::min(hi_y, cy + *cfg.cluster_radius);
            }
            if (hi_x < lo_x || hi_y < lo_y)
                continue;
            const Point2 shift { lo_x + draw_x * (hi_x - lo_x), lo_y + draw_y * (hi_y - lo_y) };
            for (auto& p : pts)
                p = p + shift;
            bool fits = true;
            for (auto p : pts)
                fits = fits && p.x >= cfg.margin && p.y >= cfg.margin && p.x <= cfg.width - 1 - cfg.margin
                    && p.y <= cfg.height - 1 - cfg.margin;
            for (const auto& other : placed) {
                for (std::size_t a = 0; a < pts.size() && fits; ++a)
                    for (std::size_t b = 0; b < other.size() && fits; ++b)
                        fits = distance(pts[a], other[b]) >= cfg.min_separation;
                if (cfg.min_limb_separation > 0.0) {
                    for (const auto& la : topo.limbs())
                        for (const auto& lb : topo.limbs())
                            fits = fits
                                && detail::segments_distance(pts[la.from], pts[la.to], other[lb.from], other[lb.to])
                                    >= cfg.min_limb_separation;
                }
            }
            if (fits && cfg.require_crossing && !placed.empty()) {
                bool crosses = false;
                for (const auto& other : placed)
                    for (const auto& l : topo.limbs())
                        crosses = crosses || detail::segments_cross(pts[l.from], pts[l.to], other[l.from], other[l.to]);
                fits = crosses;
            }
            ok = fits;
        }
        if (!ok)
            throw Error(ErrorKind::placement_failure,
                "could not place person " + std::to_string(k) + " after " + std::to_string(cfg.max_retries)
                    + " attempts (min_separation " + std::to_string(cfg.min_separation) + ")");
        placed.push_back(pts);
    }

    std::bernoulli_distribution occluded(cfg.occlusion_prob);
    for (const auto& pts : placed) {
        std::vector<Keypoint> person;
        for (auto p : pts)
            person.push_back(cfg.occlusion_prob > 0 && occluded(rng) ? Keypoint {} : Keypoint { p });
        scene.persons.push_back(std::move(person));
    }
    return scene;
}

inline Scene generate_scene(const SceneConfig& cfg, const Topology& topo)
{
    return generate_scene(cfg, topo, template_for(topo));
}

// ---------------------------------------------------------------------------
// Noise

struct NoiseConfig {
    double map_noise_std = 0.0;
    double field_noise_std = 0.0;
    double false_peak_rate = 0.0; // expected spurious peaks per map channel
    double peak_sigma = 7.0;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (map_noise_std < 0.0 || field_noise_std < 0.0 || false_peak_rate < 0.0 || !(peak_sigma > 0.0))
            throw Error(ErrorKind::invalid_argument, "noise parameters must be non-negative");
    }

    bool is_identity() const { return map_noise_std == 0.0 && field_noise_std == 0.0 && false_peak_rate == 0.0; }
};

struct InjectedPeak {
    std::size_t channel = 0;
    Point2 position;
    double score = 0.0;
};

struct Perturbation {
    FieldStack stack;
    std::vector<InjectedPeak> injected;
};

/// Spurious Gaussian peaks (score in [0.3, 0.7], Poisson count per map
/// channel), then additive Gaussian noise. Maps are clamped to [0, 1].
inline Perturbation perturb(const FieldStack& input, const NoiseConfig& cfg)
{
    cfg.validate();
    Perturbation out { input, {} };
    if (cfg.is_identity())
        return out;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> map_noise(0.0, cfg.map_noise_std > 0 ? cfg.map_noise_std : 1.0);
    std::normal_distribution<double> field_noise(0.0, cfg.field_noise_std > 0 ? cfg.field_noise_std : 1.0);

    for (std::size_t j = 0; j < out.stack.maps.size(); ++j) {
        auto& map = out.stack.maps[j];
        const int peaks = cfg.false_peak_rate > 0 ? std::poisson_distribution<int>(cfg.false_peak_rate)(rng) : 0;
        for (int i = 0; i < peaks; ++i) {
            const Point2 pos { std::uniform_real_distribution<double>(0.0, map.width())(rng),
                std::uniform_real_distribution<double>(0.0, map.height())(rng) };
            const double score = std::uniform_real_distribution<double>(0.3, 0.7)(rng);
            detail::splat_gaussian(map, pos, cfg.peak_sigma, 4.0 * cfg.peak_sigma, score);
            out.injected.push_back({ j, pos, score });
        }
    }
    if (cfg.map_noise_std > 0) {
        for (auto& map : out.stack.maps)
            for (auto& v : map.values())
                v = static_cast<float>(std::clamp(double(v) + map_noise(rng), 0.0, 1.0));
    }
    if (cfg.field_noise_std > 0) {
        for (auto& field : out.stack.fields) {
            for (auto& v : field.values()) {
                v.x = static_cast<float>(v.x + field_noise(rng));
                v.y = static_cast<float>(v.y + field_noise(rng));
            }
        }
    }
    return out;
}

} // namespace pafparse
