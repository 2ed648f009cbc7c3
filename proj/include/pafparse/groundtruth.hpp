#pragma once

// Ground-truth rendering of confidence maps and part affinity fields, the
// annotation mask, and the masked L2 stage loss.

#include <cmath>
#include <span>
#include <vector>

#include "pafparse/core.hpp"
#include "pafparse/topology.hpp"

namespace pafparse {

struct RenderParams {
    double sigma = 7.0;             // confidence peak spread, pixels
    double sigma_l = 5.0;           // limb half-width, pixels
    double truncation_radius = 4.0; // in multiples of sigma

    void validate() const
    {
        if (!(sigma > 0.0) || !(sigma_l > 0.0) || !(truncation_radius >= 3.0))
            throw Error(ErrorKind::invalid_argument, "render params need sigma > 0, sigma_l > 0, truncation >= 3");
    }
};

/// J confidence maps and C affinity fields sharing one canvas.
struct FieldStack {
    std::vector<ScalarGrid> maps;
    std::vector<VectorGrid> fields;

    int width() const { return !maps.empty() ? maps.front().width() : (!fields.empty() ? fields.front().width() : 0); }
    int height() const { return !maps.empty() ? maps.front().height() : (!fields.empty() ? fields.front().height() : 0); }

    friend bool operator==(const FieldStack&, const FieldStack&) = default;
};

namespace detail {
    struct PixelBox {
        int x0, y0, x1, y1; // inclusive
    };

    inline PixelBox clip_box(double xmin, double ymin, double xmax, double ymax, int width, int height)
    {
        return { std::max(0, static_cast<int>(std::floor(xmin))), std::max(0, static_cast<int>(std::floor(ymin))),
            std::min(width - 1, static_cast<int>(std::ceil(xmax))),
            std::min(height - 1, static_cast<int>(std::ceil(ymax))) };
    }

    /// Max-splats exp(-|p - center|^2 / sigma^2) scaled by `peak` into `grid`,
    /// leaving pixels beyond `radius` untouched.
    inline void splat_gaussian(ScalarGrid& grid, Point2 center, double sigma, double radius, double peak = 1.0)
    {
        const auto box = clip_box(center.x - radius, center.y - radius, center.x + radius, center.y + radius,
            grid.width(), grid.height());
        const double r2 = radius * radius;
        const double inv = 1.0 / (sigma * sigma);
        for (int y = box.y0; y <= box.y1; ++y) {
            for (int x = box.x0; x <= box.x1; ++x) {
                const double dx = x - center.x, dy = y - center.y;
                const double d2 = dx * dx + dy * dy;
                if (d2 > r2)
                    continue;
                const float v = static_cast<float>(peak * std::exp(-d2 * inv));
                float& cell = grid(x, y);
                cell = std::max(cell, v);
            }
        }
    }

    /// Pixels on the limb band of `seg`: 0 <= v.(p - a) <= l and |v_perp.(p - a)| <= sigma_l.
    template <typename Fn>
    void for_each_band_pixel(const LimbSegment& seg, double sigma_l, int width, int height, Fn&& fn)
    {
        const auto box = clip_box(std::min(seg.start.x, seg.end.x) - sigma_l, std::min(seg.start.y, seg.end.y) - sigma_l,
            std::max(seg.start.x, seg.end.x) + sigma_l, std::max(seg.start.y, seg.end.y) + sigma_l, width, height);
        for (int y = box.y0; y <= box.y1; ++y) {
            for (int x = box.x0; x <= box.x1; ++x) {
                const Point2 rel = Point2 { double(x), double(y) } - seg.start;
                const double along = dot(seg.direction, rel);
                const double across = dot(seg.normal, rel);
                if (along >= 0.0 && along <= seg.length && std::abs(across) <= sigma_l)
                    fn(x, y);
            }
        }
    }
} // namespace detail

inline ScalarGrid render_confidence(const Scene& scene, std::size_t part, const RenderParams& params)
{
    params.validate();
    if (scene.width <= 0 || scene.height <= 0)
        throw Error(ErrorKind::invalid_argument, "scene dimensions must be positive");
    ScalarGrid grid(scene.width, scene.height, 0.0f);
    for (const auto& person : scene.persons) {
        if (part >= person.size())
            throw Error(ErrorKind::invalid_argument, "part index out of range");
        if (person[part])
            detail::splat_gaussian(grid, *person[part], params.sigma, params.truncation_radius * params.sigma);
    }
    return grid;
}

/// Averaged field for limb `c`. Contributions are summed in person order in
/// single precision, then divided by the number of contributing persons.
inline VectorGrid render_paf(const Scene& scene, const Topology& topo, std::size_t c, const RenderParams& params)
{
    params.validate();
    if (c >= topo.num_limbs())
        throw Error(ErrorKind::invalid_argument, "limb index out of range");
    const Limb limb = topo.limb(c);
    VectorGrid out(scene.width, scene.height);
    std::vector<std::uint16_t> count(out.size(), 0);
    for (std::size_t k = 0; k < scene.persons.size(); ++k) {
        const auto& person = scene.persons[k];
        if (person.size() != topo.num_parts())
            throw Error(ErrorKind::dimension_mismatch, "person part count does not match topology");
        if (!person[limb.from] || !person[limb.to])
            continue;
        if (*person[limb.from] == *person[limb.to]) {
            log_warning("person " + std::to_string(k) + ": coincident endpoints for limb " + std::to_string(c)
                + ", skipped");
            continue;
        }
        const LimbSegment seg = limb_segment(*person[limb.from], *person[limb.to]);
        const Vec2f v { static_cast<float>(seg.direction.x), static_cast<float>(seg.direction.y) };
        detail::for_each_band_pixel(seg, params.sigma_l, out.width(), out.height(), [&](int x, int y) {
            Vec2f& cell = out(x, y);
            cell.x += v.x;
            cell.y += v.y;
            ++count[out.index(x, y)];
        });
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (count[i] > 1) {
            const float n = static_cast<float>(count[i]);
            out.values()[i].x /= n;
            out.values()[i].y /= n;
        }
    }
    return out;
}

inline FieldStack render_all(const Scene& scene, const Topology& topo, const RenderParams& params, unsigned threads = 1)
{
    params.validate();
    validate_scene(scene, topo.num_parts());
    FieldStack out;
    out.maps.resize(topo.num_parts());
    out.fields.resize(topo.num_limbs());
    parallel_for(topo.num_parts() + topo.num_limbs(), threads, [&](std::size_t i) {
        if (i < topo.num_parts())
            out.maps[i] = render_confidence(scene, i, params);
        else
            out.fields[i - topo.num_parts()] = render_paf(scene, topo, i - topo.num_parts(), params);
    });
    return out;
}

enum class MidpointVariant { one, two };

/// Fractions of the limb length at which the midpoint baseline places its
/// incidence points.
inline std::vector<double> midpoint_fractions(MidpointVariant variant)
{
    if (variant == MidpointVariant::one)
        return { 0.5 };
    return { 1.0 / 3.0, 2.0 / 3.0 };
}

/// Baseline association channels: one scalar map per limb holding Gaussians at
/// the limb's intermediate points, max-aggregated over persons.
inline std::vector<ScalarGrid> render_midpoint_maps(
    const Scene& scene, const Topology& topo, const RenderParams& params, MidpointVariant variant)
{
    params.validate();
    validate_scene(scene, topo.num_parts());
    std::vector<ScalarGrid> out;
    for (const auto& limb : topo.limbs()) {
        ScalarGrid grid(scene.width, scene.height, 0.0f);
        for (const auto& person : scene.persons) {
            if (!person[limb.from] || !person[limb.to])
                continue;
            for (double u : midpoint_fractions(variant)) {
                const Point2 p = (1.0 - u) * *person[limb.from] + u * *person[limb.to];
                detail::splat_gaussian(grid, p, params.sigma, params.truncation_radius * params.sigma);
            }
        }
        out.push_back(std::move(grid));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mask and loss

/// Half-open pixel rectangle [x, x + width) x [y, y + height).
struct PixelRect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
};

inline MaskGrid build_mask(int width, int height, std::span<const PixelRect> unlabeled)
{
    MaskGrid mask(width, height, 1);
    for (const auto& r : unlabeled) {
        if (r.x < 0 || r.y < 0 || r.width < 0 || r.height < 0 || r.x + r.width > width || r.y + r.height > height)
            throw Error(ErrorKind::invalid_argument, "unlabeled region outside the grid");
        for (int y = r.y; y < r.y + r.height; ++y)
            for (int x = r.x; x < r.x + r.width; ++x)
                mask(x, y) = 0;
    }
    return mask;
}

inline MaskGrid build_mask(const Scene& scene, std::span<const PixelRect> unlabeled)
{
    return build_mask(scene.width, scene.height, unlabeled);
}

struct LossReport {
    double f_S = 0.0;
    double f_L = 0.0;
    double f = 0.0;
};

/// Masked sum of squared residuals over all map and field channels.
inline LossReport stage_loss(std::span<const ScalarGrid> pred_maps, std::span<const VectorGrid> pred_fields,
    std::span<const ScalarGrid> gt_maps, std::span<const VectorGrid> gt_fields, const MaskGrid& mask)
{
    if (pred_maps.size() != gt_maps.size() || pred_fields.size() != gt_fields.size())
        throw Error(ErrorKind::dimension_mismatch, "channel counts differ between prediction and ground truth");
    auto check = [&](const auto& a, const auto& b) {
        if (a.width() != mask.width() || a.height() != mask.height() || !a.same_shape(b))
            throw Error(ErrorKind::dimension_mismatch, "grid dimensions differ");
    };
    LossReport r;
    for (std::size_t j = 0; j < pred_maps.size(); ++j) {
        check(pred_maps[j], gt_maps[j]);
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask.values()[i])
                continue;
            const double d = double(pred_maps[j].values()[i]) - double(gt_maps[j].values()[i]);
            r.f_S += d * d;
        }
    }
    for (std::size_t c = 0; c < pred_fields.size(); ++c) {
        check(pred_fields[c], gt_fields[c]);
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask.values()[i])
                continue;
            const Vec2f a = pred_fields[c].values()[i], b = gt_fields[c].values()[i];
            const double dx = double(a.x) - double(b.x), dy = double(a.y) - double(b.y);
            r.f_L += dx * dx + dy * dy;
        }
    }
    r.f = r.f_S + r.f_L;
    return r;
}

inline LossReport stage_loss(const FieldStack& pred, const FieldStack& gt, const MaskGrid& mask)
{
    return stage_loss(pred.maps, pred.fields, gt.maps, gt.fields, mask);
}

} // namespace pafparse
