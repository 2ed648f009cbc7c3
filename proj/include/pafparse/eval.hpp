#pragma once

// PCKh keypoint matching, per-part average precision, and the two oracle
// ablations (ground-truth detections, ground-truth connections).

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "pafparse/assembly.hpp"
#include "pafparse/core.hpp"
#include "pafparse/detection.hpp"
#include "pafparse/topology.hpp"

namespace pafparse {

struct EvalConfig {
    double pckh_fraction = 0.5;
    /// Part pair defining the per-person reference length; the topology's
    /// reference when unset.
    std::optional<std::pair<std::size_t, std::size_t>> reference_limb;

    void validate(const Topology& topo) const
    {
        if (!(pckh_fraction > 0.0))
            throw Error(ErrorKind::invalid_argument, "pckh_fraction must be positive");
        if (reference_limb
            && (reference_limb->first >= topo.num_parts() || reference_limb->second >= topo.num_parts()))
            throw Error(ErrorKind::invalid_argument, "reference limb out of range");
    }
};

struct EvalReport {
    std::vector<double> per_part_ap;
    double map = 0.0;
};

/// Reference length of each GT person. A person missing either reference part
/// borrows the mean of the other persons in the image, or gets 0.
inline std::vector<double> reference_lengths(const Scene& gt, const Topology& topo, const EvalConfig& cfg)
{
    const auto [ra, rb] = cfg.reference_limb.value_or(topo.reference());
    std::vector<std::optional<double>> own;
    double sum = 0.0;
    int known = 0;
    for (const auto& person : gt.persons) {
        if (ra < person.size() && rb < person.size() && person[ra] && person[rb]) {
            own.push_back(distance(*person[ra], *person[rb]));
            sum += *own.back();
            ++known;
        } else {
            own.push_back(std::nullopt);
        }
    }
    std::vector<double> out;
    for (const auto& o : own)
        out.push_back(o.value_or(known > 0 ? sum / known : 0.0));
    return out;
}

namespace detail {
    struct RankedKeypoint {
        double confidence;
        double person_score;
        bool true_positive;
    };

    /// All-points interpolated AP over a ranked list.
    inline double average_precision(std::vector<RankedKeypoint> dets, std::size_t positives)
    {
        if (positives == 0)
            return dets.empty() ? 1.0 : 0.0;
        std::stable_sort(dets.begin(), dets.end(), [](const auto& a, const auto& b) {
            if (a.confidence != b.confidence)
                return a.confidence > b.confidence;
            return a.person_score > b.person_score;
        });
        std::vector<double> precision, recall;
        std::size_t tp = 0;
        for (std::size_t i = 0; i < dets.size(); ++i) {
            tp += dets[i].true_positive ? 1 : 0;
            precision.push_back(double(tp) / double(i + 1));
            recall.push_back(double(tp) / double(positives));
        }
        for (std::size_t i = precision.size(); i-- > 1;)
            precision[i - 1] = std::max(precision[i - 1], precision[i]);
        double ap = 0.0, prev_recall = 0.0;
        for (std::size_t i = 0; i < recall.size(); ++i) {
            ap += (recall[i] - prev_recall) * precision[i];
            prev_recall = recall[i];
        }
        return ap;
    }
} // namespace detail

/// Per image, predicted persons in descending score order take the unused GT
/// person with the most PCKh hits. Keypoints are then ranked per part by
/// candidate confidence across the dataset.
inline EvalReport evaluate(
    std::span<const ParseResult> pred, std::span<const Scene> gt, const Topology& topo, const EvalConfig& cfg = {})
{
    cfg.validate(topo);
    if (pred.size() != gt.size())
        throw Error(ErrorKind::dimension_mismatch, "prediction and ground-truth lists differ in length");
    const std::size_t num_parts = topo.num_parts();
    std::vector<std::vector<detail::RankedKeypoint>> ranked(num_parts);
    std::vector<std::size_t> positives(num_parts, 0);

    for (std::size_t img = 0; img < gt.size(); ++img) {
        const Scene& scene = gt[img];
        validate_scene(scene, num_parts);
        for (const auto& person : scene.persons)
            for (std::size_t j = 0; j < num_parts; ++j)
                positives[j] += person[j] ? 1 : 0;
        const auto ref = reference_lengths(scene, topo, cfg);

        const auto& persons = pred[img].persons;
        std::vector<std::size_t> order(persons.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return persons[a].score > persons[b].score; });

        auto hit = [&](const PersonPose& p, std::size_t g, std::size_t j) {
            const auto& truth = scene.persons[g][j];
            return p.parts.size() == num_parts && p.parts[j] && truth
                && distance(p.parts[j]->position, *truth) <= cfg.pckh_fraction * ref[g];
        };

        std::vector<bool> used(scene.persons.size(), false);
        for (std::size_t idx : order) {
            const PersonPose& p = persons[idx];
            if (p.parts.size() != num_parts)
                throw Error(ErrorKind::dimension_mismatch, "predicted person does not match topology");
            std::optional<std::size_t> best;
            std::size_t best_hits = 0;
            for (std::size_t g = 0; g < scene.persons.size(); ++g) {
                if (used[g])
                    continue;
                std::size_t hits = 0;
                for (std::size_t j = 0; j < num_parts; ++j)
                    hits += hit(p, g, j) ? 1 : 0;
                if (hits > best_hits) {
                    best_hits = hits;
                    best = g;
                }
            }
            if (best)
                used[*best] = true;
            for (std::size_t j = 0; j < num_parts; ++j) {
                if (!p.parts[j])
                    continue;
                ranked[j].push_back({ p.parts[j]->score, p.score, best && hit(p, *best, j) });
            }
        }
    }

    EvalReport report;
    for (std::size_t j = 0; j < num_parts; ++j)
        report.per_part_ap.push_back(detail::average_precision(std::move(ranked[j]), positives[j]));
    report.map = num_parts == 0
        ? 0.0
        : std::accumulate(report.per_part_ap.begin(), report.per_part_ap.end(), 0.0) / double(num_parts);
    return report;
}

/// Ground-truth keypoints as candidates (score 1), in person order.
inline CandidateSet candidates_from_scene(const Scene& gt, const Topology& topo)
{
    validate_scene(gt, topo.num_parts());
    CandidateSet set;
    set.parts.resize(topo.num_parts());
    for (const auto& person : gt.persons)
        for (std::size_t j = 0; j < topo.num_parts(); ++j)
            if (person[j])
                set.parts[j].push_back({ j, *person[j], 1.0, set.parts[j].size() });
    return set;
}

/// Parsing with perfect detections: skips NMS and scores GT keypoints.
inline ParseResult eval_oracle_detection(
    const Scene& gt, std::span<const VectorGrid> fields, const Topology& topo, const ParseParams& params = {})
{
    return parse_candidates(candidates_from_scene(gt, topo), fields, topo, params);
}

/// Grouping with perfect connections: each detection joins the person owning
/// the nearest same-part GT keypoint within that person's PCKh radius. A GT
/// keypoint accepts only its highest-scoring detection; the rest are dropped.
inline ParseResult eval_oracle_connection(
    const CandidateSet& detections, const Scene& gt, const Topology& topo, const EvalConfig& cfg = {})
{
    cfg.validate(topo);
    validate_scene(gt, topo.num_parts());
    if (detections.parts.size() != topo.num_parts())
        throw Error(ErrorKind::dimension_mismatch, "detections do not match topology");
    const auto ref = reference_lengths(gt, topo, cfg);
    std::vector<PersonPose> people(gt.persons.size(),
        PersonPose { std::vector<std::optional<PartCandidate>>(topo.num_parts()), 0.0, 0 });
    for (std::size_t j = 0; j < topo.num_parts(); ++j) {
        // Highest score first so conflicts keep the strongest detection.
        std::vector<PartCandidate> dets = detections.parts[j];
        std::stable_sort(dets.begin(), dets.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
        for (const auto& d : dets) {
            std::optional<std::size_t> owner;
            double best = 0.0;
            for (std::size_t g = 0; g < gt.persons.size(); ++g) {
                const auto& truth = gt.persons[g][j];
                if (!truth)
                    continue;
                const double dist = distance(d.position, *truth);
                if (dist <= cfg.pckh_fraction * ref[g] && (!owner || dist < best)) {
                    owner = g;
                    best = dist;
                }
            }
            if (!owner || people[*owner].parts[j])
                continue;
            people[*owner].parts[j] = d;
            people[*owner].score += d.score;
            ++people[*owner].num_parts;
        }
    }
    ParseResult result;
    for (auto& p : people)
        if (p.num_parts > 0)
            result.persons.push_back(std::move(p));
    return result;
}

} // namespace pafparse
