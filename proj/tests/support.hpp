#pragma once

// Test-only helpers and independent oracles shared by the unit and acceptance
// suites. Nothing here calls into the code under test for the value it checks.

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "pafparse/pafparse.hpp"

namespace test_support {

using namespace pafparse;

class Rng {
public:
    explicit Rng(std::uint64_t seed)
        : gen_(seed)
    {
    }

    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

/// Dense rows x cols scores for one limb.
inline std::vector<ConnectionScore> random_instance(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi)
{
    std::vector<ConnectionScore> out;
    for (std::size_t m = 0; m < rows; ++m)
        for (std::size_t n = 0; n < cols; ++n)
            out.push_back({ 0, m, n, rng.uniform(lo, hi) });
    return out;
}

/// Best matching total by enumerating every partial injection of rows into
/// columns (pairs with non-positive weight are allowed but never help).
inline double enumerate_best_total(const std::vector<ConnectionScore>& scores)
{
    std::size_t rows = 0, cols = 0;
    for (const auto& s : scores) {
        rows = std::max(rows, s.m + 1);
        cols = std::max(cols, s.n + 1);
    }
    std::vector<double> w(rows * cols, -std::numeric_limits<double>::infinity());
    for (const auto& s : scores)
        w[s.m * cols + s.n] = s.score;
    double best = 0.0;
    std::vector<char> used(cols, 0);
    auto rec = [&](auto&& self, std::size_t m, double total) -> void {
        if (m == rows) {
            best = std::max(best, total);
            return;
        }
        self(self, m + 1, total);
        for (std::size_t n = 0; n < cols; ++n) {
            if (used[n] || !(w[m * cols + n] > 0.0))
                continue;
            used[n] = 1;
            self(self, m + 1, total + w[m * cols + n]);
            used[n] = 0;
        }
    };
    rec(rec, 0, 0.0);
    return best;
}

/// True when every GT person maps to exactly one parsed person holding all of
/// its keypoints within `tol` pixels, and nothing else was parsed.
inline bool recovers_scene(const ParseResult& result, const Scene& scene, double tol)
{
    if (result.persons.size() != scene.persons.size())
        return false;
    std::vector<bool> used(scene.persons.size(), false);
    for (const auto& p : result.persons) {
        bool matched = false;
        for (std::size_t g = 0; g < scene.persons.size() && !matched; ++g) {
            if (used[g])
                continue;
            const auto& truth = scene.persons[g];
            bool all = p.parts.size() == truth.size();
            for (std::size_t j = 0; j < truth.size() && all; ++j) {
                if (!truth[j])
                    all = !p.parts[j];
                else
                    all = p.parts[j] && distance(p.parts[j]->position, *truth[j]) <= tol;
            }
            if (all)
                used[g] = matched = true;
        }
        if (!matched)
            return false;
    }
    return true;
}

/// Tree-limb scores taken from the matching full-graph limbs (same field, same
/// orientation, so the same values).
inline std::vector<std::vector<ConnectionScore>> tree_scores_from_full(
    const std::vector<std::vector<ConnectionScore>>& full_scores, const Topology& tree, const Topology& full)
{
    std::vector<std::vector<ConnectionScore>> out;
    for (std::size_t c = 0; c < tree.num_limbs(); ++c) {
        const Limb l = tree.limb(c);
        const std::size_t fc = *full.find_limb(l.from, l.to);
        if (full.limb(fc).from != l.from)
            throw std::logic_error("orientation differs between tree and full graph");
        auto scores = full_scores[fc];
        for (auto& s : scores)
            s.limb = c;
        out.push_back(std::move(scores));
    }
    return out;
}

/// Groups of an assembled result, plus singletons for candidates it left out.
inline std::vector<Group> as_groups(const ParseResult& r, const CandidateSet& cands)
{
    auto groups = groups_of(r);
    for (std::size_t j = 0; j < cands.parts.size(); ++j) {
        for (std::size_t i = 0; i < cands.parts[j].size(); ++i) {
            bool seen = false;
            for (const auto& g : groups)
                seen = seen || g[j] == i;
            if (!seen) {
                Group g(cands.parts.size());
                g[j] = i;
                groups.push_back(std::move(g));
            }
        }
    }
    return groups;
}

/// Partition equality ignoring group order and singletons.
inline bool same_partition(const std::vector<Group>& a, const std::vector<Group>& b)
{
    auto canon = [](const std::vector<Group>& gs) {
        std::set<Group> out;
        for (const auto& g : gs)
            if (std::count_if(g.begin(), g.end(), [](const auto& v) { return v.has_value(); }) > 1)
                out.insert(g);
        return out;
    };
    return canon(a) == canon(b);
}

inline float random_float(Rng& rng)
{
    switch (rng.index(8)) {
    case 0: return -0.0f;
    case 1: return std::numeric_limits<float>::denorm_min() * float(1 + rng.index(1000));
    case 2: return std::numeric_limits<float>::max();
    case 3: return std::numeric_limits<float>::lowest();
    default: return float(rng.uniform(-2.0, 2.0));
    }
}

inline FieldStack random_stack(Rng& rng, int w, int h, std::size_t maps, std::size_t fields)
{
    FieldStack s;
    for (std::size_t j = 0; j < maps; ++j) {
        ScalarGrid g(w, h);
        for (auto& v : g.values())
            v = random_float(rng);
        s.maps.push_back(std::move(g));
    }
    for (std::size_t c = 0; c < fields; ++c) {
        VectorGrid g(w, h);
        for (auto& v : g.values())
            v = { random_float(rng), random_float(rng) };
        s.fields.push_back(std::move(g));
    }
    if (s.maps.empty() && s.fields.empty())
        s.maps.push_back(ScalarGrid(w, h));
    return s;
}

inline bool bit_equal(const FieldStack& a, const FieldStack& b)
{
    if (a.maps.size() != b.maps.size() || a.fields.size() != b.fields.size())
        return false;
    for (std::size_t j = 0; j < a.maps.size(); ++j) {
        if (!a.maps[j].same_shape(b.maps[j]))
            return false;
        for (std::size_t i = 0; i < a.maps[j].size(); ++i)
            if (std::bit_cast<std::uint32_t>(a.maps[j].values()[i]) != std::bit_cast<std::uint32_t>(b.maps[j].values()[i]))
                return false;
    }
    for (std::size_t c = 0; c < a.fields.size(); ++c) {
        if (!a.fields[c].same_shape(b.fields[c]))
            return false;
        for (std::size_t i = 0; i < a.fields[c].size(); ++i) {
            const Vec2f u = a.fields[c].values()[i], v = b.fields[c].values()[i];
            if (std::bit_cast<std::uint32_t>(u.x) != std::bit_cast<std::uint32_t>(v.x)
                || std::bit_cast<std::uint32_t>(u.y) != std::bit_cast<std::uint32_t>(v.y))
                return false;
        }
    }
    return true;
}

/// Keypoints anywhere on the pixel grid [0, w - 1] x [0, h - 1], some absent.
inline Scene random_scene(Rng& rng, std::size_t num_parts)
{
    Scene s;
    s.width = 1 + int(rng.index(2000));
    s.height = 1 + int(rng.index(2000));
    const std::size_t k = rng.index(6);
    for (std::size_t p = 0; p < k; ++p) {
        std::vector<Keypoint> person;
        for (std::size_t j = 0; j < num_parts; ++j) {
            if (rng.index(5) == 0)
                person.emplace_back();
            else
                person.emplace_back(Point2 { rng.uniform(0, s.width - 1), rng.uniform(0, s.height - 1) });
        }
        s.persons.push_back(std::move(person));
    }
    return s;
}

inline bool within(const Scene& a, const Scene& b, double tol)
{
    if (a.width != b.width || a.height != b.height || a.persons.size() != b.persons.size())
        return false;
    for (std::size_t k = 0; k < a.persons.size(); ++k) {
        if (a.persons[k].size() != b.persons[k].size())
            return false;
        for (std::size_t j = 0; j < a.persons[k].size(); ++j) {
            const auto &p = a.persons[k][j], &q = b.persons[k][j];
            if (p.has_value() != q.has_value())
                return false;
            if (p && (std::abs(p->x - q->x) > tol || std::abs(p->y - q->y) > tol))
                return false;
        }
    }
    return true;
}

/// Byte flips, truncation, extension or header tampering of a valid file.
inline std::vector<std::uint8_t> mutate(Rng& rng, std::vector<std::uint8_t> bytes)
{
    switch (rng.index(4)) {
    case 0:
        for (std::size_t i = 0, n = 1 + rng.index(4); i < n; ++i)
            bytes[rng.index(bytes.size())] = std::uint8_t(rng.index(256));
        break;
    case 1: bytes.resize(rng.index(bytes.size())); break;
    case 2:
        for (std::size_t i = 0, n = 1 + rng.index(8); i < n; ++i)
            bytes.push_back(std::uint8_t(rng.index(256)));
        break;
    default: bytes[4 + rng.index(20)] = std::uint8_t(rng.index(256)); break;
    }
    return bytes;
}

} // namespace test_support
