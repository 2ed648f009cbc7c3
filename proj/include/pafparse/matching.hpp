#pragma once

// Per-limb maximum-weight bipartite matching (Hungarian, greedy, exhaustive)
// and the exhaustive full-graph grouping oracle.

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "pafparse/association.hpp"
#include "pafparse/detection.hpp"
#include "pafparse/topology.hpp"

namespace pafparse {

/// Selected connections of one limb. `pairs` is sorted by m; no m or n repeats.
struct MatchResult {
    std::size_t limb = 0;
    std::vector<ConnectionScore> pairs;
    double total = 0.0;

    friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

enum class Solver { hungarian, greedy, bruteforce };

namespace detail {
    /// Dense weight table for one limb; absent pairs read as non-selectable.
    struct WeightTable {
        std::size_t limb = 0;
        std::size_t rows = 0;
        std::size_t cols = 0;
        std::vector<std::optional<double>> w;

        const std::optional<double>& at(std::size_t m, std::size_t n) const { return w[m * cols + n]; }
        bool selectable(std::size_t m, std::size_t n) const
        {
            const auto& v = at(m, n);
            return v && *v > 0.0;
        }
    };

    inline WeightTable make_table(std::span<const ConnectionScore> scores)
    {
        WeightTable t;
        if (scores.empty())
            return t;
        t.limb = scores.front().limb;
        for (const auto& s : scores) {
            if (s.limb != t.limb)
                throw Error(ErrorKind::invalid_argument, "scores from more than one limb");
            t.rows = std::max(t.rows, s.m + 1);
            t.cols = std::max(t.cols, s.n + 1);
        }
        if (t.rows * t.cols > (std::size_t(1) << 24))
            throw Error(ErrorKind::too_large, "matching instance too large");
        t.w.assign(t.rows * t.cols, std::nullopt);
        for (const auto& s : scores) {
            auto& cell = t.w[s.m * t.cols + s.n];
            if (cell)
                throw Error(ErrorKind::invalid_argument, "duplicate candidate pair");
            cell = s.score;
        }
        return t;
    }

    inline MatchResult finish(const WeightTable& t, std::vector<std::pair<std::size_t, std::size_t>> pairs)
    {
        std::sort(pairs.begin(), pairs.end());
        MatchResult r;
        r.limb = t.limb;
        for (auto [m, n] : pairs) {
            const double s = *t.at(m, n);
            r.pairs.push_back({ t.limb, m, n, s });
            r.total += s;
        }
        return r;
    }
} // namespace detail

/// Optimal matching. Non-positive pairs are given weight zero, so leaving both
/// endpoints unmatched is never worse; they are stripped from the result.
inline MatchResult match_hungarian(std::span<const ConnectionScore> scores)
{
    const auto t = detail::make_table(scores);
    if (t.rows == 0 || t.cols == 0)
        return detail::finish(t, {});

    // Shortest augmenting path with potentials on a rows <= cols cost matrix.
    const bool transpose = t.rows > t.cols;
    const std::size_t n = transpose ? t.cols : t.rows;
    const std::size_t m = transpose ? t.rows : t.cols;
    auto cost = [&](std::size_t i, std::size_t j) {
        const std::size_t a = transpose ? j : i, b = transpose ? i : j;
        return t.selectable(a, b) ? -*t.at(a, b) : 0.0;
    };
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j])
                    continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] == 0)
            continue;
        const std::size_t a = transpose ? j - 1 : p[j] - 1;
        const std::size_t b = transpose ? p[j] - 1 : j - 1;
        if (t.selectable(a, b))
            pairs.emplace_back(a, b);
    }
    return detail::finish(t, std::move(pairs));
}

/// Accepts pairs in (score desc, m asc, n asc) order while both ends are free.
inline MatchResult match_greedy(std::span<const ConnectionScore> scores)
{
    const auto t = detail::make_table(scores);
    std::vector<ConnectionScore> order(scores.begin(), scores.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score)
            return a.score > b.score;
        if (a.m != b.m)
            return a.m < b.m;
        return a.n < b.n;
    });
    std::vector<char> used_m(t.rows, 0), used_n(t.cols, 0);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& s : order) {
        if (!(s.score > 0.0))
            break;
        if (used_m[s.m] || used_n[s.n])
            continue;
        used_m[s.m] = used_n[s.n] = 1;
        pairs.emplace_back(s.m, s.n);
    }
    return detail::finish(t, std::move(pairs));
}

inline constexpr std::size_t bruteforce_max_cells = 64;

/// Exhaustive maximum over all matchings of positive pairs. Ties resolve to
/// the lexicographically smallest sorted pair list.
inline MatchResult match_bruteforce(std::span<const ConnectionScore> scores)
{
    const auto t = detail::make_table(scores);
    if (t.rows * t.cols > bruteforce_max_cells)
        throw Error(ErrorKind::too_large,
            "brute-force matching limited to " + std::to_string(bruteforce_max_cells) + " candidate pairs");
    std::vector<std::pair<std::size_t, std::size_t>> current, best;
    double best_total = 0.0;
    std::vector<char> used(t.cols, 0);
    auto recurse = [&](auto&& self, std::size_t m, double total) -> void {
        if (m == t.rows) {
            if (total > best_total || (total == best_total && current < best)) {
                best_total = total;
                best = current;
            }
            return;
        }
        for (std::size_t n = 0; n < t.cols; ++n) {
            if (used[n] || !t.selectable(m, n))
                continue;
            used[n] = 1;
            current.emplace_back(m, n);
            self(self, m + 1, total + *t.at(m, n));
            current.pop_back();
            used[n] = 0;
        }
        self(self, m + 1, total);
    };
    recurse(recurse, 0, 0.0);
    return detail::finish(t, std::move(best));
}

inline MatchResult match_limb(std::span<const ConnectionScore> scores, Solver solver)
{
    switch (solver) {
    case Solver::hungarian: return match_hungarian(scores);
    case Solver::greedy: return match_greedy(scores);
    case Solver::bruteforce: return match_bruteforce(scores);
    }
    throw Error(ErrorKind::invalid_argument, "unknown solver");
}

inline std::vector<MatchResult> match_all(
    const std::vector<std::vector<ConnectionScore>>& scores, Solver solver, unsigned threads = 1)
{
    std::vector<MatchResult> out(scores.size());
    parallel_for(scores.size(), threads, [&](std::size_t c) {
        out[c] = match_limb(scores[c], solver);
        out[c].limb = c;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Full-graph grouping oracle

/// One person hypothesis: candidate id per part, or empty.
using Group = std::vector<std::optional<std::size_t>>;

struct FullGraphSolution {
    std::vector<Group> groups; // singletons included, ordered by first member
    double total = 0.0;
};

struct FullGraphLimits {
    std::size_t max_candidates = 12;
    std::size_t max_per_part = 4;
};

namespace detail {
    /// Symmetric pair-score lookup over candidates flattened in (part, id) order.
    struct PairScores {
        std::vector<std::size_t> offset; // first flat index of each part
        std::vector<std::size_t> part_of;
        std::vector<double> w;           // n x n, NaN where the parts share no limb
        std::size_t n = 0;

        double operator()(std::size_t a, std::size_t b) const { return w[a * n + b]; }
    };

    inline PairScores flatten_scores(
        const std::vector<std::vector<ConnectionScore>>& scores, const CandidateSet& candidates, const Topology& topo)
    {
        PairScores ps;
        for (std::size_t j = 0; j < candidates.parts.size(); ++j) {
            ps.offset.push_back(ps.n);
            for (std::size_t m = 0; m < candidates.parts[j].size(); ++m)
                ps.part_of.push_back(j);
            ps.n += candidates.parts[j].size();
        }
        ps.w.assign(ps.n * ps.n, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t c = 0; c < scores.size(); ++c) {
            const Limb limb = topo.limb(c);
            for (const auto& s : scores[c]) {
                if (s.m >= candidates.parts[limb.from].size() || s.n >= candidates.parts[limb.to].size())
                    throw Error(ErrorKind::invalid_argument, "score references unknown candidate");
                const std::size_t a = ps.offset[limb.from] + s.m, b = ps.offset[limb.to] + s.n;
                ps.w[a * ps.n + b] = ps.w[b * ps.n + a] = s.score;
            }
        }
        return ps;
    }
} // namespace detail

/// Sum of every within-group limb score, skipping part pairs that share no limb.
inline double grouping_objective(const std::vector<Group>& groups,
    const std::vector<std::vector<ConnectionScore>>& scores, const CandidateSet& candidates, const Topology& topo)
{
    const auto ps = detail::flatten_scores(scores, candidates, topo);
    double total = 0.0;
    for (const auto& g : groups) {
        for (std::size_t a = 0; a < g.size(); ++a) {
            for (std::size_t b = a + 1; b < g.size(); ++b) {
                if (!g[a] || !g[b])
                    continue;
                const double s = ps(ps.offset[a] + *g[a], ps.offset[b] + *g[b]);
                if (!std::isnan(s))
                    total += s;
            }
        }
    }
    return total;
}

/// Exhaustive search over partitions of all candidates into groups holding at
/// most one candidate per part, maximising the summed within-group limb
/// scores. Intended for desk-sized instances only.
inline FullGraphSolution solve_full_graph(const std::vector<std::vector<ConnectionScore>>& scores,
    const CandidateSet& candidates, const Topology& topo, const FullGraphLimits& limits = {})
{
    if (candidates.parts.size() != topo.num_parts() || scores.size() != topo.num_limbs())
        throw Error(ErrorKind::dimension_mismatch, "scores or candidates do not match topology");
    if (candidates.total() > limits.max_candidates)
        throw Error(ErrorKind::too_large, "full-graph search limited to " + std::to_string(limits.max_candidates)
                + " candidates, got " + std::to_string(candidates.total()));
    for (const auto& p : candidates.parts)
        if (p.size() > limits.max_per_part)
            throw Error(ErrorKind::too_large,
                "full-graph search limited to " + std::to_string(limits.max_per_part) + " candidates per part");

    const auto ps = detail::flatten_scores(scores, candidates, topo);
    const std::size_t n = ps.n;
    auto weight = [&](std::size_t a, std::size_t b) {
        const double s = ps(a, b);
        return std::isnan(s) ? 0.0 : s;
    };
    // Optimistic gain of each candidate from joining earlier ones.
    std::vector<double> optimistic(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double pos = 0.0;
        for (std::size_t k = 0; k < i; ++k)
            pos += std::max(0.0, weight(i, k));
        optimistic[i] = optimistic[i + 1] + pos;
    }

    std::vector<std::vector<std::size_t>> groups, best_groups;
    double best = -std::numeric_limits<double>::infinity();
    auto recurse = [&](auto&& self, std::size_t i, double total) -> void {
        if (total + optimistic[i] + 1e-12 < best)
            return;
        if (i == n) {
            if (total > best) {
                best = total;
                best_groups = groups;
            }
            return;
        }
        const std::size_t part = ps.part_of[i];
        for (std::size_t g = 0; g < groups.size(); ++g) {
            bool ok = true;
            double gain = 0.0;
            for (std::size_t k : groups[g]) {
                if (ps.part_of[k] == part || weight(i, k) == excluded_score) {
                    ok = false;
                    break;
                }
                gain += weight(i, k);
            }
            if (!ok)
                continue;
            groups[g].push_back(i);
            self(self, i + 1, total + gain);
            groups[g].pop_back();
        }
        groups.push_back({ i });
        self(self, i + 1, total);
        groups.pop_back();
    };
    recurse(recurse, 0, 0.0);

    FullGraphSolution sol;
    for (const auto& members : best_groups) {
        Group g(topo.num_parts());
        for (std::size_t k : members)
            g[ps.part_of[k]] = k - ps.offset[ps.part_of[k]];
        sol.groups.push_back(std::move(g));
    }
    sol.total = n == 0 ? 0.0 : best;
    return sol;
}

} // namespace pafparse
