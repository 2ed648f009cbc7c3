#pragma once

// Assembly of per-limb matchings into persons, and the end-to-end parse.

#include <chrono>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "pafparse/association.hpp"
#include "pafparse/detection.hpp"
#include "pafparse/groundtruth.hpp"
#include "pafparse/matching.hpp"
#include "pafparse/topology.hpp"

namespace pafparse {

struct PersonPose {
    std::vector<std::optional<PartCandidate>> parts; // one slot per topology part
    double score = 0.0;
    std::size_t num_parts = 0;

    friend bool operator==(const PersonPose&, const PersonPose&) = default;
};

struct ParseResult {
    std::vector<PersonPose> persons;
    double total_score = 0.0;                 // sum of accepted connection scores
    std::vector<ConnectionScore> connections; // accepted, ordered by (limb, m)

    friend bool operator==(const ParseResult&, const ParseResult&) = default;
};

struct AssemblyParams {
    std::size_t min_parts = 3;
    double min_score = 0.2; // per present part

    void validate() const
    {
        if (min_parts == 0)
            throw Error(ErrorKind::invalid_argument, "min_parts must be >= 1");
    }
};

namespace detail {
    class DisjointSets {
    public:
        explicit DisjointSets(std::size_t n)
            : parent_(n)
            , rank_(n, 0)
        {
            std::iota(parent_.begin(), parent_.end(), 0);
        }

        std::size_t find(std::size_t x)
        {
            while (parent_[x] != x)
                x = parent_[x] = parent_[parent_[x]];
            return x;
        }

        void unite(std::size_t a, std::size_t b)
        {
            a = find(a);
            b = find(b);
            if (a == b)
                return;
            if (rank_[a] < rank_[b])
                std::swap(a, b);
            parent_[b] = a;
            if (rank_[a] == rank_[b])
                ++rank_[a];
        }

    private:
        std::vector<std::size_t> parent_;
        std::vector<std::uint8_t> rank_;
    };
} // namespace detail

/// Merges connections that share candidates. Persons come out ordered by
/// their first candidate in (part, id) order, which makes the grouping
/// independent of limb processing order.
inline ParseResult assemble(std::span<const MatchResult> matches, const CandidateSet& candidates,
    const Topology& topo, const AssemblyParams& params = {})
{
    params.validate();
    if (topo.kind() != TopologyKind::tree)
        throw Error(ErrorKind::invalid_argument, "assembly requires a tree topology");
    if (matches.size() != topo.num_limbs() || candidates.parts.size() != topo.num_parts())
        throw Error(ErrorKind::dimension_mismatch, "match results or candidates do not match topology");

    std::vector<std::size_t> offset(topo.num_parts() + 1, 0);
    for (std::size_t j = 0; j < topo.num_parts(); ++j)
        offset[j + 1] = offset[j] + candidates.parts[j].size();
    const std::size_t n = offset.back();

    std::vector<ConnectionScore> accepted;
    detail::DisjointSets sets(n);
    for (std::size_t c = 0; c < matches.size(); ++c) {
        const Limb limb = topo.limb(c);
        for (const auto& pair : matches[c].pairs) {
            if (pair.m >= candidates.parts[limb.from].size() || pair.n >= candidates.parts[limb.to].size())
                throw Error(ErrorKind::invalid_argument, "match references unknown candidate");
            sets.unite(offset[limb.from] + pair.m, offset[limb.to] + pair.n);
            accepted.push_back({ c, pair.m, pair.n, pair.score });
        }
    }

    // Component roots in order of first member.
    std::map<std::size_t, std::size_t> slot_of_root;
    std::vector<PersonPose> people;
    for (std::size_t j = 0; j < topo.num_parts(); ++j) {
        for (std::size_t i = 0; i < candidates.parts[j].size(); ++i) {
            const auto& cand = candidates.parts[j][i];
            if (cand.id != i || cand.part != j)
                throw Error(ErrorKind::invalid_argument, "candidate ids must be dense per part");
            const std::size_t root = sets.find(offset[j] + cand.id);
            auto [it, inserted] = slot_of_root.try_emplace(root, people.size());
            if (inserted)
                people.push_back({ std::vector<std::optional<PartCandidate>>(topo.num_parts()), 0.0, 0 });
            PersonPose& person = people[it->second];
            if (person.parts[j])
                throw Error(ErrorKind::internal_consistency,
                    "component holds two candidates of part " + topo.part_names()[j]);
            person.parts[j] = cand;
            person.score += cand.score;
            ++person.num_parts;
        }
    }
    std::vector<std::vector<ConnectionScore>> person_connections(people.size());
    for (const auto& conn : accepted) {
        const std::size_t slot = slot_of_root.at(sets.find(offset[topo.limb(conn.limb).from] + conn.m));
        person_connections[slot].push_back(conn);
        people[slot].score += conn.score;
    }

    ParseResult result;
    for (std::size_t i = 0; i < people.size(); ++i) {
        const auto& person = people[i];
        if (person.num_parts < params.min_parts || person.score / double(person.num_parts) < params.min_score)
            continue;
        result.persons.push_back(person);
        result.connections.insert(
            result.connections.end(), person_connections[i].begin(), person_connections[i].end());
    }
    std::sort(result.connections.begin(), result.connections.end(), [](const auto& a, const auto& b) {
        return a.limb != b.limb ? a.limb < b.limb : a.m < b.m;
    });
    for (const auto& conn : result.connections)
        result.total_score += conn.score;
    return result;
}

// ---------------------------------------------------------------------------
// End-to-end parse

struct ParseParams {
    NmsParams nms;
    IntegralParams integral;
    Solver solver = Solver::hungarian;
    AssemblyParams assembly;
    unsigned threads = 1;
};

/// Wall time per parse stage, milliseconds.
struct ParseTimings {
    double detect_ms = 0.0;
    double score_ms = 0.0;
    double match_ms = 0.0;
    double assemble_ms = 0.0;
};

namespace detail {
    class StageClock {
    public:
        double lap()
        {
            const auto now = std::chrono::steady_clock::now();
            const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
            last_ = now;
            return ms;
        }

    private:
        std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
    };

    inline void check_channels(const FieldStack& stack, const Topology& topo)
    {
        if (stack.maps.size() != topo.num_parts() || stack.fields.size() != topo.num_limbs())
            throw Error(ErrorKind::dimension_mismatch,
                "input has " + std::to_string(stack.maps.size()) + " maps and " + std::to_string(stack.fields.size())
                    + " fields, topology needs " + std::to_string(topo.num_parts()) + " and "
                    + std::to_string(topo.num_limbs()));
    }
} // namespace detail

/// Scores, matches and assembles a given candidate set.
inline ParseResult parse_candidates(const CandidateSet& candidates, std::span<const VectorGrid> fields,
    const Topology& topo, const ParseParams& params = {})
{
    const auto scores = score_connections(fields, candidates, topo, params.integral, params.threads);
    const auto matches = match_all(scores, params.solver, params.threads);
    return assemble(matches, candidates, topo, params.assembly);
}

inline ParseResult parse(
    const FieldStack& stack, const Topology& topo, const ParseParams& params = {}, ParseTimings* timings = nullptr)
{
    detail::check_channels(stack, topo);
    detail::StageClock clock;
    const auto candidates = detect_all(stack.maps, params.nms, params.threads);
    const double t_detect = clock.lap();
    const auto scores = score_connections(stack.fields, candidates, topo, params.integral, params.threads);
    const double t_score = clock.lap();
    const auto matches = match_all(scores, params.solver, params.threads);
    const double t_match = clock.lap();
    auto result = assemble(matches, candidates, topo, params.assembly);
    const double t_assemble = clock.lap();
    if (timings)
        *timings = { t_detect, t_score, t_match, t_assemble };
    return result;
}

/// Baseline parse that associates through midpoint channels instead of fields.
inline ParseResult parse_midpoint(std::span<const ScalarGrid> maps, std::span<const ScalarGrid> midpoint_maps,
    const Topology& topo, MidpointVariant variant, const ParseParams& params = {})
{
    if (maps.size() != topo.num_parts())
        throw Error(ErrorKind::dimension_mismatch, "map channel count does not match topology");
    const auto candidates = detect_all(maps, params.nms, params.threads);
    const auto scores = score_connections_midpoint(midpoint_maps, candidates, topo, variant, params.threads);
    const auto matches = match_all(scores, params.solver, params.threads);
    return assemble(matches, candidates, topo, params.assembly);
}

/// Candidate-id grouping of a parse result, one `Group` per person.
inline std::vector<Group> groups_of(const ParseResult& r)
{
    std::vector<Group> out;
    for (const auto& person : r.persons) {
        Group g(person.parts.size());
        for (std::size_t j = 0; j < person.parts.size(); ++j)
            if (person.parts[j])
                g[j] = person.parts[j]->id;
        out.push_back(std::move(g));
    }
    return out;
}

} // namespace pafparse
