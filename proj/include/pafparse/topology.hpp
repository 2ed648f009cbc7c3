#pragma once

// Skeleton topologies: named parts, ordered limbs, and the plain-text
// topology file format.

#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pafparse/core.hpp"
#include "pafparse/preset_data.hpp"

namespace pafparse {

enum class TopologyKind { tree, full_graph };

struct Limb {
    std::size_t from = 0; // j1
    std::size_t to = 0;   // j2

    friend bool operator==(const Limb&, const Limb&) = default;
};

class Topology {
public:
    Topology() = default;

    /// Validates the edge set and infers its kind. A limb set that is neither a
    /// spanning tree nor the complete graph is rejected.
    Topology(std::vector<std::string> part_names, std::vector<Limb> limbs,
        std::optional<std::pair<std::size_t, std::size_t>> reference = std::nullopt,
        std::optional<TopologyKind> kind = std::nullopt)
        : part_names_(std::move(part_names))
        , limbs_(std::move(limbs))
    {
        const std::size_t j = part_names_.size();
        if (j == 0)
            throw Error(ErrorKind::invalid_argument, "topology has no parts");
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const auto& l : limbs_) {
            if (l.from >= j || l.to >= j)
                throw Error(ErrorKind::invalid_argument, "limb references unknown part");
            if (l.from == l.to)
                throw Error(ErrorKind::invalid_argument, "limb connects a part to itself");
            if (!seen.insert(std::minmax(l.from, l.to)).second)
                throw Error(ErrorKind::invalid_argument, "duplicate limb");
        }
        // With J = 2 a single limb is both; the hint disambiguates.
        const bool is_tree = limbs_.size() + 1 == j && connected();
        const bool is_full = limbs_.size() == j * (j - 1) / 2;
        if (kind == TopologyKind::full_graph && is_full)
            kind_ = TopologyKind::full_graph;
        else if (kind == TopologyKind::tree && !is_tree)
            throw Error(ErrorKind::invalid_argument, "limbs do not form a spanning tree");
        else if (kind == TopologyKind::full_graph && !is_full)
            throw Error(ErrorKind::invalid_argument, "limbs do not form a complete graph");
        else if (is_tree)
            kind_ = TopologyKind::tree;
        else if (is_full)
            kind_ = TopologyKind::full_graph;
        else
            throw Error(ErrorKind::invalid_argument, "limbs form neither a spanning tree nor a complete graph");

        if (reference) {
            if (reference->first >= j || reference->second >= j || reference->first == reference->second)
                throw Error(ErrorKind::invalid_argument, "bad reference part pair");
            reference_ = *reference;
        } else if (!limbs_.empty()) {
            reference_ = { limbs_.front().from, limbs_.front().to };
        }
    }

    std::size_t num_parts() const noexcept { return part_names_.size(); }
    std::size_t num_limbs() const noexcept { return limbs_.size(); }
    TopologyKind kind() const noexcept { return kind_; }
    const std::vector<std::string>& part_names() const noexcept { return part_names_; }
    const std::vector<Limb>& limbs() const noexcept { return limbs_; }
    const Limb& limb(std::size_t c) const { return limbs_.at(c); }

    /// Part pair whose length scales the PCKh threshold.
    std::pair<std::size_t, std::size_t> reference() const noexcept { return reference_; }

    std::optional<std::size_t> part_index(std::string_view name) const
    {
        for (std::size_t i = 0; i < part_names_.size(); ++i)
            if (part_names_[i] == name)
                return i;
        return std::nullopt;
    }

    /// Index of the limb joining `a` and `b` in either orientation.
    std::optional<std::size_t> find_limb(std::size_t a, std::size_t b) const
    {
        for (std::size_t c = 0; c < limbs_.size(); ++c)
            if ((limbs_[c].from == a && limbs_[c].to == b) || (limbs_[c].from == b && limbs_[c].to == a))
                return c;
        return std::nullopt;
    }

    /// True when the parts in `present` induce a connected subgraph.
    bool connected_subset(const std::vector<bool>& present) const
    {
        std::vector<std::size_t> parent(num_parts());
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t x) {
            while (parent[x] != x)
                x = parent[x] = parent[parent[x]];
            return x;
        };
        for (const auto& l : limbs_)
            if (present[l.from] && present[l.to])
                parent[find(l.from)] = find(l.to);
        std::optional<std::size_t> root;
        for (std::size_t p = 0; p < num_parts(); ++p) {
            if (!present[p])
                continue;
            if (!root)
                root = find(p);
            else if (find(p) != *root)
                return false;
        }
        return true;
    }

    friend bool operator==(const Topology&, const Topology&) = default;

private:
    bool connected() const { return connected_subset(std::vector<bool>(num_parts(), true)); }

    std::vector<std::string> part_names_;
    std::vector<Limb> limbs_;
    TopologyKind kind_ = TopologyKind::tree;
    std::pair<std::size_t, std::size_t> reference_ { 0, 0 };
};

/// Complete graph over the parts of a tree topology, limbs ordered (i, j) with i < j.
inline Topology full_graph_of(const Topology& t)
{
    if (t.kind() != TopologyKind::tree)
        throw Error(ErrorKind::invalid_argument, "full_graph_of expects a tree topology");
    std::vector<Limb> limbs;
    for (std::size_t i = 0; i < t.num_parts(); ++i)
        for (std::size_t j = i + 1; j < t.num_parts(); ++j)
            limbs.push_back({ i, j });
    return Topology(t.part_names(), std::move(limbs), t.reference(), TopologyKind::full_graph);
}

namespace detail {
    /// Next non-empty, non-comment line; tracks line numbers for diagnostics.
    inline bool next_content_line(std::istream& in, std::string& line, std::size_t& lineno)
    {
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            const auto first = line.find_first_not_of(" \t");
            if (first == std::string::npos || line[first] == '#')
                continue;
            line = line.substr(first);
            const auto last = line.find_last_not_of(" \t");
            line.resize(last + 1);
            return true;
        }
        return false;
    }

    [[noreturn]] inline void malformed(std::size_t lineno, const std::string& what)
    {
        throw Error(ErrorKind::malformed_input, "line " + std::to_string(lineno) + ": " + what);
    }

    inline std::size_t parse_count(const std::string& line, std::string_view keyword, std::size_t lineno)
    {
        std::istringstream ss(line);
        std::string kw;
        long long n = -1;
        std::string extra;
        if (!(ss >> kw >> n) || kw != keyword || n < 0 || (ss >> extra))
            malformed(lineno, "expected '" + std::string(keyword) + " <count>'");
        return static_cast<std::size_t>(n);
    }
} // namespace detail

inline Topology parse_topology(std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    if (!detail::next_content_line(in, line, lineno))
        throw Error(ErrorKind::malformed_input, "empty topology file");
    const std::size_t num_parts = detail::parse_count(line, "parts", lineno);
    if (num_parts > 4096)
        detail::malformed(lineno, "too many parts");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < num_parts; ++i) {
        if (!detail::next_content_line(in, line, lineno))
            throw Error(ErrorKind::malformed_input, "unexpected end of file in part list");
        if (line.find_first_of(" \t") != std::string::npos)
            detail::malformed(lineno, "part names may not contain whitespace");
        names.push_back(line);
    }
    if (!detail::next_content_line(in, line, lineno))
        throw Error(ErrorKind::malformed_input, "missing limbs section");
    const std::size_t num_limbs = detail::parse_count(line, "limbs", lineno);
    if (num_limbs > num_parts * num_parts)
        detail::malformed(lineno, "too many limbs");
    std::vector<Limb> limbs;
    for (std::size_t i = 0; i < num_limbs; ++i) {
        if (!detail::next_content_line(in, line, lineno))
            throw Error(ErrorKind::malformed_input, "unexpected end of file in limb list");
        std::istringstream ss(line);
        long long a = -1, b = -1;
        std::string extra;
        if (!(ss >> a >> b) || a < 0 || b < 0 || (ss >> extra))
            detail::malformed(lineno, "expected '<j1> <j2>'");
        limbs.push_back({ static_cast<std::size_t>(a), static_cast<std::size_t>(b) });
    }
    std::optional<std::pair<std::size_t, std::size_t>> reference;
    if (detail::next_content_line(in, line, lineno)) {
        std::istringstream ss(line);
        std::string kw, extra;
        long long a = -1, b = -1;
        if (!(ss >> kw >> a >> b) || kw != "reference" || a < 0 || b < 0 || (ss >> extra))
            detail::malformed(lineno, "expected 'reference <j1> <j2>' or end of file");
        reference = std::pair { static_cast<std::size_t>(a), static_cast<std::size_t>(b) };
        if (detail::next_content_line(in, line, lineno))
            detail::malformed(lineno, "trailing content");
    }
    return Topology(std::move(names), std::move(limbs), reference);
}

inline Topology parse_topology(std::string_view text)
{
    std::istringstream in { std::string(text) };
    return parse_topology(in);
}

inline Topology load_topology(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::io, "cannot open topology file " + path);
    return parse_topology(in);
}

inline void write_topology(std::ostream& out, const Topology& t)
{
    out << "parts " << t.num_parts() << '\n';
    for (const auto& n : t.part_names())
        out << n << '\n';
    out << "limbs " << t.num_limbs() << '\n';
    for (const auto& l : t.limbs())
        out << l.from << ' ' << l.to << '\n';
    out << "reference " << t.reference().first << ' ' << t.reference().second << '\n';
}

enum class Preset { mpii14, coco18 };

inline std::optional<Preset> preset_from_name(std::string_view name)
{
    if (name == "mpii14")
        return Preset::mpii14;
    if (name == "coco18")
        return Preset::coco18;
    return std::nullopt;
}

inline Topology topology_preset(Preset p)
{
    switch (p) {
    case Preset::mpii14: return parse_topology(presets::mpii14_topology);
    case Preset::coco18: return parse_topology(presets::coco18_topology);
    }
    throw Error(ErrorKind::invalid_argument, "unknown topology preset");
}

inline Topology topology_preset(std::string_view name)
{
    const auto p = preset_from_name(name);
    if (!p)
        throw Error(ErrorKind::invalid_argument, "unknown topology preset '" + std::string(name) + "'");
    return topology_preset(*p);
}

/// Preset name or path to a topology file.
inline Topology resolve_topology(const std::string& preset_or_path)
{
    if (preset_from_name(preset_or_path))
        return topology_preset(preset_or_path);
    return load_topology(preset_or_path);
}

} // namespace pafparse
