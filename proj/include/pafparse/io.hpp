#pragma once

// Serialization: the PAFT binary field format, scene and parse-result text
// formats, and eval report output. See FORMATS.md.

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pafparse/assembly.hpp"
#include "pafparse/core.hpp"
#include "pafparse/eval.hpp"
#include "pafparse/groundtruth.hpp"
#include "pafparse/topology.hpp"

namespace pafparse {

struct FieldFileHeader {
    std::array<char, 4> magic { 'P', 'A', 'F', 'T' };
    std::uint32_t version = 1;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t num_maps = 0;
    std::uint32_t num_fields = 0;
};

inline constexpr std::size_t paft_header_size = 24;
inline constexpr std::uint64_t paft_max_elements = std::uint64_t(1) << 28;

namespace detail {
    inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i)
            out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    inline void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

    class ByteReader {
    public:
        explicit ByteReader(std::span<const std::uint8_t> bytes)
            : bytes_(bytes)
        {
        }

        std::uint32_t u32(const char* what)
        {
            if (bytes_.size() - pos_ < 4)
                throw Error(ErrorKind::truncated_input,
                    std::string("file ends at byte ") + std::to_string(bytes_.size()) + " while reading " + what
                        + " at offset " + std::to_string(pos_));
            std::uint32_t v = 0;
            for (int i = 0; i < 4; ++i)
                v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
            pos_ += 4;
            return v;
        }

        float f32(const char* what)
        {
            const std::size_t at = pos_;
            const float f = std::bit_cast<float>(u32(what));
            if (!std::isfinite(f))
                throw Error(ErrorKind::malformed_input, "non-finite value at byte offset " + std::to_string(at));
            return f;
        }

        std::size_t position() const { return pos_; }
        std::size_t remaining() const { return bytes_.size() - pos_; }

    private:
        std::span<const std::uint8_t> bytes_;
        std::size_t pos_ = 0;
    };

    inline std::string format_fixed(double v, int decimals)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
        return buf;
    }
} // namespace detail

// ---------------------------------------------------------------------------
// PAFT

inline std::vector<std::uint8_t> encode_fields(const FieldStack& stack)
{
    const int w = stack.width(), h = stack.height();
    if (w <= 0 || h <= 0)
        throw Error(ErrorKind::invalid_argument, "field stack has no canvas");
    for (const auto& m : stack.maps)
        if (m.width() != w || m.height() != h)
            throw Error(ErrorKind::dimension_mismatch, "map dimensions differ");
    for (const auto& f : stack.fields)
        if (f.width() != w || f.height() != h)
            throw Error(ErrorKind::dimension_mismatch, "field dimensions differ");
    std::vector<std::uint8_t> out;
    out.reserve(paft_header_size + 4 * std::size_t(w) * h * (stack.maps.size() + 2 * stack.fields.size()));
    for (char ch : { 'P', 'A', 'F', 'T' })
        out.push_back(static_cast<std::uint8_t>(ch));
    detail::put_u32(out, 1);
    detail::put_u32(out, static_cast<std::uint32_t>(w));
    detail::put_u32(out, static_cast<std::uint32_t>(h));
    detail::put_u32(out, static_cast<std::uint32_t>(stack.maps.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(stack.fields.size()));
    for (const auto& m : stack.maps)
        for (float v : m.values())
            detail::put_f32(out, v);
    for (const auto& f : stack.fields) {
        for (const auto& v : f.values())
            detail::put_f32(out, v.x);
        for (const auto& v : f.values())
            detail::put_f32(out, v.y);
    }
    return out;
}

inline FieldFileHeader decode_header(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "PAFT", 4) != 0)
        throw Error(ErrorKind::malformed_input, "bad magic, expected 'PAFT'");
    detail::ByteReader r(bytes.subspan(4));
    FieldFileHeader h;
    h.version = r.u32("version");
    if (h.version != 1)
        throw Error(ErrorKind::malformed_input, "unsupported PAFT version " + std::to_string(h.version));
    h.width = r.u32("width");
    h.height = r.u32("height");
    h.num_maps = r.u32("num_maps");
    h.num_fields = r.u32("num_fields");
    if (h.width == 0 || h.height == 0)
        throw Error(ErrorKind::malformed_input, "PAFT header declares zero width or height");
    if (h.width > 0x7fffffffu || h.height > 0x7fffffffu)
        throw Error(ErrorKind::too_large, "PAFT dimensions overflow");
    const std::uint64_t pixels = std::uint64_t(h.width) * h.height;
    const std::uint64_t planes = std::uint64_t(h.num_maps) + 2 * std::uint64_t(h.num_fields);
    if (pixels > paft_max_elements || (planes > 0 && pixels * planes > paft_max_elements))
        throw Error(ErrorKind::too_large, "PAFT payload exceeds 2^28 elements");
    return h;
}

inline FieldStack decode_fields(std::span<const std::uint8_t> bytes)
{
    const FieldFileHeader h = decode_header(bytes);
    const std::uint64_t pixels = std::uint64_t(h.width) * h.height;
    const std::uint64_t planes = std::uint64_t(h.num_maps) + 2 * std::uint64_t(h.num_fields);
    const std::uint64_t expected = paft_header_size + 4 * pixels * planes;
    if (bytes.size() < expected)
        throw Error(ErrorKind::truncated_input, "PAFT payload truncated at byte offset " + std::to_string(bytes.size())
                + ", expected " + std::to_string(expected) + " bytes");
    if (bytes.size() > expected)
        throw Error(ErrorKind::malformed_input,
            "trailing data after byte offset " + std::to_string(expected) + " in PAFT file");
    detail::ByteReader r(bytes.subspan(paft_header_size));
    const int w = static_cast<int>(h.width), ht = static_cast<int>(h.height);
    FieldStack stack;
    for (std::uint32_t j = 0; j < h.num_maps; ++j) {
        ScalarGrid m(w, ht);
        for (auto& v : m.values())
            v = r.f32("map value");
        stack.maps.push_back(std::move(m));
    }
    for (std::uint32_t c = 0; c < h.num_fields; ++c) {
        VectorGrid f(w, ht);
        for (auto& v : f.values())
            v.x = r.f32("field x");
        for (auto& v : f.values())
            v.y = r.f32("field y");
        stack.fields.push_back(std::move(f));
    }
    return stack;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::io, "cannot open " + path);
    return { std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>() };
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::io, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorKind::io, "write failed for " + path);
}

inline void write_fields(const std::string& path, const FieldStack& stack)
{
    write_file_bytes(path, encode_fields(stack));
}

inline FieldStack read_fields(const std::string& path) { return decode_fields(read_file_bytes(path)); }

// ---------------------------------------------------------------------------
// Scene text format

inline void write_scene(std::ostream& out, const Scene& s)
{
    out << "scene " << s.width << ' ' << s.height << ' ' << s.persons.size() << '\n';
    for (std::size_t k = 0; k < s.persons.size(); ++k) {
        out << "person " << k << '\n';
        for (std::size_t j = 0; j < s.persons[k].size(); ++j) {
            const auto& kp = s.persons[k][j];
            if (kp)
                out << j << ' ' << detail::format_fixed(kp->x, 3) << ' ' << detail::format_fixed(kp->y, 3) << '\n';
            else
                out << j << " -\n";
        }
    }
}

inline std::string scene_to_string(const Scene& s)
{
    std::ostringstream out;
    write_scene(out, s);
    return out.str();
}

/// Reads a scene whose persons each carry `num_parts` part lines.
inline Scene read_scene(std::istream& in, std::size_t num_parts)
{
    std::string line;
    std::size_t lineno = 0;
    if (!detail::next_content_line(in, line, lineno))
        throw Error(ErrorKind::malformed_input, "empty scene file");
    Scene s;
    long long k = -1;
    {
        std::istringstream ss(line);
        std::string kw, extra;
        if (!(ss >> kw >> s.width >> s.height >> k) || kw != "scene" || s.width <= 0 || s.height <= 0 || k < 0
            || (ss >> extra))
            detail::malformed(lineno, "expected 'scene <width> <height> <K>'");
        if (k > 100000)
            detail::malformed(lineno, "person count too large");
    }
    for (long long person = 0; person < k; ++person) {
        if (!detail::next_content_line(in, line, lineno))
            throw Error(ErrorKind::malformed_input, "unexpected end of file, expected person " + std::to_string(person));
        std::istringstream hs(line);
        std::string kw, extra;
        long long idx = -1;
        if (!(hs >> kw >> idx) || kw != "person" || idx != person || (hs >> extra))
            detail::malformed(lineno, "expected 'person " + std::to_string(person) + "'");
        std::vector<Keypoint> kps;
        for (std::size_t j = 0; j < num_parts; ++j) {
            if (!detail::next_content_line(in, line, lineno))
                throw Error(ErrorKind::malformed_input, "unexpected end of file in person " + std::to_string(person));
            std::istringstream ss(line);
            long long part = -1;
            std::string xs;
            if (!(ss >> part) || part != static_cast<long long>(j) || !(ss >> xs))
                detail::malformed(lineno, "expected part " + std::to_string(j) + " (part count mismatch vs topology?)");
            if (xs == "-") {
                if (ss >> extra)
                    detail::malformed(lineno, "trailing content after '-'");
                kps.emplace_back();
                continue;
            }
            Point2 p;
            try {
                std::size_t used = 0;
                p.x = std::stod(xs, &used);
                if (used != xs.size())
                    throw std::invalid_argument("x");
            } catch (const std::exception&) {
                detail::malformed(lineno, "bad x coordinate");
            }
            if (!(ss >> p.y) || (ss >> extra) || !std::isfinite(p.x) || !std::isfinite(p.y))
                detail::malformed(lineno, "expected '<part> <x> <y>' or '<part> -'");
            kps.emplace_back(p);
        }
        s.persons.push_back(std::move(kps));
    }
    if (detail::next_content_line(in, line, lineno))
        detail::malformed(lineno, "unexpected content after last person (part count mismatch vs topology?)");
    validate_scene(s, num_parts);
    return s;
}

inline Scene scene_from_string(const std::string& text, std::size_t num_parts)
{
    std::istringstream in(text);
    return read_scene(in, num_parts);
}

inline void write_scene(const std::string& path, const Scene& s)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::io, "cannot write " + path);
    write_scene(out, s);
}

inline Scene read_scene(const std::string& path, std::size_t num_parts)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::io, "cannot open " + path);
    return read_scene(in, num_parts);
}

// ---------------------------------------------------------------------------
// Parse-result text format

inline void write_parse_result(std::ostream& out, const ParseResult& r)
{
    out << "result " << r.persons.size() << ' ' << detail::format_fixed(r.total_score, 6) << '\n';
    for (const auto& p : r.persons) {
        out << "person " << detail::format_fixed(p.score, 6) << ' ' << p.num_parts << '\n';
        for (std::size_t j = 0; j < p.parts.size(); ++j) {
            const auto& c = p.parts[j];
            if (c)
                out << j << ' ' << detail::format_fixed(c->position.x, 3) << ' '
                    << detail::format_fixed(c->position.y, 3) << ' ' << detail::format_fixed(c->score, 6) << '\n';
            else
                out << j << " - - -\n";
        }
    }
}

inline std::string parse_result_to_string(const ParseResult& r)
{
    std::ostringstream out;
    write_parse_result(out, r);
    return out.str();
}

/// Candidate ids are reassigned densely per part in file order; connections
/// are not stored and come back empty.
inline ParseResult read_parse_result(std::istream& in, std::size_t num_parts)
{
    std::string line;
    std::size_t lineno = 0;
    if (!detail::next_content_line(in, line, lineno))
        throw Error(ErrorKind::malformed_input, "empty parse-result file");
    ParseResult r;
    long long k = -1;
    {
        std::istringstream ss(line);
        std::string kw, extra;
        if (!(ss >> kw >> k >> r.total_score) || kw != "result" || k < 0 || k > 100000 || (ss >> extra))
            detail::malformed(lineno, "expected 'result <K> <total_score>'");
    }
    std::vector<std::size_t> next_id(num_parts, 0);
    for (long long i = 0; i < k; ++i) {
        if (!detail::next_content_line(in, line, lineno))
            throw Error(ErrorKind::malformed_input, "unexpected end of file, expected person");
        PersonPose p;
        std::istringstream hs(line);
        std::string kw, extra;
        long long count = -1;
        if (!(hs >> kw >> p.score >> count) || kw != "person" || count < 0 || (hs >> extra))
            detail::malformed(lineno, "expected 'person <score> <num_parts>'");
        p.parts.resize(num_parts);
        for (std::size_t j = 0; j < num_parts; ++j) {
            if (!detail::next_content_line(in, line, lineno))
                throw Error(ErrorKind::malformed_input, "unexpected end of file in person");
            std::istringstream ss(line);
            long long part = -1;
            std::string a, b, c;
            if (!(ss >> part >> a >> b >> c) || part != static_cast<long long>(j) || (ss >> extra))
                detail::malformed(lineno, "expected '<part> <x> <y> <conf>' for part " + std::to_string(j));
            if (a == "-" && b == "-" && c == "-")
                continue;
            try {
                PartCandidate cand { j, { std::stod(a), std::stod(b) }, std::stod(c), next_id[j]++ };
                if (!std::isfinite(cand.position.x) || !std::isfinite(cand.position.y) || !std::isfinite(cand.score))
                    throw std::invalid_argument("non-finite");
                p.parts[j] = cand;
                ++p.num_parts;
            } catch (const std::exception&) {
                detail::malformed(lineno, "bad keypoint values");
            }
        }
        if (p.num_parts != static_cast<std::size_t>(count))
            detail::malformed(lineno, "person declares " + std::to_string(count) + " parts but lists "
                    + std::to_string(p.num_parts));
        r.persons.push_back(std::move(p));
    }
    if (detail::next_content_line(in, line, lineno))
        detail::malformed(lineno, "unexpected content after last person");
    return r;
}

inline ParseResult parse_result_from_string(const std::string& text, std::size_t num_parts)
{
    std::istringstream in(text);
    return read_parse_result(in, num_parts);
}

inline void write_parse_result(const std::string& path, const ParseResult& r)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::io, "cannot write " + path);
    write_parse_result(out, r);
}

inline ParseResult read_parse_result(const std::string& path, std::size_t num_parts)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::io, "cannot open " + path);
    return read_parse_result(in, num_parts);
}

// ---------------------------------------------------------------------------
// Eval report

/// Machine-readable lines: `part <name> ap <value>` per part, then `map <value>`.
inline void write_eval_lines(std::ostream& out, const EvalReport& r, const Topology& topo)
{
    for (std::size_t j = 0; j < r.per_part_ap.size(); ++j)
        out << "part " << topo.part_names().at(j) << " ap " << detail::format_fixed(r.per_part_ap[j], 6) << '\n';
    out << "map " << detail::format_fixed(r.map, 6) << '\n';
}

inline void write_eval_table(std::ostream& out, const EvalReport& r, const Topology& topo)
{
    std::size_t width = 4;
    for (const auto& n : topo.part_names())
        width = std::max(width, n.size());
    auto row = [&](const std::string& name, double v) {
        out << name << std::string(width - name.size() + 2, ' ') << detail::format_fixed(100.0 * v, 2) << '\n';
    };
    out << "part" << std::string(width - 2, ' ') << "AP(%)\n";
    for (std::size_t j = 0; j < r.per_part_ap.size(); ++j)
        row(topo.part_names().at(j), r.per_part_ap[j]);
    row("mAP", r.map);
}

} // namespace pafparse
