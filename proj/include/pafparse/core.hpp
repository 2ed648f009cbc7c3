#pragma once

// Shared primitives: error type, 2D geometry, dense grids, scenes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace pafparse {

enum class ErrorKind {
    invalid_argument,
    degenerate_segment,
    dimension_mismatch,
    malformed_input,
    truncated_input,
    too_large,
    placement_failure,
    internal_consistency,
    io,
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::degenerate_segment: return "degenerate segment";
    case ErrorKind::dimension_mismatch: return "dimension mismatch";
    case ErrorKind::malformed_input: return "malformed input";
    case ErrorKind::truncated_input: return "truncated input";
    case ErrorKind::too_large: return "instance too large";
    case ErrorKind::placement_failure: return "placement failure";
    case ErrorKind::internal_consistency: return "internal consistency";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what)
        , kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// ---------------------------------------------------------------------------
// Logging. Warnings go to a replaceable sink (stderr by default) so that
// machine-readable output on stdout is never mixed with diagnostics.

using LogSink = std::function<void(std::string_view)>;

namespace detail {
    inline LogSink& log_sink()
    {
        static LogSink sink = [](std::string_view msg) { std::cerr << "[pafparse] " << msg << '\n'; };
        return sink;
    }
    inline std::mutex& log_mutex()
    {
        static std::mutex m;
        return m;
    }
} // namespace detail

inline void set_log_sink(LogSink sink)
{
    std::lock_guard lock(detail::log_mutex());
    detail::log_sink() = sink ? std::move(sink) : [](std::string_view) {};
}

inline void log_warning(std::string_view msg)
{
    std::lock_guard lock(detail::log_mutex());
    detail::log_sink()(msg);
}

// ---------------------------------------------------------------------------
// Geometry

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return { a.x + b.x, a.y + b.y }; }
    friend Point2 operator-(Point2 a, Point2 b) { return { a.x - b.x, a.y - b.y }; }
    friend Point2 operator*(double s, Point2 a) { return { s * a.x, s * a.y }; }
    friend bool operator==(Point2 a, Point2 b) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(b - a); }

/// Rotates `p` counter-clockwise (in a y-up frame) by `angle` radians.
inline Point2 rotate(Point2 p, double angle)
{
    const double c = std::cos(angle), s = std::sin(angle);
    return { c * p.x - s * p.y, s * p.x + c * p.y };
}

/// Field value stored in a vector grid.
struct Vec2f {
    float x = 0.0f;
    float y = 0.0f;

    friend bool operator==(Vec2f a, Vec2f b) = default;
};

/// Oriented limb between two keypoints: unit direction, its normal, and length.
struct LimbSegment {
    Point2 start;
    Point2 end;
    Point2 direction;
    Point2 normal;
    double length = 0.0;
};

inline LimbSegment limb_segment(Point2 a, Point2 b)
{
    const Point2 d = b - a;
    const double len = norm(d);
    if (!(len > 0.0) || !std::isfinite(len))
        throw Error(ErrorKind::degenerate_segment, "limb endpoints coincide");
    const Point2 dir { d.x / len, d.y / len };
    return { a, b, dir, { -dir.y, dir.x }, len };
}

// ---------------------------------------------------------------------------
// Grids. Row-major, pixel (x, y) samples the continuous point (x, y).

template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(int width, int height, T fill = T {})
        : width_(width)
        , height_(height)
    {
        if (width < 0 || height < 0)
            throw Error(ErrorKind::invalid_argument, "negative grid dimensions");
        values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::size_t index(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    T& operator()(int x, int y) noexcept { return values_[index(x, y)]; }
    const T& operator()(int x, int y) const noexcept { return values_[index(x, y)]; }

    T& at(int x, int y)
    {
        if (!contains(x, y))
            throw Error(ErrorKind::invalid_argument, "pixel out of range");
        return (*this)(x, y);
    }
    const T& at(int x, int y) const
    {
        if (!contains(x, y))
            throw Error(ErrorKind::invalid_argument, "pixel out of range");
        return (*this)(x, y);
    }

    /// Value at (x, y), or `T{}` outside the grid.
    T get_or_zero(int x, int y) const noexcept { return contains(x, y) ? (*this)(x, y) : T {}; }

    std::vector<T>& values() noexcept { return values_; }
    const std::vector<T>& values() const noexcept { return values_; }

    bool same_shape(const Grid& other) const noexcept
    {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Grid& a, const Grid& b) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> values_;
};

using ScalarGrid = Grid<float>;
using VectorGrid = Grid<Vec2f>;
using MaskGrid = Grid<std::uint8_t>;

/// Bilinear sample of a grid at a continuous location. Pixels outside the
/// grid read as zero.
inline double sample_bilinear(const ScalarGrid& g, Point2 p)
{
    const double fx = std::floor(p.x), fy = std::floor(p.y);
    const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
    const double ax = p.x - fx, ay = p.y - fy;
    return (1 - ax) * (1 - ay) * g.get_or_zero(x0, y0) + ax * (1 - ay) * g.get_or_zero(x0 + 1, y0)
        + (1 - ax) * ay * g.get_or_zero(x0, y0 + 1) + ax * ay * g.get_or_zero(x0 + 1, y0 + 1);
}

inline Point2 sample_bilinear(const VectorGrid& g, Point2 p)
{
    const double fx = std::floor(p.x), fy = std::floor(p.y);
    const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
    const double ax = p.x - fx, ay = p.y - fy;
    const double w[4] = { (1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay };
    const Vec2f v[4] = { g.get_or_zero(x0, y0), g.get_or_zero(x0 + 1, y0), g.get_or_zero(x0, y0 + 1),
        g.get_or_zero(x0 + 1, y0 + 1) };
    Point2 out;
    for (int i = 0; i < 4; ++i) {
        out.x += w[i] * v[i].x;
        out.y += w[i] * v[i].y;
    }
    return out;
}

inline Point2 sample_nearest(const VectorGrid& g, Point2 p)
{
    const Vec2f v = g.get_or_zero(static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y)));
    return { v.x, v.y };
}

// ---------------------------------------------------------------------------
// Scenes

using Keypoint = std::optional<Point2>;

/// Ground-truth annotation: one list of J optional keypoints per person.
struct Scene {
    int width = 0;
    int height = 0;
    std::vector<std::vector<Keypoint>> persons;

    friend bool operator==(const Scene&, const Scene&) = default;
};

inline bool in_bounds(const Scene& s, Point2 p)
{
    return p.x >= 0.0 && p.y >= 0.0 && p.x < s.width && p.y < s.height;
}

/// Throws unless every person has `num_parts` entries and every present
/// keypoint lies inside the canvas.
inline void validate_scene(const Scene& s, std::size_t num_parts)
{
    if (s.width <= 0 || s.height <= 0)
        throw Error(ErrorKind::invalid_argument, "scene dimensions must be positive");
    for (std::size_t k = 0; k < s.persons.size(); ++k) {
        if (s.persons[k].size() != num_parts)
            throw Error(ErrorKind::dimension_mismatch,
                "person " + std::to_string(k) + " has " + std::to_string(s.persons[k].size())
                    + " parts, topology has " + std::to_string(num_parts));
        for (const auto& kp : s.persons[k])
            if (kp && !in_bounds(s, *kp))
                throw Error(ErrorKind::invalid_argument, "keypoint outside canvas in person " + std::to_string(k));
    }
}

// ---------------------------------------------------------------------------
// Parallelism

/// Worker count from `PAFPARSE_THREADS`, capped to `requested` when nonzero.
inline unsigned resolve_threads(unsigned requested = 0)
{
    unsigned cap = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PAFPARSE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0)
            cap = static_cast<unsigned>(v);
    }
    return requested == 0 ? cap : std::min(requested, cap);
}

/// Runs `fn(i)` for i in [0, n). Each index is handled by exactly one worker,
/// so per-index outputs are deterministic regardless of `threads`.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn)
{
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers)
                    fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    pool.clear();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace pafparse
