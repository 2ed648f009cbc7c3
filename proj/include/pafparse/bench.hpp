#pragma once

// Runtime-scaling harness for the parse stages.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <vector>

#include "pafparse/assembly.hpp"
#include "pafparse/groundtruth.hpp"
#include "pafparse/io.hpp"
#include "pafparse/synth.hpp"

namespace pafparse {

struct BenchConfig {
    std::vector<int> persons { 2, 4, 6, 8, 10, 12, 14, 16, 18, 20 };
    int trials = 5;
    int warmup = 1;
    /// Each timed trial repeats the association stages until this much wall
    /// time has elapsed, then reports the per-repetition mean.
    double min_trial_ms = 5.0;
    SceneConfig scene { .width = 1280, .height = 960, .min_separation = 42.0 };
    RenderParams render;
    ParseParams parse;

    void validate() const
    {
        if (trials < 5)
            throw Error(ErrorKind::invalid_argument, "benchmark needs at least 5 trials, got " + std::to_string(trials));
        if (persons.empty() || std::any_of(persons.begin(), persons.end(), [](int n) { return n < 1; }))
            throw Error(ErrorKind::invalid_argument, "person sweep must be non-empty and positive");
        if (warmup < 0 || !(min_trial_ms >= 0.0))
            throw Error(ErrorKind::invalid_argument, "bad warmup or trial duration");
    }
};

/// Median timings per person count. `total_parse_ms` covers the multi-person
/// parsing stages (scoring, matching, assembly); detection scans the full
/// canvas regardless of the person count and is reported separately.
struct BenchRow {
    int num_persons = 0;
    double detect_ms = 0.0;
    double score_ms = 0.0;
    double match_ms = 0.0;
    double assemble_ms = 0.0;
    double total_parse_ms = 0.0;
    int trials = 0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    double exponent = 0.0; // slope of log(total_parse_ms) against log(num_persons)
};

inline double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

/// Least-squares slope of log(y) on log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw Error(ErrorKind::invalid_argument, "slope fit needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0) || !(y[i] > 0))
            throw Error(ErrorKind::invalid_argument, "slope fit needs positive values");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0)
        throw Error(ErrorKind::invalid_argument, "slope fit needs distinct x values");
    return (n * sxy - sx * sy) / denom;
}

inline BenchReport run_bench(const BenchConfig& cfg, const Topology& topo)
{
    cfg.validate();
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };
    const auto tmpl = template_for(topo);

    BenchReport report;
    for (int n : cfg.persons) {
        std::vector<double> detect, score, match, asm_ms, total;
        for (int t = -cfg.warmup; t < cfg.trials; ++t) {
            SceneConfig sc = cfg.scene;
            sc.min_persons = sc.max_persons = n;
            sc.seed = cfg.scene.seed + std::uint64_t(n) * 7919u + std::uint64_t(t + cfg.warmup);
            const Scene scene = generate_scene(sc, topo, tmpl);
            const FieldStack stack = render_all(scene, topo, cfg.render, cfg.parse.threads);

            auto t0 = clock::now();
            const auto candidates = detect_all(stack.maps, cfg.parse.nms, cfg.parse.threads);
            const double d_ms = ms_since(t0);

            double s_sum = 0, m_sum = 0, a_sum = 0;
            int reps = 0;
            const auto start = clock::now();
            do {
                t0 = clock::now();
                const auto scores
                    = score_connections(stack.fields, candidates, topo, cfg.parse.integral, cfg.parse.threads);
                s_sum += ms_since(t0);
                t0 = clock::now();
                const auto matches = match_all(scores, cfg.parse.solver, cfg.parse.threads);
                m_sum += ms_since(t0);
                t0 = clock::now();
                const auto result = assemble(matches, candidates, topo, cfg.parse.assembly);
                a_sum += ms_since(t0);
                ++reps;
                if (result.persons.size() > std::size_t(n) * topo.num_parts())
                    throw Error(ErrorKind::internal_consistency, "impossible person count");
            } while (ms_since(start) < cfg.min_trial_ms);
            if (t < 0)
                continue;
            detect.push_back(d_ms);
            score.push_back(s_sum / reps);
            match.push_back(m_sum / reps);
            asm_ms.push_back(a_sum / reps);
            total.push_back((s_sum + m_sum + a_sum) / reps);
        }
        report.rows.push_back(
            { n, median(detect), median(score), median(match), median(asm_ms), median(total), cfg.trials });
    }
    std::vector<double> xs, ys;
    for (const auto& r : report.rows) {
        xs.push_back(r.num_persons);
        ys.push_back(std::max(r.total_parse_ms, 1e-9));
    }
    report.exponent = xs.size() >= 2 ? loglog_slope(xs, ys) : 0.0;
    return report;
}

inline void write_bench_report(std::ostream& out, const BenchReport& r)
{
    out << "persons  detect_ms  score_ms  match_ms  assemble_ms  total_parse_ms  cnn_ms  trials\n";
    for (const auto& row : r.rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%7d  %9.4f  %8.4f  %8.4f  %11.4f  %14.4f  %6s  %6d\n", row.num_persons,
            row.detect_ms, row.score_ms, row.match_ms, row.assemble_ms, row.total_parse_ms, "n/a", row.trials);
        out << buf;
    }
    out << "exponent " << detail::format_fixed(r.exponent, 4) << '\n';
    out << "# cnn_ms: no network in this pipeline, so end-to-end frame rates are not measured\n";
}

} // namespace pafparse
