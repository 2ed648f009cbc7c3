// pafparse: generate synthetic scenes, parse field stacks, compare grouping
// strategies, evaluate predictions and benchmark the parser.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>

#include "pafparse/pafparse.hpp"

namespace fs = std::filesystem;
using namespace pafparse;

namespace {

struct Globals {
    std::string topology = "mpii14";
    double sigma = 7.0;
    double sigma_l = 5.0;
    double nms_threshold = 0.1;
    int samples = 10;
    std::string solver = "hungarian";
    std::size_t min_parts = 3;
    double min_score = 0.2;
    std::uint64_t seed = 0;
    std::string out;
    unsigned threads = 1;

    RenderParams render() const { return { .sigma = sigma, .sigma_l = sigma_l }; }

    ParseParams parse() const
    {
        ParseParams p;
        p.nms.threshold = nms_threshold;
        p.integral.num_samples = samples;
        p.solver = solver == "greedy" ? Solver::greedy : Solver::hungarian;
        p.assembly = { min_parts, min_score };
        p.threads = resolve_threads(threads);
        return p;
    }
};

std::string index_name(const char* prefix, std::size_t i, const char* suffix)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04zu%s", prefix, i, suffix);
    return buf;
}

/// Writes to `path`, or to stdout when it is empty.
template <typename Fn>
void emit(const std::string& path, Fn&& fn)
{
    if (path.empty()) {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::io, "cannot write " + path);
    fn(out);
}

double elapsed_ms(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

/// Scene files of a dataset directory, keyed by their four-digit index.
std::map<std::string, fs::path> dataset_scenes(const std::string& dir)
{
    if (!fs::is_directory(dir))
        throw Error(ErrorKind::io, "not a directory: " + dir);
    static const std::regex name(R"(scene_(\d+)\.txt)");
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string file = entry.path().filename().string();
        if (std::regex_match(file, m, name))
            out.emplace(m[1].str(), entry.path());
    }
    if (out.empty())
        throw Error(ErrorKind::io, "no scene_XXXX.txt files in " + dir);
    return out;
}

fs::path fields_for(const std::string& dir, const std::string& index, bool noisy)
{
    const fs::path clean = fs::path(dir) / ("fields_" + index + ".paft");
    const fs::path perturbed = fs::path(dir) / ("fields_" + index + "_noisy.paft");
    if (noisy && fs::exists(perturbed))
        return perturbed;
    if (noisy)
        log_warning("no noisy fields for scene " + index + ", using clean ones");
    return clean;
}

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
    int persons = 1;
    std::optional<int> max_persons;
    std::size_t scenes = 1;
    int width = 640;
    int height = 480;
    double scale_min = 30.0;
    double scale_max = 40.0;
    double rotation = 0.3;
    std::optional<double> separation;
    double occlusion = 0.0;
    std::optional<double> cluster_radius;
    double noise_map = 0.0;
    double noise_field = 0.0;
    double false_peaks = 0.0;
};

int cmd_gen(const Globals& g, const GenOptions& o)
{
    if (g.out.empty())
        throw Error(ErrorKind::invalid_argument, "gen needs --out <directory>");
    const Topology topo = resolve_topology(g.topology);
    fs::create_directories(g.out);
    const auto tmpl = template_for(topo);

    std::ofstream manifest(fs::path(g.out) / "manifest.txt", std::ios::trunc);
    if (!manifest)
        throw Error(ErrorKind::io, "cannot write manifest in " + g.out);
    const std::string header = "# scene fields noisy_fields persons injected_peaks\n";
    manifest << header;
    std::cout << header;
    for (std::size_t i = 0; i < o.scenes; ++i) {
        SceneConfig cfg;
        cfg.width = o.width;
        cfg.height = o.height;
        cfg.min_persons = o.persons;
        cfg.max_persons = o.max_persons.value_or(o.persons);
        cfg.scale_min = o.scale_min;
        cfg.scale_max = o.scale_max;
        cfg.rotation_range = o.rotation;
        cfg.min_separation = o.separation.value_or(6.0 * g.sigma);
        cfg.occlusion_prob = o.occlusion;
        cfg.cluster_radius = o.cluster_radius;
        cfg.seed = g.seed + i;
        const Scene scene = generate_scene(cfg, topo, tmpl);
        const FieldStack stack = render_all(scene, topo, g.render(), resolve_threads(g.threads));

        const std::string scene_file = index_name("scene", i, ".txt");
        const std::string fields_file = index_name("fields", i, ".paft");
        write_scene((fs::path(g.out) / scene_file).string(), scene);
        write_fields((fs::path(g.out) / fields_file).string(), stack);

        std::string noisy_file = "-";
        std::size_t injected = 0;
        const NoiseConfig noise { .map_noise_std = o.noise_map,
            .field_noise_std = o.noise_field,
            .false_peak_rate = o.false_peaks,
            .peak_sigma = g.sigma,
            .seed = (g.seed + i) ^ 0x9e3779b97f4a7c15ull };
        if (!noise.is_identity()) {
            const auto p = perturb(stack, noise);
            noisy_file = index_name("fields", i, "_noisy.paft");
            write_fields((fs::path(g.out) / noisy_file).string(), p.stack);
            injected = p.injected.size();
        }
        const std::string line = scene_file + ' ' + fields_file + ' ' + noisy_file + ' '
            + std::to_string(scene.persons.size()) + ' ' + std::to_string(injected) + '\n';
        manifest << line;
        std::cout << line;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// parse

/// fields_0003.paft -> result_0003.txt, fields_0003_noisy.paft -> result_0003_noisy.txt
std::string result_name(const fs::path& input)
{
    std::string stem = input.stem().string();
    if (stem.rfind("fields_", 0) == 0)
        stem.erase(0, 7);
    return "result_" + stem + ".txt";
}

int cmd_parse(const Globals& g, const std::vector<std::string>& inputs)
{
    const Topology topo = resolve_topology(g.topology);
    const ParseParams params = g.parse();
    const bool to_dir = inputs.size() > 1 || (!g.out.empty() && fs::is_directory(g.out))
        || (!g.out.empty() && g.out.back() == '/');
    if (inputs.size() > 1 && g.out.empty())
        throw Error(ErrorKind::invalid_argument, "several inputs need --out <directory>");
    if (to_dir)
        fs::create_directories(g.out);
    for (const auto& input : inputs) {
        const FieldStack stack = read_fields(input);
        // A stack without channels carries nothing to parse.
        const ParseResult r = stack.maps.empty() && stack.fields.empty() ? ParseResult {} : parse(stack, topo, params);
        const std::string target = to_dir ? (fs::path(g.out) / result_name(input)).string() : g.out;
        emit(target, [&](std::ostream& out) { write_parse_result(out, r); });
        if (to_dir)
            std::cout << target << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
    std::string gt;
    std::string pred;
    std::string mode = "full";
    double pckh = 0.5;
    bool sweep = false;
    bool noisy = false;
    bool table = false;
};

int cmd_eval(const Globals& g, const EvalOptions& o)
{
    const Topology topo = resolve_topology(g.topology);
    const ParseParams params = g.parse();
    if (o.mode == "full" && o.pred.empty())
        throw Error(ErrorKind::invalid_argument, "--mode full needs --pred <directory>");

    std::vector<Scene> scenes;
    std::vector<ParseResult> preds;
    for (const auto& [index, path] : dataset_scenes(o.gt)) {
        scenes.push_back(read_scene(path.string(), topo.num_parts()));
        const Scene& scene = scenes.back();
        if (o.mode == "full") {
            const fs::path result = fs::path(o.pred) / ("result_" + index + (o.noisy ? "_noisy.txt" : ".txt"));
            preds.push_back(read_parse_result(result.string(), topo.num_parts()));
            continue;
        }
        const FieldStack stack = read_fields(fields_for(o.gt, index, o.noisy).string());
        if (stack.maps.size() != topo.num_parts() || stack.fields.size() != topo.num_limbs())
            throw Error(ErrorKind::dimension_mismatch, "fields of scene " + index + " do not match the topology");
        if (o.mode == "gt-detect")
            preds.push_back(eval_oracle_detection(scene, stack.fields, topo, params));
        else
            preds.push_back(eval_oracle_connection(detect_all(stack.maps, params.nms, params.threads), scene, topo,
                { .pckh_fraction = o.pckh }));
    }

    emit(g.out, [&](std::ostream& out) {
        if (o.sweep) {
            for (int step = 1; step <= 20; ++step) {
                const double f = 0.05 * step;
                const auto r = evaluate(preds, scenes, topo, { .pckh_fraction = f });
                out << "pckh " << detail::format_fixed(f, 2) << " map " << detail::format_fixed(r.map, 6) << '\n';
            }
            return;
        }
        const auto r = evaluate(preds, scenes, topo, { .pckh_fraction = o.pckh });
        if (o.table)
            write_eval_table(out, r, topo);
        else
            write_eval_lines(out, r, topo);
    });
    return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
    std::string dataset;
    double noise_map = 0.0;
    double noise_field = 0.0;
    double false_peaks = 0.0;
};

/// Full-graph groups turned into persons, filtered like assembly does.
ParseResult persons_from_groups(const std::vector<Group>& groups, const CandidateSet& cands,
    const std::vector<std::vector<ConnectionScore>>& scores, const Topology& full, const AssemblyParams& params)
{
    ParseResult r;
    for (const auto& g : groups) {
        PersonPose p { std::vector<std::optional<PartCandidate>>(g.size()), 0.0, 0 };
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (!g[j])
                continue;
            p.parts[j] = cands.parts[j][*g[j]];
            p.score += p.parts[j]->score;
            ++p.num_parts;
        }
        const double links = grouping_objective({ g }, scores, cands, full);
        p.score += links;
        if (p.num_parts < params.min_parts || p.score / double(p.num_parts) < params.min_score)
            continue;
        r.total_score += links;
        r.persons.push_back(std::move(p));
    }
    return r;
}

bool within_limits(const CandidateSet& cands, const FullGraphLimits& limits = {})
{
    if (cands.total() > limits.max_candidates)
        return false;
    for (const auto& p : cands.parts)
        if (p.size() > limits.max_per_part)
            return false;
    return true;
}

int cmd_compare(const Globals& g, const CompareOptions& o)
{
    const Topology tree = resolve_topology(g.topology);
    const Topology full = full_graph_of(tree);
    ParseParams params = g.parse();
    const RenderParams render = g.render();
    using clock = std::chrono::steady_clock;

    struct Row {
        std::string name;
        std::vector<ParseResult> preds;
        std::vector<Scene> scenes;
        double ms = 0.0;
    };
    std::vector<Row> rows { { "full-graph", {}, {}, 0 }, { "tree-hungarian", {}, {}, 0 },
        { "tree-greedy", {}, {}, 0 }, { "one-midpoint", {}, {}, 0 }, { "two-midpoints", {}, {}, 0 } };
    std::size_t total = 0;

    for (const auto& [index, path] : dataset_scenes(o.dataset)) {
        const Scene scene = read_scene(path.string(), tree.num_parts());
        const std::uint64_t seed = (g.seed + std::stoull(index)) ^ 0x9e3779b97f4a7c15ull;
        const NoiseConfig noise { .map_noise_std = o.noise_map,
            .field_noise_std = o.noise_field,
            .false_peak_rate = o.false_peaks,
            .peak_sigma = g.sigma,
            .seed = seed };
        // Same seed, same map channels first: the noisy maps agree between
        // the tree and full-graph renders.
        const FieldStack full_stack = perturb(render_all(scene, full, render, params.threads), noise).stack;
        const FieldStack stack = perturb(render_all(scene, tree, render, params.threads), noise).stack;
        const CandidateSet cands = detect_all(stack.maps, params.nms, params.threads);
        ++total;

        auto t0 = clock::now();
        if (within_limits(cands)) {
            const auto full_scores = score_connections(full_stack.fields, cands, full, params.integral, params.threads);
            const auto sol = solve_full_graph(full_scores, cands, full);
            rows[0].preds.push_back(persons_from_groups(sol.groups, cands, full_scores, full, params.assembly));
            rows[0].scenes.push_back(scene);
            rows[0].ms += elapsed_ms(t0);
        }

        for (std::size_t k : { 1u, 2u }) {
            params.solver = k == 1 ? Solver::hungarian : Solver::greedy;
            t0 = clock::now();
            rows[k].preds.push_back(parse_candidates(cands, stack.fields, tree, params));
            rows[k].ms += elapsed_ms(t0);
            rows[k].scenes.push_back(scene);
        }
        params.solver = g.parse().solver;

        NoiseConfig mid_noise = noise;
        mid_noise.seed = seed + (std::uint64_t(1) << 20);
        for (std::size_t k : { 3u, 4u }) {
            const auto variant = k == 3 ? MidpointVariant::one : MidpointVariant::two;
            const auto mids
                = perturb(FieldStack { render_midpoint_maps(scene, tree, render, variant), {} }, mid_noise).stack.maps;
            t0 = clock::now();
            const auto scores = score_connections_midpoint(mids, cands, tree, variant, params.threads);
            rows[k].preds.push_back(assemble(match_all(scores, params.solver, params.threads), cands, tree,
                params.assembly));
            rows[k].ms += elapsed_ms(t0);
            rows[k].scenes.push_back(scene);
        }
    }

    if (rows[0].preds.size() < total)
        log_warning("full-graph search ran on " + std::to_string(rows[0].preds.size()) + " of "
            + std::to_string(total) + " scenes (limit 12 candidates, 4 per part)");
    emit(g.out, [&](std::ostream& out) {
        for (const auto& row : rows) {
            out << "strategy " << row.name << " scenes " << row.preds.size() << " map ";
            out << (row.preds.empty() ? std::string("n/a")
                                      : detail::format_fixed(evaluate(row.preds, row.scenes, tree).map, 6));
            out << " wall_ms " << detail::format_fixed(row.ms, 3) << '\n';
        }
    });
    return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
    std::vector<int> persons { 2, 4, 6, 8, 10, 12, 14, 16, 18, 20 };
    int trials = 5;
    int warmup = 1;
    int width = 1280;
    int height = 960;
    std::optional<double> separation;
    bool parallel = false;
};

int cmd_bench(const Globals& g, const BenchOptions& o)
{
    const Topology topo = resolve_topology(g.topology);
    BenchConfig cfg;
    cfg.persons = o.persons;
    cfg.trials = o.trials;
    cfg.warmup = o.warmup;
    cfg.scene.width = o.width;
    cfg.scene.height = o.height;
    cfg.scene.min_separation = o.separation.value_or(6.0 * g.sigma);
    cfg.scene.seed = g.seed;
    cfg.render = g.render();
    cfg.parse = g.parse();
    cfg.parse.threads = o.parallel ? resolve_threads(g.threads) : 1;
    const BenchReport report = run_bench(cfg, topo);
    emit(g.out, [&](std::ostream& out) { write_bench_report(out, report); });
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Part affinity field parsing: scene generation, parsing, comparison, evaluation, benchmarks" };
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--topology", g.topology, "preset name (mpii14, coco18) or topology file")->capture_default_str();
    app.add_option("--sigma", g.sigma, "confidence peak spread, pixels")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--sigma-l", g.sigma_l, "limb half-width, pixels")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--nms-threshold", g.nms_threshold, "peak threshold")->capture_default_str()->check(CLI::NonNegativeNumber);
    app.add_option("--samples", g.samples, "line integral samples")->capture_default_str()->check(CLI::Range(2, 100000));
    app.add_option("--solver", g.solver, "per-limb matching")
        ->capture_default_str()
        ->check(CLI::IsMember({ "hungarian", "greedy" }));
    app.add_option("--min-parts", g.min_parts, "smallest person kept")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--min-score", g.min_score, "smallest person score per part")->capture_default_str();
    app.add_option("--seed", g.seed, "base seed")->capture_default_str();
    app.add_option("--out", g.out, "output file or directory (stdout when omitted)");
    app.add_option("--threads", g.threads, "worker threads, 0 for all; PAFPARSE_THREADS caps it")->capture_default_str();

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate scenes and ground-truth field stacks");
    gen_cmd->add_option("--persons", gen.persons, "persons per scene (minimum when --max-persons is set)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    gen_cmd->add_option("--max-persons", gen.max_persons, "upper end of the person count range");
    gen_cmd->add_option("--scenes", gen.scenes, "number of scenes")->capture_default_str();
    gen_cmd->add_option("--width", gen.width)->capture_default_str()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--height", gen.height)->capture_default_str()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--scale-min", gen.scale_min, "torso length range, pixels")->capture_default_str();
    gen_cmd->add_option("--scale-max", gen.scale_max)->capture_default_str();
    gen_cmd->add_option("--rotation", gen.rotation, "largest whole-body rotation, radians")->capture_default_str();
    gen_cmd->add_option("--separation", gen.separation, "keypoint separation between persons (default 6 sigma)");
    gen_cmd->add_option("--occlusion", gen.occlusion, "probability a keypoint is unlabeled")->capture_default_str();
    gen_cmd->add_option("--cluster-radius", gen.cluster_radius, "keep person centres near the canvas centre");
    gen_cmd->add_option("--noise-map", gen.noise_map, "map noise std")->capture_default_str();
    gen_cmd->add_option("--noise-field", gen.noise_field, "field noise std")->capture_default_str();
    gen_cmd->add_option("--false-peaks", gen.false_peaks, "expected spurious peaks per map")->capture_default_str();

    std::vector<std::string> parse_inputs;
    auto* parse_cmd = app.add_subcommand("parse", "parse PAFT field stacks into persons");
    parse_cmd->add_option("inputs", parse_inputs, "PAFT files")->required()->check(CLI::ExistingFile);

    EvalOptions ev;
    auto* eval_cmd = app.add_subcommand("eval", "PCKh mAP of predictions against a dataset");
    eval_cmd->add_option("--gt", ev.gt, "dataset directory written by gen")->required();
    eval_cmd->add_option("--pred", ev.pred, "directory of result_XXXX.txt files (--mode full)");
    eval_cmd->add_option("--mode", ev.mode, "full, gt-detect or gt-connect")
        ->capture_default_str()
        ->check(CLI::IsMember({ "full", "gt-detect", "gt-connect" }));
    eval_cmd->add_option("--pckh", ev.pckh, "PCKh fraction")->capture_default_str()->check(CLI::PositiveNumber);
    eval_cmd->add_flag("--sweep", ev.sweep, "mAP for PCKh fractions 0.05 to 1.00");
    eval_cmd->add_flag("--noisy", ev.noisy, "read the noisy fields, or result_XXXX_noisy.txt in --mode full");
    eval_cmd->add_flag("--table", ev.table, "human-readable table");

    CompareOptions cmp;
    auto* compare_cmd = app.add_subcommand("compare", "grouping strategies and midpoint baselines on a dataset");
    compare_cmd->add_option("dataset", cmp.dataset, "dataset directory written by gen")->required();
    compare_cmd->add_option("--noise-map", cmp.noise_map)->capture_default_str();
    compare_cmd->add_option("--noise-field", cmp.noise_field)->capture_default_str();
    compare_cmd->add_option("--false-peaks", cmp.false_peaks)->capture_default_str();

    BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "parse time against person count");
    bench_cmd->add_option("--persons", bench.persons, "person counts")->capture_default_str()->delimiter(',');
    bench_cmd->add_option("--trials", bench.trials)->capture_default_str();
    bench_cmd->add_option("--warmup", bench.warmup)->capture_default_str();
    bench_cmd->add_option("--width", bench.width)->capture_default_str();
    bench_cmd->add_option("--height", bench.height)->capture_default_str();
    bench_cmd->add_option("--separation", bench.separation, "keypoint separation (default 6 sigma)");
    bench_cmd->add_flag("--parallel", bench.parallel, "use --threads workers inside the timed stages");

    CLI11_PARSE(app, argc, argv);

    set_log_sink([](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; });
    try {
        if (*gen_cmd)
            return cmd_gen(g, gen);
        if (*parse_cmd)
            return cmd_parse(g, parse_inputs);
        if (*eval_cmd)
            return cmd_eval(g, ev);
        if (*compare_cmd)
            return cmd_compare(g, cmp);
        if (*bench_cmd)
            return cmd_bench(g, bench);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
