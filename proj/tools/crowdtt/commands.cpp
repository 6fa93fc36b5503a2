#include "commands.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "context.hpp"
#include "crowdtt/analysis.hpp"
#include "crowdtt/calibration.hpp"
#include "crowdtt/error.hpp"
#include "crowdtt/frame_file.hpp"
#include "crowdtt/metrics.hpp"
#include "crowdtt/noise.hpp"
#include "crowdtt/render.hpp"
#include "crowdtt/rng.hpp"
#include "crowdtt/scenario_file.hpp"
#include "crowdtt/sfm.hpp"
#include "crowdtt/text_io.hpp"
#include "crowdtt/trajectory.hpp"

namespace fs = std::filesystem;

namespace crowdtt::cli {

namespace {

std::string numbered(const std::string& stem, std::size_t i, const std::string& ext) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%02zu", i);
    return stem + buf + ext;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void write_stamps(std::ostream& out, const Stamps& stamps) {
    for (const auto& [k, v] : stamps) out << "# " << k << '=' << v << '\n';
}

// Frame files start (after comments) with the frame header line.
bool is_frame_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        const auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        return body.rfind("t,agent_id", 0) == 0;
    }
    return false;
}

Clip at_rate(const Clip& clip, double rate) {
    if (std::abs(clip.rate - rate) < 1e-9) return clip;
    return resample(clip, rate);
}

// A clip or frame file as display frames at `rate`.
FrameFile load_display(const std::string& path, const ArenaGeometry& arena, double rate) {
    if (is_frame_file(path)) {
        FrameFile f = load_frames(path);
        if (std::abs(f.rate - rate) > 1e-9)
            throw InvalidArgument(path + " holds frames at " + text::format_double(f.rate) + " Hz, expected " +
                                  text::format_double(rate) + " Hz");
        return f;
    }
    return frames_from_clip(at_rate(load_clip(path, arena), rate));
}

std::vector<std::string> split_list(const std::string& s, char delim) {
    std::vector<std::string> out;
    for (auto part : text::split(s, delim)) out.emplace_back(text::trim(part));
    return out;
}

using Runner = std::function<void(Context&)>;

struct Registry {
    const std::vector<std::string>* argv;

    CLI::App* add(CLI::App& app, const std::string& name, const std::string& help,
                  const std::function<Runner(CLI::App&)>& build) {
        auto* cmd = app.add_subcommand(name, help);
        auto flags = std::make_shared<CommonFlags>();
        add_common_flags(*cmd, *flags);
        Runner run = build(*cmd);
        const auto* args = argv;
        cmd->callback([name, flags, run, args] {
            Context ctx(name, *flags, *args);
            run(ctx);
        });
        return cmd;
    }
};

// ---------------------------------------------------------------------------

Runner ingest_command(CLI::App& cmd) {
    struct Opts {
        std::string input, ingest_config, arena;
        long long max_gap = kDefaultMaxGap;
        CLI::Option *input_opt, *gap_opt, *arena_opt;
    };
    auto o = std::make_shared<Opts>();
    o->input_opt = cmd.add_option("input,--input", o->input, "Raw track file (track_id,frame_index,x,y)");
    cmd.add_option("--ingest-config", o->ingest_config, "Key-value ingest config (else the [ingest] section)")
        ->check(CLI::ExistingFile);
    o->gap_opt = cmd.add_option("--max-gap", o->max_gap, "Longest outage, in frames, filled by interpolation");
    o->arena_opt = cmd.add_option("--arena", o->arena, "Arena file or `forum`");
    return [o](Context& ctx) {
        const std::string input = ctx.get(o->input_opt, o->input, "paths.dataset", "");
        if (input.empty()) throw UsageError("ingest: an input track file is required");
        IngestConfig ic;
        if (!o->ingest_config.empty()) {
            ic = load_ingest_config(o->ingest_config);
        } else {
            const auto& c = ctx.config();
            ic.scale_x = c.get_double_or("ingest.scale_x", ic.scale_x);
            ic.scale_y = c.get_double_or("ingest.scale_y", ic.scale_y);
            ic.native_rate = c.get_double_or("ingest.native_rate", ic.native_rate);
            ic.flip_y = c.get_bool_or("ingest.flip_y", ic.flip_y);
            ic.arena_width = c.get_double_or("ingest.arena_width", ic.arena_width);
            ic.arena_height = c.get_double_or("ingest.arena_height", ic.arena_height);
        }
        const int max_gap = static_cast<int>(ctx.get(o->gap_opt, o->max_gap, "ingest.max_gap", kDefaultMaxGap));
        ArenaGeometry arena = ctx.arena(o->arena_opt, o->arena);

        std::ifstream in(input);
        if (!in) throw Error("cannot open " + input);
        const IngestResult ingested = ingest_tracks(in, ic);

        Clip clip;
        clip.rate = ic.native_rate;
        clip.arena = arena;
        std::size_t filled = 0, splits = 0, dropped = 0;
        double t0 = INFINITY, t1 = -INFINITY;
        for (const auto& t : ingested.tracks) {
            GapRepair r = fill_gaps(t, max_gap);
            filled += r.interpolated_points;
            splits += r.splits;
            dropped += r.dropped_fragments;
            for (auto& piece : r.tracks) {
                t0 = std::min(t0, piece.points.front().t);
                t1 = std::max(t1, piece.points.back().t);
                clip.tracks.push_back(std::move(piece));
            }
        }
        if (clip.tracks.empty()) throw InvalidArgument("no usable tracks in " + input);
        clip.start = t0;
        clip.duration = t1 - t0;

        Stamps stamps = ctx.stamps();
        stamps.emplace_back("rejected_tracks", std::to_string(ingested.rejected.size()));
        stamps.emplace_back("interpolated_points", std::to_string(filled));
        stamps.emplace_back("gap_splits", std::to_string(splits));
        const std::string out = ctx.out("paths.tracks");
        auto f = open_out(out);
        write_clip(f, clip, stamps);
        for (const auto& r : ingested.rejected) std::cerr << "rejected track " << r.id << ": " << r.reason << '\n';
        std::cout << "tracks " << clip.tracks.size() << ", rejected " << ingested.rejected.size()
                  << ", interpolated points " << filled << ", splits " << splits << ", dropped fragments "
                  << dropped << " -> " << out << '\n';
    };
}

Runner extract_command(CLI::App& cmd) {
    struct Opts {
        std::string input, arena;
        double duration = 60.0;
        long long count = 6, min_pop = 0, max_pop = -1, budget = static_cast<long long>(kClipSearchBudget);
        CLI::Option *input_opt, *dur_opt, *count_opt, *min_opt, *max_opt, *budget_opt, *arena_opt;
    };
    auto o = std::make_shared<Opts>();
    o->input_opt = cmd.add_option("input,--input", o->input, "Canonical track file");
    o->dur_opt = cmd.add_option("--duration", o->duration, "Clip length in seconds");
    o->count_opt = cmd.add_option("--count", o->count, "Number of clips");
    o->min_opt = cmd.add_option("--min-population", o->min_pop, "Smallest accepted population");
    o->max_opt = cmd.add_option("--max-population", o->max_pop, "Largest accepted population");
    o->budget_opt = cmd.add_option("--budget", o->budget, "Window draws before giving up");
    o->arena_opt = cmd.add_option("--arena", o->arena, "Arena file or `forum`");
    return [o](Context& ctx) {
        const std::string input = ctx.get(o->input_opt, o->input, "paths.tracks", "");
        if (input.empty()) throw UsageError("extract-clips: an input track file is required");
        const ArenaGeometry arena = ctx.arena(o->arena_opt, o->arena);
        const Clip all = load_clip(input, arena);
        PopulationRange range;
        range.min = static_cast<std::size_t>(ctx.get(o->min_opt, o->min_pop, "extract.min_population", 0LL));
        const long long max_pop = ctx.get(o->max_opt, o->max_pop, "extract.max_population", -1LL);
        if (max_pop >= 0) range.max = static_cast<std::size_t>(max_pop);
        const double duration = ctx.get(o->dur_opt, o->duration, "extract.duration", 60.0);
        const auto count = ctx.get(o->count_opt, o->count, "extract.count", 6LL);
        const auto budget = ctx.get(o->budget_opt, o->budget, "extract.budget",
                                    static_cast<long long>(kClipSearchBudget));
        if (count <= 0 || budget <= 0) throw UsageError("extract-clips: --count and --budget must be positive");
        const std::uint64_t seed = ctx.seed("extract", 0);
        const auto clips = extract_clips(all.tracks, duration, range, static_cast<std::size_t>(count), seed, arena,
                                         static_cast<std::size_t>(budget));
        const fs::path dir = ctx.out("paths.clips");
        fs::create_directories(dir);
        for (std::size_t i = 0; i < clips.size(); ++i) {
            Stamps stamps = ctx.stamps();
            stamps.emplace_back("clip", std::to_string(i + 1));
            const fs::path path = dir / numbered("clip", i + 1, ".csv");
            auto f = open_out(path);
            write_clip(f, clips[i], stamps);
            std::cout << path.string() << " start=" << text::format_double(clips[i].start)
                      << " population=" << clips[i].population() << '\n';
        }
    };
}

Runner calibrate_command(CLI::App& cmd) {
    struct Opts {
        std::vector<std::string> inputs;
        std::string arena;
        double radius = kPortalAssignRadius, reference = kReferenceWalkingSpeed;
        CLI::Option *radius_opt, *ref_opt, *arena_opt;
    };
    auto o = std::make_shared<Opts>();
    cmd.add_option("inputs,--input", o->inputs, "Clip files")->required()->check(CLI::ExistingFile);
    o->radius_opt = cmd.add_option("--radius", o->radius, "Endpoint-to-portal assignment radius (m)");
    o->ref_opt = cmd.add_option("--reference-speed", o->reference, "Reference walking speed for playback (m/s)");
    o->arena_opt = cmd.add_option("--arena", o->arena, "Arena file or `forum`");
    return [o](Context& ctx) {
        const ArenaGeometry arena = ctx.arena(o->arena_opt, o->arena);
        const std::string arena_ref = ctx.get(o->arena_opt, o->arena, "arena.spec", ctx.config().get_or("arena", "forum"));
        const double radius = ctx.get(o->radius_opt, o->radius, "calibrate.radius", kPortalAssignRadius);
        const double reference =
            ctx.get(o->ref_opt, o->reference, "calibrate.reference_speed", kReferenceWalkingSpeed);
        const std::uint64_t seed = ctx.seed("calibrate", 0);
        const sfm::SfmParams params = ctx.sfm_params();
        const fs::path dir = ctx.out("paths.calibration");
        fs::create_directories(dir);

        std::vector<Clip> clips;
        for (const auto& p : o->inputs) clips.push_back(load_clip(p, arena));
        const Stamps stamps = ctx.stamps();
        std::ostringstream summary;
        write_stamps(summary, stamps);

        for (std::size_t i = 0; i < clips.size(); ++i) {
            const Clip& clip = clips[i];
            PortalAssignmentReport report;
            const auto routes = extract_route_choices(clip, arena, &report, radius);
            const auto entries = extract_entry_times(clip, arena, radius);
            const std::string routes_name = numbered("routes", i + 1, ".csv");
            const std::string entries_name = numbered("entries", i + 1, ".csv");
            {
                auto f = open_out(dir / routes_name);
                write_stamps(f, stamps);
                write_routes(f, routes);
            }
            {
                auto f = open_out(dir / entries_name);
                write_stamps(f, stamps);
                write_entries(f, entries);
            }
            ScenarioFile sc;
            sc.arena_ref = arena_ref == "forum" ? arena_ref : fs::absolute(arena_ref).string();
            sc.routes_path = routes_name;
            sc.entries_path = entries_name;
            sc.scenario.arena = arena;
            sc.scenario.params = params;
            sc.scenario.seed = Rng::derive(seed, i + 1).next();
            sc.scenario.duration = clip.duration;
            sc.scenario.output_rate = clip.rate;
            {
                auto f = open_out(dir / numbered("scenario", i + 1, ".txt"));
                write_stamps(f, stamps);
                write_scenario(f, sc);
            }
            const SpeedStats s = speed_stats({clip});
            const PlaybackScale scale = playback_scale(s.mean, reference);
            summary << "clip." << i + 1 << ".path = " << o->inputs[i] << '\n';
            summary << "clip." << i + 1 << ".population = " << clip.population() << '\n';
            summary << "clip." << i + 1 << ".mean_speed = " << text::format_double(s.mean) << '\n';
            summary << "clip." << i + 1 << ".playback = " << text::format_double(scale.factor) << '\n';
            summary << "clip." << i + 1 << ".interior_endpoints = " << report.interior_tracks.size() << '\n';
        }
        const SpeedStats pooled = speed_stats(clips);
        summary << "mean_speed = " << text::format_double(pooled.mean) << '\n';
        summary << "histogram_bin_width = " << text::format_double(pooled.bin_width) << '\n';
        summary << "\nspeed_lo,count\n";
        for (std::size_t k = 0; k < pooled.histogram.size(); ++k)
            summary << text::format_double(static_cast<double>(k) * pooled.bin_width) << ',' << pooled.histogram[k]
                    << '\n';
        auto f = open_out(dir / "calibration.txt");
        f << summary.str();
        std::cout << "mean speed " << text::format_double(pooled.mean) << " m/s over " << clips.size()
                  << " clips -> " << dir.string() << '\n';
    };
}

Runner simulate_command(CLI::App& cmd) {
    struct Opts {
        std::string scenario;
        double duration = 0.0, rate = 0.0;
        long long runs = 1, threads = 1;
        CLI::Option *scenario_opt, *dur_opt, *rate_opt, *runs_opt, *threads_opt;
    };
    auto o = std::make_shared<Opts>();
    o->scenario_opt = cmd.add_option("scenario,--scenario", o->scenario, "Scenario file");
    o->dur_opt = cmd.add_option("--duration", o->duration, "Override the simulated duration (s)");
    o->rate_opt = cmd.add_option("--rate", o->rate, "Override the output sampling rate (Hz)");
    o->runs_opt = cmd.add_option("--runs", o->runs, "Independent runs with derived seeds");
    o->threads_opt = cmd.add_option("--threads", o->threads, "Worker threads for multiple runs");
    return [o](Context& ctx) {
        const std::string path = ctx.get(o->scenario_opt, o->scenario, "simulate.scenario", "");
        if (path.empty()) throw UsageError("simulate: a scenario file is required");
        ScenarioFile sf = load_scenario(path);
        sfm::Scenario base = sf.scenario;
        base.seed = ctx.seed("simulate", base.seed);
        if (o->dur_opt->count()) base.duration = o->duration;
        if (o->rate_opt->count()) base.output_rate = o->rate;
        const auto runs = ctx.get(o->runs_opt, o->runs, "simulate.runs", 1LL);
        const auto threads = ctx.get(o->threads_opt, o->threads, "simulate.threads", 1LL);
        if (runs < 1 || threads < 1) throw UsageError("simulate: --runs and --threads must be positive");

        std::vector<sfm::Scenario> scenarios;
        for (long long r = 0; r < runs; ++r) {
            sfm::Scenario s = base;
            if (runs > 1) s.seed = Rng::derive(base.seed, static_cast<std::uint64_t>(r + 1)).next();
            scenarios.push_back(s);
        }
        const auto outputs = sfm::integrate_batch(scenarios, static_cast<unsigned>(threads));
        const std::string out = ctx.out("paths.simulated");
        for (std::size_t r = 0; r < outputs.size(); ++r) {
            fs::path dest = out;
            if (runs > 1) dest = fs::path(out) / numbered("run", r + 1, ".csv");
            Stamps stamps = ctx.stamps();
            stamps.emplace_back("scenario.seed", std::to_string(scenarios[r].seed));
            stamps.emplace_back("realized_mean_speed", text::format_double(outputs[r].realized_mean_speed));
            stamps.emplace_back("strays", std::to_string(outputs[r].strays));
            stamps.emplace_back("wall_crossings", std::to_string(outputs[r].wall_crossings));
            auto f = open_out(dest);
            write_clip(f, sfm::to_clip(outputs[r], scenarios[r]), stamps);
            std::cout << dest.string() << ": spawned " << outputs[r].spawned << ", exited " << outputs[r].exited
                      << " (" << outputs[r].strays << " via other openings), mean speed " << text::format_double(outputs[r].realized_mean_speed) << " m/s\n";
        }
    };
}

Runner add_noise_command(CLI::App& cmd) {
    struct Opts {
        std::string input, arena;
        double probability = 0.15, max_flick = 0.0, rate = 72.0;
        long long hold = 1;
        CLI::Option *input_opt, *p_opt, *max_opt, *hold_opt, *rate_opt, *arena_opt;
    };
    auto o = std::make_shared<Opts>();
    o->input_opt = cmd.add_option("input,--input", o->input, "Clip or frame file");
    o->p_opt = cmd.add_option("--probability", o->probability, "Flick probability per agent per step");
    o->max_opt = cmd.add_option("--max-flick", o->max_flick, "Largest flick, radians");
    o->hold_opt = cmd.add_option("--hold-frames", o->hold, "Frames sharing one flick draw");
    o->rate_opt = cmd.add_option("--rate", o->rate, "Display rate; clips are resampled to it");
    o->arena_opt = cmd.add_option("--arena", o->arena, "Arena file or `forum`");
    return [o](Context& ctx) {
        const std::string input = ctx.get(o->input_opt, o->input, "noise.input", "");
        if (input.empty()) throw UsageError("add-noise: an input file is required");
        const ArenaGeometry arena = ctx.arena(o->arena_opt, o->arena);
        const double rate = ctx.get(o->rate_opt, o->rate, "render.frame_rate", 72.0);
        NoiseParams np = ctx.noise_params();
        if (o->p_opt->count()) np.flick_probability = o->probability;
        if (o->max_opt->count()) np.max_flick = o->max_flick;
        if (o->hold_opt->count()) np.hold_frames = static_cast<int>(o->hold);
        np.seed = ctx.seed("noise", np.seed);
        FrameFile frames = load_display(input, arena, rate);
        if (frames.source == TrackSource::real)
            std::cerr << "warning: adding display noise to a real clip\n";
        const FlickResult r = apply_flicks(frames.frames, np);
        frames.frames = r.frames;
        frames.stamps = ctx.stamps();
        frames.stamps.emplace_back("flicked", std::to_string(r.flicked));
        frames.stamps.emplace_back("agent_steps", std::to_string(r.agent_steps));
        const std::string out = ctx.out();
        auto f = open_out(out);
        write_frames(f, frames);
        std::cout << "flicked " << r.flicked << " of " << r.agent_steps << " agent-steps -> " << out << '\n';
    };
}

Runner metrics_command(CLI::App& cmd) {
    struct Opts {
        std::string input, arena;
        CLI::Option *input_opt, *arena_opt;
    };
    auto o = std::make_shared<Opts>();
    o->input_opt = cmd.add_option("input,--input", o->input, "Clip or frame file");
    o->arena_opt = cmd.add_option("--arena", o->arena, "Arena file or `forum`");
    return [o](Context& ctx) {
        if (o->input.empty()) throw UsageError("metrics: an input file is required");
        const ArenaGeometry arena = ctx.arena(o->arena_opt, o->arena);
        FrameFile frames;
        if (is_frame_file(o->input))
            frames = load_frames(o->input);
        else
            frames = frames_from_clip(load_clip(o->input, arena));
        const auto m = metrics::frame_metrics(frames.frames, frames.population());
        const fs::path dir = ctx.out();
        for (const auto& [name, series] : {std::pair{"polarization", &m.polarization}, std::pair{"nnd", &m.nnd}}) {
            auto f = open_out(dir / (std::string(name) + ".csv"));
            write_stamps(f, ctx.stamps());
            metrics::write_series(f, *series);
        }
        std::cout << "population " << frames.population() << ", mean polarization "
                  << text::format_double(m.polarization.mean) << ", mean nnd " << text::format_double(m.nnd.mean)
                  << " m\n";
    };
}

Runner sweep_command(CLI::App& cmd) {
    struct Opts {
        std::vector<std::string> clips;
        std::string sizes, arena;
        long long reps = 20;
        CLI::Option *reps_opt, *arena_opt, *sizes_opt;
    };
    auto o = std::make_shared<Opts>();
    cmd.add_option("--clip", o->clips, "label=path, repeatable");
    o->sizes_opt = cmd.add_option("--synthetic", o->sizes, "Comma-separated sizes of uniform random crowds");
    o->reps_opt = cmd.add_option("--reps", o->reps, "Repetitions per synthetic size");
    o->arena_opt = cmd.add_option("--arena", o->arena, "Arena file or `forum`");
    return [o](Context& ctx) {
        const ArenaGeometry arena = ctx.arena(o->arena_opt, o->arena);
        std::vector<metrics::SweepPoint> points;
        const std::string sizes = ctx.get(o->sizes_opt, o->sizes, "sweep.synthetic", "");
        if (!sizes.empty()) {
            std::vector<std::size_t> ns;
            for (const auto& s : split_list(sizes, ',')) {
                long long v = 0;
                if (!text::parse_int(s, v) || v < 2) throw UsageError("sweep: bad size `" + s + "`");
                ns.push_back(static_cast<std::size_t>(v));
            }
            const auto reps = ctx.get(o->reps_opt, o->reps, "sweep.reps", 20LL);
            if (reps < 1) throw UsageError("sweep: --reps must be positive");
            const std::uint64_t seed = ctx.seed("sweep", 0);
            points = metrics::uniform_sweep(ns, arena.width, arena.height, static_cast<std::size_t>(reps), seed);
        }
        std::vector<Clip> clips;
        std::vector<std::string> labels;
        for (const auto& spec : o->clips) {
            const auto eq = spec.find('=');
            if (eq == std::string::npos) throw UsageError("sweep: --clip expects label=path");
            labels.push_back(spec.substr(0, eq));
            clips.push_back(load_clip(spec.substr(eq + 1), arena));
        }
        std::vector<metrics::LabelledClip> lc;
        for (std::size_t i = 0; i < clips.size(); ++i) lc.push_back({labels[i], &clips[i]});
        for (const auto& p : metrics::sweep(lc)) points.push_back(p);
        if (points.empty()) throw UsageError("sweep: give --clip entries or --synthetic sizes");
        std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
            return a.crowd_size != b.crowd_size ? a.crowd_size < b.crowd_size : a.label < b.label;
        });
        std::ostringstream table;
        write_stamps(table, ctx.stamps());
        metrics::write_sweep(table, points);
        if (const auto out = ctx.maybe_out("paths.sweep")) {
            auto f = open_out(*out);
            f << table.str();
            return;
        }
        std::cout << table.str();
    };
}

Runner render_command(CLI::App& cmd) {
    struct Opts {
        std::string input, arena;
        double playback = 1.0, seconds = 0.0;
        long long threads = 1;
        CLI::Option *playback_opt, *seconds_opt, *threads_opt, *arena_opt;
    };
    auto o = std::make_shared<Opts>();
    cmd.add_option("input,--input", o->input, "Clip or frame file")->required();
    o->playback_opt = cmd.add_option("--playback", o->playback, "Seconds of clip per second of video");
    o->seconds_opt = cmd.add_option("--seconds", o->seconds, "Render only this much video");
    o->threads_opt = cmd.add_option("--threads", o->threads, "Worker threads");
    o->arena_opt = cmd.add_option("--arena", o->arena, "Arena file or `forum`");
    return [o](Context& ctx) {
        const ArenaGeometry arena = ctx.arena(o->arena_opt, o->arena);
        const render::RenderStyle style = ctx.render_style();
        const FrameFile frames = load_display(o->input, arena, style.frame_rate);
        const double playback = ctx.get(o->playback_opt, o->playback, "render.playback", 1.0);
        std::optional<double> seconds;
        if (o->seconds_opt->count()) seconds = o->seconds;
        const auto seq = render::render_frames(frames.frames, frames.clip_header(arena), style, playback, seconds);
        const fs::path dir = ctx.out();
        fs::create_directories(dir);
        const auto threads = static_cast<unsigned>(std::max(1LL, ctx.get(o->threads_opt, o->threads, "render.threads", 1LL)));
        std::atomic<std::size_t> next{0}, clamped{0};
        {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < threads; ++t)
                pool.emplace_back([&] {
                    for (std::size_t i; (i = next++) < seq.size();) {
                        render::RenderStats stats;
                        char name[32];
                        std::snprintf(name, sizeof name, "frame_%06zu.png", i);
                        render::write_png((dir / name).string(), seq.image(i, &stats));
                        clamped += stats.clamped_agents;
                    }
                });
        }
        auto f = open_out(dir / "render.txt");
        write_stamps(f, ctx.stamps());
        f << "frames = " << seq.size() << "\nframe_rate = " << text::format_double(style.frame_rate)
          << "\nplayback = " << text::format_double(playback) << '\n';
        if (clamped > 0) std::cerr << "warning: " << clamped << " agent draws clamped to the canvas edge\n";
        std::cout << seq.size() << " frames -> " << dir.string() << '\n';
    };
}

Runner trial_build_command(CLI::App& cmd) {
    struct Opts {
        std::vector<std::string> pairs;
        std::string arena;
        bool noise = true, manifest_only = false, composite = false;
        long long threads = 1;
        CLI::Option *noise_opt, *threads_opt, *arena_opt;
    };
    auto o = std::make_shared<Opts>();
    cmd.add_option("--pair", o->pairs, "real.csv:sim.csv[:real_playback[:sim_playback]], once per pair");
    o->noise_opt = cmd.add_flag("--noise,!--no-noise", o->noise, "Heading flicks on simulated clips");
    cmd.add_flag("--manifest-only", o->manifest_only, "Write manifest, key and pause cards but no frames");
    cmd.add_flag("--composite", o->composite, "Also write side-by-side frames");
    o->threads_opt = cmd.add_option("--threads", o->threads, "Worker threads for frame output");
    o->arena_opt = cmd.add_option("--arena", o->arena, "Arena file or `forum`");
    return [o](Context& ctx) {
        std::vector<std::string> specs = o->pairs;
        if (specs.empty())
            for (int k = 1;; ++k) {
                const std::string key = "trial.pair." + std::to_string(k);
                if (!ctx.config().has(key)) break;
                specs.push_back(ctx.config().get(key));
            }
        if (specs.empty()) throw UsageError("trial-build: give one --pair per comparison");
        const ArenaGeometry arena = ctx.arena(o->arena_opt, o->arena);
        const render::RenderStyle style = ctx.render_style();
        std::vector<render::ClipPair> pairs;
        for (const auto& spec : specs) {
            const auto parts = split_list(spec, ':');
            if (parts.size() < 2 || parts.size() > 4) throw UsageError("trial-build: bad pair `" + spec + "`");
            render::ClipPair p;
            p.real = at_rate(load_clip(parts[0], arena), style.frame_rate);
            p.simulated = at_rate(load_clip(parts[1], arena), style.frame_rate);
            if (parts.size() > 2 && !text::parse_double(parts[2], p.real_playback))
                throw UsageError("trial-build: bad playback in `" + spec + "`");
            if (parts.size() > 3 && !text::parse_double(parts[3], p.simulated_playback))
                throw UsageError("trial-build: bad playback in `" + spec + "`");
            pairs.push_back(std::move(p));
        }
        render::TrialOptions topt;
        topt.pause_seconds = ctx.config().get_double_or("trial.pause_seconds", render::kPauseSeconds);
        topt.segment_seconds = ctx.config().get_double_or("trial.segment_seconds", render::kSegmentSeconds);
        if (ctx.get(o->noise_opt, o->noise, "trial.noise", true)) {
            NoiseParams np = ctx.noise_params();
            np.seed = ctx.config().get_u64_or("noise.seed", 0);
            ctx.note_seed("noise.seed", np.seed);
            topt.simulated_noise = np;
        }
        const std::uint64_t seed = ctx.seed("trial", render::kReferenceKeySeed);
        render::Trial trial = render::compose_trial(pairs, seed, style, topt);
        trial.manifest.stamps = ctx.stamps();
        render::WriteOptions wopt;
        wopt.side_frames = !o->manifest_only;
        wopt.composite = o->composite && !o->manifest_only;
        wopt.threads =
            static_cast<unsigned>(std::max(1LL, ctx.get(o->threads_opt, o->threads, "trial.threads", 1LL)));
        const std::string out = ctx.out("paths.trial");
        render::write_trial(trial, out, wopt);
        std::cout << trial.manifest.pairs.size() << " pairs, "
                  << text::format_double(trial.manifest.total_seconds) << " s -> " << out << '\n';
    };
}

Runner trial_score_command(CLI::App& cmd) {
    struct Opts {
        std::string sheets, key, key_file, comments;
        CLI::Option *sheets_opt, *key_opt;
    };
    auto o = std::make_shared<Opts>();
    o->sheets_opt = cmd.add_option("sheets,--sheets", o->sheets, "Answer sheet file");
    o->key_opt = cmd.add_option("--key", o->key, "Answer key, e.g. AABABB");
    cmd.add_option("--key-file", o->key_file, "answer_key.txt from a trial bundle")->check(CLI::ExistingFile);
    cmd.add_option("--comments", o->comments, "Comments file (participant_id,text)")->check(CLI::ExistingFile);
    return [o](Context& ctx) {
        const std::string sheets = ctx.get(o->sheets_opt, o->sheets, "score.sheets", "");
        if (sheets.empty()) throw UsageError("trial-score: an answer sheet file is required");
        std::string key = ctx.get(o->key_opt, o->key, "score.key", "");
        if (!o->key_file.empty()) key = text::KeyValue::load(o->key_file).get("key");
        if (key.empty()) throw UsageError("trial-score: give --key or --key-file");
        analysis::validate_key(key);
        const auto file = analysis::load_answer_sheets(sheets);
        analysis::Report report = analysis::analyse(file, key);
        if (!o->comments.empty()) {
            std::ifstream in(o->comments);
            report.comments = analysis::read_comments(in).size();
        }
        for (const auto& r : file.rejected)
            std::cerr << "rejected line " << r.line << " (" << r.participant_id << "): " << r.reason << '\n';
        std::ostringstream text_report;
        analysis::write_report(text_report, report, ctx.stamps());
        if (const auto out = ctx.maybe_out("paths.report")) {
            auto f = open_out(*out);
            f << text_report.str();
            std::cout << "mean score " << text::format_double(report.scores.mean) << " over " << report.scores.n
                      << " participants -> " << *out << '\n';
        } else {
            std::cout << text_report.str();
        }
    };
}

}  // namespace

void register_commands(CLI::App& app, const std::vector<std::string>& argv) {
    Registry reg{&argv};
    reg.add(app, "ingest", "Parse raw tracks, repair gaps, write a canonical track file", ingest_command);
    reg.add(app, "extract-clips", "Draw fixed-length clips within a population range", extract_command);
    reg.add(app, "calibrate", "Route, entry and speed statistics plus scenario files", calibrate_command);
    reg.add(app, "simulate", "Run the social-force simulation for a scenario", simulate_command);
    reg.add(app, "add-noise", "Apply heading flicks to display frames", add_noise_command);
    reg.add(app, "metrics", "Per-frame polarization and nearest-neighbour distance", metrics_command);
    reg.add(app, "sweep", "Mean NND and polarization against crowd size", sweep_command);
    reg.add(app, "render", "Rasterize a clip to numbered PNG frames", render_command);
    reg.add(app, "trial-build", "Compose the A/B comparison trial bundle", trial_build_command);
    reg.add(app, "trial-score", "Score answer sheets against the key", trial_score_command);
}

}  // namespace crowdtt::cli
