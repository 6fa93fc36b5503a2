#include "crowdtt/render.hpp"

#include <png.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>

#include "crowdtt/error.hpp"
#include "crowdtt/rng.hpp"
#include "crowdtt/text_io.hpp"

namespace crowdtt::render {

Image::Image(int w, int h, Rgb fill) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw InvalidArgument("image dimensions must be positive");
    pixels.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
    for (std::size_t i = 0; i < pixels.size(); i += 3) std::copy(fill.begin(), fill.end(), pixels.begin() + i);
}

Rgb Image::at(int x, int y) const {
    const std::size_t o = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x) * 3;
    return {pixels[o], pixels[o + 1], pixels[o + 2]};
}

void Image::set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t o = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x) * 3;
    pixels[o] = c[0];
    pixels[o + 1] = c[1];
    pixels[o + 2] = c[2];
}

double RenderStyle::scale_for(const ArenaGeometry& arena) const {
    if (metres_per_pixel > 0.0) return metres_per_pixel;
    const double usable_w = width - 2.0 * margin_px;
    const double usable_h = height - 2.0 * margin_px;
    if (usable_w <= 0.0 || usable_h <= 0.0) throw InvalidArgument("canvas too small for its margin");
    return std::max(arena.width / usable_w, arena.height / usable_h);
}

namespace {

// Arena metres to canvas pixels, arena centred, y up.
struct Projection {
    double mpp;
    double ox;
    double oy;
    int height;

    Vec2 operator()(Vec2 p) const { return {ox + p.x / mpp, height - (oy + p.y / mpp)}; }
};

Projection project_for(const ArenaGeometry& arena, const RenderStyle& style) {
    const double mpp = style.scale_for(arena);
    return {mpp, (style.width - arena.width / mpp) / 2.0, (style.height - arena.height / mpp) / 2.0, style.height};
}

void draw_line(Image& img, Vec2 a, Vec2 b, Rgb c) {
    const double len = std::max(std::abs(b.x - a.x), std::abs(b.y - a.y));
    const int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
    for (int s = 0; s <= steps; ++s) {
        const double u = static_cast<double>(s) / steps;
        img.set(static_cast<int>(std::floor(a.x + (b.x - a.x) * u)),
                static_cast<int>(std::floor(a.y + (b.y - a.y) * u)), c);
    }
}

void fill_circle(Image& img, Vec2 centre, double r, Rgb c) {
    const int x0 = static_cast<int>(std::floor(centre.x - r));
    const int x1 = static_cast<int>(std::ceil(centre.x + r));
    const int y0 = static_cast<int>(std::floor(centre.y - r));
    const int y1 = static_cast<int>(std::ceil(centre.y + r));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = x + 0.5 - centre.x;
            const double dy = y + 0.5 - centre.y;
            if (dx * dx + dy * dy <= r * r) img.set(x, y, c);
        }
}

void fill_rect(Image& img, int x0, int y0, int w, int h, Rgb c) {
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) img.set(x, y, c);
}

}  // namespace

Image render_frame(const Frame& frame, const ArenaGeometry& arena, const RenderStyle& style, RenderStats* stats) {
    Image img(style.width, style.height, style.background);
    const Projection proj = project_for(arena, style);

    const Vec2 corners[4] = {proj({0, 0}), proj({arena.width, 0}), proj({arena.width, arena.height}),
                             proj({0, arena.height})};
    for (int k = 0; k < 4; ++k) draw_line(img, corners[k], corners[(k + 1) % 4], style.boundary);
    for (const auto& ob : arena.obstacles)
        for (const auto& e : ob.edges()) draw_line(img, proj(e.a), proj(e.b), style.boundary);

    for (const auto& agent : frame.agents) {
        Vec2 c = proj(agent.position);
        if (c.x < 0 || c.y < 0 || c.x >= style.width || c.y >= style.height) {
            c.x = std::clamp(c.x, 0.0, style.width - 1.0);
            c.y = std::clamp(c.y, 0.0, style.height - 1.0);
            if (stats) ++stats->clamped_agents;
        }
        fill_circle(img, c, style.agent_radius_px, style.agent);
        const double L = style.arrow_length_px;
        const Vec2 dir{std::cos(agent.heading), -std::sin(agent.heading)};
        const Vec2 tip = c + dir * L;
        draw_line(img, c, tip, style.arrow);
        for (double side : {-1.0, 1.0}) {
            const double a = agent.heading + side * 5.0 * std::numbers::pi / 6.0;
            draw_line(img, tip, tip + Vec2{std::cos(a), -std::sin(a)} * (L / 3.0), style.arrow);
        }
    }
    return img;
}

// ---------------------------------------------------------------------------

FrameSequence::FrameSequence(std::vector<Frame> frames, double start, double source_rate, std::size_t count,
                             double playback, ArenaGeometry arena, RenderStyle style)
    : frames_(std::move(frames)),
      start_(start),
      source_rate_(source_rate),
      count_(count),
      playback_(playback),
      arena_(std::move(arena)),
      style_(std::move(style)) {
    for (std::size_t i = 0; i < frames_.size(); ++i) by_index_[frame_index(frames_[i].t, source_rate_)] = i;
}

const Frame* FrameSequence::source_frame(std::size_t i) const {
    if (i >= count_) throw InvalidArgument("frame " + std::to_string(i) + " out of range");
    const double t = start_ + static_cast<double>(i) * playback_ / style_.frame_rate;
    const auto it = by_index_.find(frame_index(t, source_rate_));
    return it == by_index_.end() ? nullptr : &frames_[it->second];
}

Image FrameSequence::image(std::size_t i, RenderStats* stats) const {
    const Frame* f = source_frame(i);
    static const Frame empty{};
    return render_frame(f ? *f : empty, arena_, style_, stats);
}

FrameSequence render_frames(std::vector<Frame> frames, const Clip& clip, const RenderStyle& style, double playback,
                            std::optional<double> limit_seconds) {
    if (std::abs(clip.rate - style.frame_rate) > 1e-9)
        throw InvalidArgument("clip is at " + text::format_double(clip.rate) + " Hz; resample to " +
                              text::format_double(style.frame_rate) + " Hz before rendering");
    if (!(clip.duration > 0.0)) throw InvalidArgument("cannot render a clip of zero duration");
    if (!(playback > 0.0)) throw InvalidArgument("playback factor must be positive");
    const double available = clip.duration / playback;
    double seconds = available;
    if (limit_seconds) {
        if (*limit_seconds > available + 1e-9)
            throw InvalidArgument("clip holds " + text::format_double(available) + " s of video at playback " +
                                  text::format_double(playback) + ", " + text::format_double(*limit_seconds) +
                                  " s requested");
        seconds = *limit_seconds;
    }
    const auto count = static_cast<std::size_t>(std::llround(seconds * style.frame_rate));
    return FrameSequence(std::move(frames), clip.start, clip.rate, count, playback, clip.arena, style);
}

FrameSequence render_clip(const Clip& clip, const RenderStyle& style, double playback,
                          std::optional<double> limit_seconds) {
    return render_frames(to_frames(clip), clip, style, playback, limit_seconds);
}

Image side_by_side(const Image& left, const Image& right, const RenderStyle& style) {
    if (left.width != right.width || left.height != right.height)
        throw InvalidArgument("side-by-side images differ in size");
    Image out(2 * left.width + style.divider_px, left.height, style.divider);
    const std::size_t row = static_cast<std::size_t>(left.width) * 3;
    const std::size_t out_row = static_cast<std::size_t>(out.width) * 3;
    const std::size_t right_off = static_cast<std::size_t>(left.width + style.divider_px) * 3;
    for (int y = 0; y < left.height; ++y) {
        const auto src = static_cast<std::ptrdiff_t>(y * row);
        const auto dst = static_cast<std::ptrdiff_t>(y * out_row);
        std::copy_n(left.pixels.begin() + src, row, out.pixels.begin() + dst);
        std::copy_n(right.pixels.begin() + src, row, out.pixels.begin() + dst + static_cast<std::ptrdiff_t>(right_off));
    }
    return out;
}

Image pause_card(int pair_number, const RenderStyle& style) {
    Image img(2 * style.width + style.divider_px, style.height, style.card);
    const int size = 16;
    const int gap = 12;
    const int total = pair_number * size + std::max(0, pair_number - 1) * gap;
    const int x0 = (img.width - total) / 2;
    const int y0 = (img.height - size) / 2;
    for (int k = 0; k < pair_number; ++k) fill_rect(img, x0 + k * (size + gap), y0, size, size, style.card_mark);
    return img;
}

// ---------------------------------------------------------------------------

char to_char(Side s) { return s == Side::A ? 'A' : 'B'; }

std::string answer_key_for_seed(std::uint64_t seed, int pairs) {
    Rng rng = Rng::derive(seed, 7);
    std::string key;
    for (int k = 0; k < pairs; ++k) key.push_back(rng.below(2) == 0 ? 'A' : 'B');
    return key;
}

std::size_t Trial::timeline_size() const {
    std::size_t n = 0;
    for (const auto& p : manifest.pairs) n += p.pause_frames + p.segment_frames;
    return n;
}

Image Trial::timeline_image(std::size_t i) const {
    for (std::size_t k = 0; k < manifest.pairs.size(); ++k) {
        const auto& p = manifest.pairs[k];
        if (i < p.pause_frames) return pause_card(p.index, style);
        i -= p.pause_frames;
        if (i < p.segment_frames) return side_by_side(left[k].image(i), right[k].image(i), style);
        i -= p.segment_frames;
    }
    throw InvalidArgument("timeline frame out of range");
}

Trial compose_trial(const std::vector<ClipPair>& pairs, std::uint64_t seed, const RenderStyle& style,
                    const TrialOptions& options) {
    if (pairs.empty()) throw InvalidArgument("a trial needs at least one pair");
    if (!(options.segment_seconds > 0.0) || options.pause_seconds < 0.0)
        throw InvalidArgument("segment must be positive and pause non-negative");
    if (options.simulated_noise) options.simulated_noise->validate();

    Trial trial;
    trial.style = style;
    TrialManifest& m = trial.manifest;
    m.seed = seed;
    m.frame_rate = style.frame_rate;
    m.pause_seconds = options.pause_seconds;
    m.segment_seconds = options.segment_seconds;
    m.answer_key = answer_key_for_seed(seed, static_cast<int>(pairs.size()));

    const auto pause_frames = static_cast<std::size_t>(std::llround(options.pause_seconds * style.frame_rate));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const ClipPair& cp = pairs[k];
        const int index = static_cast<int>(k) + 1;
        const std::size_t pop = cp.real.population();
        if (pop != cp.simulated.population())
            throw InvalidArgument("pair " + std::to_string(index) + ": real clip has " + std::to_string(pop) +
                                  " pedestrians, simulated has " + std::to_string(cp.simulated.population()));

        FrameSequence real = render_clip(cp.real, style, cp.real_playback, options.segment_seconds);
        std::vector<Frame> sim_frames = to_frames(cp.simulated);
        if (options.simulated_noise) {
            NoiseParams np = *options.simulated_noise;
            np.seed = Rng::derive(np.seed, static_cast<std::uint64_t>(index)).next();
            sim_frames = apply_flicks(sim_frames, np).frames;
        }
        FrameSequence sim =
            render_frames(std::move(sim_frames), cp.simulated, style, cp.simulated_playback, options.segment_seconds);

        PairEntry e;
        e.index = index;
        e.real_side = m.answer_key[k] == 'A' ? Side::A : Side::B;
        e.population = pop;
        e.pause_frames = pause_frames;
        e.segment_frames = real.size();
        const std::string dir = "pair" + std::to_string(index);
        e.pause_card = dir + "/pause.png";
        e.left_frames = dir + "/A/frame_%06d.png";
        e.right_frames = dir + "/B/frame_%06d.png";
        m.pairs.push_back(e);

        if (e.real_side == Side::A) {
            trial.left.push_back(std::move(real));
            trial.right.push_back(std::move(sim));
        } else {
            trial.left.push_back(std::move(sim));
            trial.right.push_back(std::move(real));
        }
    }
    m.total_seconds = static_cast<double>(trial.timeline_size()) / style.frame_rate;
    return trial;
}

// ---------------------------------------------------------------------------

void write_manifest(std::ostream& out, const TrialManifest& m) {
    out << "# trial bundle manifest\n";
    for (const auto& [k, v] : m.stamps) out << "# " << k << '=' << v << '\n';
    out << "pairs = " << m.pairs.size() << '\n';
    out << "frame_rate = " << text::format_double(m.frame_rate) << '\n';
    out << "pause_seconds = " << text::format_double(m.pause_seconds) << '\n';
    out << "segment_seconds = " << text::format_double(m.segment_seconds) << '\n';
    out << "total_seconds = " << text::format_double(m.total_seconds) << '\n';
    for (const auto& p : m.pairs) {
        const std::string k = "pair." + std::to_string(p.index) + '.';
        out << k << "population = " << p.population << '\n';
        out << k << "pause_frames = " << p.pause_frames << '\n';
        out << k << "segment_frames = " << p.segment_frames << '\n';
        out << k << "pause_card = " << p.pause_card << '\n';
        out << k << "A = " << p.left_frames << '\n';
        out << k << "B = " << p.right_frames << '\n';
    }
}

void write_answer_key(std::ostream& out, const TrialManifest& m) {
    out << "# restricted: real side per pair\n";
    out << "key = " << m.answer_key << '\n';
    out << "seed = " << m.seed << '\n';
}

TrialManifest read_manifest(std::istream& in) {
    const auto kv = text::KeyValue::parse(in);
    TrialManifest m;
    m.frame_rate = kv.get_double("frame_rate");
    m.pause_seconds = kv.get_double("pause_seconds");
    m.segment_seconds = kv.get_double("segment_seconds");
    m.total_seconds = kv.get_double("total_seconds");
    const long long n = kv.get_int("pairs");
    for (long long i = 1; i <= n; ++i) {
        const std::string k = "pair." + std::to_string(i) + '.';
        PairEntry p;
        p.index = static_cast<int>(i);
        p.population = static_cast<std::size_t>(kv.get_int(k + "population"));
        p.pause_frames = static_cast<std::size_t>(kv.get_int(k + "pause_frames"));
        p.segment_frames = static_cast<std::size_t>(kv.get_int(k + "segment_frames"));
        p.pause_card = kv.get(k + "pause_card");
        p.left_frames = kv.get(k + "A");
        p.right_frames = kv.get(k + "B");
        m.pairs.push_back(p);
    }
    return m;
}

namespace {

std::string frame_path(const std::string& pattern, std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", i);
    const auto pos = pattern.find("%06d");
    return pattern.substr(0, pos) + buf + pattern.substr(pos + 4);
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
    threads = std::max(1u, threads);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next++) < n;) fn(i);
    };
    if (threads == 1) {
        work();
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
}

}  // namespace

void write_trial(const Trial& trial, const std::string& directory, const WriteOptions& options) {
    namespace fs = std::filesystem;
    const fs::path root(directory);
    fs::create_directories(root);
    {
        std::ofstream out(root / "manifest.txt");
        write_manifest(out, trial.manifest);
        if (!out) throw Error("cannot write " + (root / "manifest.txt").string());
    }
    {
        std::ofstream out(root / "answer_key.txt");
        write_answer_key(out, trial.manifest);
        if (!out) throw Error("cannot write " + (root / "answer_key.txt").string());
    }
    for (std::size_t k = 0; k < trial.manifest.pairs.size(); ++k) {
        const PairEntry& p = trial.manifest.pairs[k];
        fs::create_directories((root / p.pause_card).parent_path());
        write_png((root / p.pause_card).string(), pause_card(p.index, trial.style));
        if (options.side_frames) {
            fs::create_directories((root / p.left_frames).parent_path());
            fs::create_directories((root / p.right_frames).parent_path());
            parallel_for(p.segment_frames, options.threads, [&](std::size_t i) {
                write_png((root / frame_path(p.left_frames, i)).string(), trial.left[k].image(i));
                write_png((root / frame_path(p.right_frames, i)).string(), trial.right[k].image(i));
            });
        }
        if (options.composite) {
            const fs::path dir = root / ("pair" + std::to_string(p.index)) / "AB";
            fs::create_directories(dir);
            parallel_for(p.segment_frames, options.threads, [&](std::size_t i) {
                const Image img = side_by_side(trial.left[k].image(i), trial.right[k].image(i), trial.style);
                write_png((dir / frame_path("frame_%06d.png", i)).string(), img);
            });
        }
    }
}

void write_png(const std::string& path, const Image& image) {
    png_image desc{};
    desc.version = PNG_IMAGE_VERSION;
    desc.width = static_cast<png_uint_32>(image.width);
    desc.height = static_cast<png_uint_32>(image.height);
    desc.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&desc, path.c_str(), 0, image.pixels.data(), 0, nullptr))
        throw Error("cannot write " + path + ": " + desc.message);
}

Image read_png(const std::string& path) {
    png_image desc{};
    desc.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&desc, path.c_str())) throw Error("cannot read " + path + ": " + desc.message);
    desc.format = PNG_FORMAT_RGB;
    Image img(static_cast<int>(desc.width), static_cast<int>(desc.height), Rgb{0, 0, 0});
    if (!png_image_finish_read(&desc, nullptr, img.pixels.data(), 0, nullptr)) {
        png_image_free(&desc);
        throw Error("cannot decode " + path + ": " + desc.message);
    }
    return img;
}

}  // namespace crowdtt::render
