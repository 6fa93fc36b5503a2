#include "crowdtt/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <unordered_map>

#include "crowdtt/error.hpp"
#include "crowdtt/rng.hpp"
#include "crowdtt/text_io.hpp"

namespace crowdtt {

const char* to_string(TrackSource s) { return s == TrackSource::real ? "real" : "simulated"; }

TrackSource parse_track_source(const std::string& s) {
    if (s == "real") return TrackSource::real;
    if (s == "simulated") return TrackSource::simulated;
    throw InvalidArgument("unknown track source `" + s + "`");
}

std::size_t Clip::population() const {
    std::set<std::string> ids;
    for (const auto& t : tracks) ids.insert(t.id);
    return ids.size();
}

std::size_t Clip::sample_count() const {
    std::size_t n = 0;
    for (const auto& t : tracks) n += t.points.size();
    return n;
}

double wrap_angle(double a) {
    constexpr double pi = std::numbers::pi;
    if (a >= -pi && a < pi) return a;
    double w = std::fmod(a + pi, 2.0 * pi);
    if (w < 0.0) w += 2.0 * pi;
    w -= pi;
    return w >= pi ? -pi : w;
}

long long frame_index(double t, double rate) { return std::llround(t * rate); }

// ---------------------------------------------------------------------------
// Row reader shared by the ingest and clip formats

namespace {

constexpr std::string_view kTrackHeader = "track_id,frame_index,x,y";

struct RawRow {
    std::string id;
    long long frame = 0;
    double x = 0.0;
    double y = 0.0;
    std::size_t line = 0;
};

struct RawTable {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<RawRow> rows;
};

RawTable read_rows(std::istream& in) {
    RawTable table;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty()) continue;
        if (body.front() == '#') {
            const auto rest = text::trim(body.substr(1));
            const auto eq = rest.find('=');
            if (eq != std::string_view::npos)
                table.meta.emplace_back(std::string(text::trim(rest.substr(0, eq))),
                                        std::string(text::trim(rest.substr(eq + 1))));
            continue;
        }
        if (!header_seen) {
            std::string compact;
            for (char c : body)
                if (c != ' ' && c != '\t') compact.push_back(c);
            if (compact != kTrackHeader) throw ParseError(lineno, "expected header `track_id,frame_index,x,y`");
            header_seen = true;
            continue;
        }
        const auto fields = text::split(body, ',');
        if (fields.size() != 4) throw ParseError(lineno, "expected 4 fields, got " + std::to_string(fields.size()));
        RawRow row;
        row.line = lineno;
        row.id = std::string(text::trim(fields[0]));
        if (row.id.empty()) throw ParseError(lineno, "empty track id");
        if (!text::parse_int(fields[1], row.frame) || row.frame < 0)
            throw ParseError(lineno, "frame_index must be a non-negative integer");
        if (!text::parse_double(fields[2], row.x) || !text::parse_double(fields[3], row.y))
            throw ParseError(lineno, "x and y must be finite numbers");
        table.rows.push_back(std::move(row));
    }
    if (!header_seen && !table.rows.empty()) throw ParseError(lineno, "missing header line");
    return table;
}

// Groups rows by id, in order of first appearance.
std::vector<std::pair<std::string, std::vector<const RawRow*>>> group_rows(const RawTable& table) {
    std::vector<std::pair<std::string, std::vector<const RawRow*>>> groups;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& row : table.rows) {
        auto [it, inserted] = index.emplace(row.id, groups.size());
        if (inserted) groups.emplace_back(row.id, std::vector<const RawRow*>{});
        groups[it->second].second.push_back(&row);
    }
    return groups;
}

}  // namespace

IngestConfig parse_ingest_config(std::istream& in) {
    const auto kv = text::KeyValue::parse(in);
    IngestConfig c;
    c.scale_x = kv.get_double_or("scale_x", c.scale_x);
    c.scale_y = kv.get_double_or("scale_y", c.scale_y);
    c.native_rate = kv.get_double_or("native_rate", c.native_rate);
    c.flip_y = kv.get_bool_or("flip_y", c.flip_y);
    c.arena_width = kv.get_double_or("arena_width", c.arena_width);
    c.arena_height = kv.get_double_or("arena_height", c.arena_height);
    if (!(c.scale_x > 0) || !(c.scale_y > 0)) throw InvalidArgument("scale_x and scale_y must be positive");
    if (!(c.native_rate > 0)) throw InvalidArgument("native_rate must be positive");
    return c;
}

IngestConfig load_ingest_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open ingest config " + path);
    return parse_ingest_config(in);
}

IngestResult ingest_tracks(std::istream& raw, const IngestConfig& config) {
    const RawTable table = read_rows(raw);
    IngestResult result;
    ArenaGeometry bounds;
    bounds.width = config.arena_width;
    bounds.height = config.arena_height;

    for (const auto& [id, rows] : group_rows(table)) {
        Track track;
        track.id = id;
        track.native_rate = config.native_rate;
        std::string reason;
        for (const RawRow* row : rows) {
            TrackPoint p;
            p.t = static_cast<double>(row->frame) / config.native_rate;
            p.x = row->x * config.scale_x;
            p.y = row->y * config.scale_y;
            if (config.flip_y) p.y = config.arena_height - p.y;
            if (!track.points.empty() && !(p.t > track.points.back().t)) {
                reason = "time not strictly increasing at line " + std::to_string(row->line);
                break;
            }
            if (!bounds.in_bounds(p.position())) {
                reason = "point outside arena at line " + std::to_string(row->line);
                break;
            }
            track.points.push_back(p);
        }
        if (reason.empty() && track.points.size() < 2) reason = "fewer than two points";
        if (reason.empty())
            result.tracks.push_back(std::move(track));
        else
            result.rejected.push_back({id, reason});
    }
    return result;
}

// ---------------------------------------------------------------------------

GapRepair fill_gaps(const Track& track, int max_gap) {
    GapRepair out;
    const double rate = track.native_rate;
    std::vector<Track> pieces;
    Track current = track;
    current.points.clear();

    auto flush = [&](Track&& piece) {
        if (piece.points.size() >= 2)
            pieces.push_back(std::move(piece));
        else if (!piece.points.empty())
            ++out.dropped_fragments;
    };

    for (std::size_t i = 0; i < track.points.size(); ++i) {
        const TrackPoint& p = track.points[i];
        if (current.points.empty()) {
            current.points.push_back(p);
            continue;
        }
        const TrackPoint& prev = current.points.back();
        const long long i0 = frame_index(prev.t, rate);
        const long long steps = frame_index(p.t, rate) - i0;
        const long long missing = steps - 1;
        if (missing > max_gap) {
            ++out.splits;
            Track next = track;
            next.points.clear();
            flush(std::move(current));
            current = std::move(next);
            current.points.push_back(p);
            continue;
        }
        for (long long k = 1; k < steps; ++k) {
            const double u = static_cast<double>(k) / static_cast<double>(steps);
            TrackPoint q;
            q.t = static_cast<double>(i0 + k) / rate;
            q.x = prev.x + (p.x - prev.x) * u;
            q.y = prev.y + (p.y - prev.y) * u;
            current.points.push_back(q);
            ++out.interpolated_points;
        }
        current.points.push_back(p);
    }
    flush(std::move(current));

    if (pieces.size() > 1)
        for (std::size_t k = 0; k < pieces.size(); ++k) pieces[k].id = track.id + "~" + std::to_string(k + 1);
    out.tracks = std::move(pieces);
    return out;
}

Clip resample(const Clip& clip, double target_rate) {
    if (!(target_rate > 0) || !(clip.rate > 0)) throw InvalidArgument("rates must be positive");
    const double ratio = target_rate / clip.rate;
    const long long factor = std::llround(ratio);
    if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9)
        throw InvalidArgument("target rate " + text::format_double(target_rate) +
                              " Hz is not an integer multiple of " + text::format_double(clip.rate) + " Hz");
    if (factor == 1) return clip;

    Clip out = clip;
    out.rate = target_rate;
    for (auto& track : out.tracks) {
        track.native_rate = target_rate;
        const auto& src = track.points;
        std::vector<TrackPoint> dense;
        dense.reserve(src.empty() ? 0 : (src.size() - 1) * factor + 1);
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (i > 0) {
                const TrackPoint& a = src[i - 1];
                const TrackPoint& b = src[i];
                const long long ia = frame_index(a.t, clip.rate) * factor;
                const long long n = (frame_index(b.t, clip.rate) - frame_index(a.t, clip.rate)) * factor;
                for (long long k = 1; k < n; ++k) {
                    const double u = static_cast<double>(k) / static_cast<double>(n);
                    dense.push_back({static_cast<double>(ia + k) / target_rate, a.x + (b.x - a.x) * u,
                                     a.y + (b.y - a.y) * u});
                }
            }
            dense.push_back(src[i]);
        }
        track.points = std::move(dense);
    }
    return out;
}

// ---------------------------------------------------------------------------

Clip cut_window(const std::vector<Track>& tracks, double start, double duration, double rate,
                const ArenaGeometry& arena) {
    Clip clip;
    clip.start = start;
    clip.duration = duration;
    clip.rate = rate;
    clip.arena = arena;
    const long long lo = frame_index(start, rate);
    const long long hi = lo + frame_index(duration, rate);
    for (const auto& track : tracks) {
        auto first = std::lower_bound(track.points.begin(), track.points.end(), lo,
                                      [&](const TrackPoint& p, long long v) { return frame_index(p.t, rate) < v; });
        auto last = std::upper_bound(first, track.points.end(), hi,
                                     [&](long long v, const TrackPoint& p) { return v < frame_index(p.t, rate); });
        if (last - first < 2) continue;
        Track seg = track;
        seg.points.assign(first, last);
        clip.source = track.source;
        clip.tracks.push_back(std::move(seg));
    }
    return clip;
}

namespace {

struct TrackSpan {
    long long first;
    long long last;
    const Track* track;
};

}  // namespace

std::vector<Clip> extract_clips(const std::vector<Track>& tracks, double duration, PopulationRange population,
                                std::size_t n, std::uint64_t seed, const ArenaGeometry& arena, std::size_t budget) {
    if (n == 0) return {};
    if (tracks.empty()) throw InvalidArgument("no tracks to search");
    if (!(duration > 0)) throw InvalidArgument("clip duration must be positive");
    const double rate = tracks.front().native_rate;

    std::vector<TrackSpan> spans;
    long long max_len = 0;
    for (const auto& t : tracks) {
        if (t.points.empty()) continue;
        spans.push_back({frame_index(t.points.front().t, rate), frame_index(t.points.back().t, rate), &t});
        max_len = std::max(max_len, spans.back().last - spans.back().first);
    }
    std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    long long data_first = spans.front().first;
    long long data_last = data_first;
    for (const auto& s : spans) data_last = std::max(data_last, s.last);

    const long long window = frame_index(duration, rate);
    if (data_last - data_first < window)
        throw InvalidArgument("dataset spans " + text::format_double((data_last - data_first) / rate) +
                              " s, shorter than the requested " + text::format_double(duration) + " s");
    const auto choices = static_cast<std::uint64_t>(data_last - window - data_first + 1);

    auto count_population = [&](long long lo, long long hi) {
        std::size_t count = 0;
        auto it = std::lower_bound(spans.begin(), spans.end(), lo - max_len,
                                   [](const TrackSpan& s, long long v) { return s.first < v; });
        for (; it != spans.end() && it->first <= hi; ++it) {
            if (it->last < lo) continue;
            const auto& pts = it->track->points;
            auto a = std::lower_bound(pts.begin(), pts.end(), lo,
                                      [&](const TrackPoint& p, long long v) { return frame_index(p.t, rate) < v; });
            if (a == pts.end() || frame_index(a->t, rate) > hi) continue;
            ++a;
            if (a != pts.end() && frame_index(a->t, rate) <= hi) ++count;
        }
        return count;
    };

    Rng rng(seed);
    std::set<long long> accepted;
    std::vector<Clip> clips;
    std::size_t draws = 0;
    while (clips.size() < n && draws < budget) {
        ++draws;
        const long long lo = data_first + static_cast<long long>(rng.below(choices));
        if (accepted.count(lo)) continue;
        const std::size_t pop = count_population(lo, lo + window);
        if (!population.contains(pop)) continue;
        accepted.insert(lo);
        clips.push_back(cut_window(tracks, static_cast<double>(lo) / rate, duration, rate, arena));
    }
    if (clips.size() < n)
        throw NotFound("found " + std::to_string(clips.size()) + " of " + std::to_string(n) +
                       " clips with population in [" + std::to_string(population.min) + ", " +
                       (population.max == SIZE_MAX ? std::string("inf") : std::to_string(population.max)) +
                       "] after " + std::to_string(draws) + " window draws (budget " + std::to_string(budget) + ")");
    return clips;
}

// ---------------------------------------------------------------------------

std::vector<Frame> to_frames(const Clip& clip) {
    std::map<long long, Frame> frames;
    for (const auto& track : clip.tracks) {
        const auto& pts = track.points;
        const std::size_t n = pts.size();
        std::vector<double> heading(n, 0.0);
        std::vector<double> speed(n, 0.0);

        // Initial heading: first non-stationary step, if any.
        double carried = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const Vec2 d = pts[i + 1].position() - pts[i].position();
            if (norm(d) >= kStationaryStep) {
                carried = wrap_angle(std::atan2(d.y, d.x));
                break;
            }
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const Vec2 d = pts[i + 1].position() - pts[i].position();
            const double step = norm(d);
            const long long frames_between =
                std::max<long long>(1, frame_index(pts[i + 1].t, clip.rate) - frame_index(pts[i].t, clip.rate));
            if (step >= kStationaryStep) carried = wrap_angle(std::atan2(d.y, d.x));
            heading[i] = carried;
            speed[i] = step * clip.rate / static_cast<double>(frames_between);
        }
        if (n >= 2) {
            heading[n - 1] = heading[n - 2];
            speed[n - 1] = speed[n - 2];
        } else if (n == 1) {
            heading[0] = carried;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const long long idx = frame_index(pts[i].t, clip.rate);
            Frame& f = frames[idx];
            f.t = static_cast<double>(idx) / clip.rate;
            f.agents.push_back({track.id, pts[i].position(), heading[i], speed[i]});
        }
    }
    std::vector<Frame> out;
    out.reserve(frames.size());
    for (auto& [idx, f] : frames) out.push_back(std::move(f));
    return out;
}

// ---------------------------------------------------------------------------

void write_clip(std::ostream& out, const Clip& clip, const std::vector<std::pair<std::string, std::string>>& stamps) {
    using text::format_double;
    out << "# rate=" << format_double(clip.rate) << '\n';
    out << "# arena=" << format_double(clip.arena.width) << 'x' << format_double(clip.arena.height) << '\n';
    out << "# start=" << format_double(clip.start) << '\n';
    out << "# duration=" << format_double(clip.duration) << '\n';
    out << "# source=" << to_string(clip.source) << '\n';
    for (const auto& [k, v] : stamps) out << "# " << k << '=' << v << '\n';
    out << kTrackHeader << '\n';
    for (const auto& track : clip.tracks) {
        if (track.id.find_first_of(",\n#") != std::string::npos)
            throw InvalidArgument("track id `" + track.id + "` cannot be written to a track file");
        for (const auto& p : track.points)
            out << track.id << ',' << frame_index(p.t, clip.rate) << ',' << format_double(p.x) << ','
                << format_double(p.y) << '\n';
    }
}

void save_clip(const std::string& path, const Clip& clip,
               const std::vector<std::pair<std::string, std::string>>& stamps) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    write_clip(out, clip, stamps);
}

Clip read_clip(std::istream& in, const ArenaGeometry& arena, ClipFileHeader* header) {
    const RawTable table = read_rows(in);
    ClipFileHeader h;
    for (const auto& [key, value] : table.meta) {
        double v = 0.0;
        if (key == "rate" && text::parse_double(value, v)) {
            h.rate = v;
        } else if (key == "start" && text::parse_double(value, v)) {
            h.start = v;
        } else if (key == "duration" && text::parse_double(value, v)) {
            h.duration = v;
        } else if (key == "source") {
            h.source = parse_track_source(value);
        } else if (key == "arena") {
            const auto x = value.find('x');
            double w = 0.0, hh = 0.0;
            if (x == std::string::npos || !text::parse_double(std::string_view(value).substr(0, x), w) ||
                !text::parse_double(std::string_view(value).substr(x + 1), hh))
                throw InvalidArgument("bad arena header `" + value + "`");
            h.arena_size = std::make_pair(w, hh);
        } else {
            h.extra.emplace_back(key, value);
        }
    }
    if (h.arena_size && (std::abs(h.arena_size->first - arena.width) > 1e-9 ||
                         std::abs(h.arena_size->second - arena.height) > 1e-9))
        throw InvalidArgument("clip arena size does not match the supplied arena geometry");

    Clip clip;
    clip.rate = h.rate.value_or(9.0);
    clip.arena = arena;
    clip.source = h.source.value_or(TrackSource::real);
    double t_min = INFINITY, t_max = -INFINITY;
    for (const auto& [id, rows] : group_rows(table)) {
        Track track;
        track.id = id;
        track.source = clip.source;
        track.native_rate = clip.rate;
        for (const RawRow* row : rows) {
            const double t = static_cast<double>(row->frame) / clip.rate;
            if (!track.points.empty() && !(t > track.points.back().t))
                throw ParseError(row->line, "time not strictly increasing for track `" + id + "`");
            track.points.push_back({t, row->x, row->y});
        }
        t_min = std::min(t_min, track.points.front().t);
        t_max = std::max(t_max, track.points.back().t);
        clip.tracks.push_back(std::move(track));
    }
    if (clip.tracks.empty()) t_min = t_max = 0.0;
    clip.start = h.start.value_or(t_min);
    clip.duration = h.duration.value_or(t_max - clip.start);
    if (header) *header = std::move(h);
    return clip;
}

Clip load_clip(const std::string& path, const ArenaGeometry& arena, ClipFileHeader* header) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open clip file " + path);
    return read_clip(in, arena, header);
}

}  // namespace crowdtt
