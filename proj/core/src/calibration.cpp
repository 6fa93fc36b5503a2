#include "crowdtt/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "crowdtt/error.hpp"
#include "crowdtt/text_io.hpp"

namespace crowdtt {

double RouteChoiceDistribution::total() const {
    double s = 0.0;
    for (const auto& [pair, p] : probabilities) s += p;
    return s;
}

std::vector<std::pair<int, double>> RouteChoiceDistribution::destinations_from(int origin) const {
    std::vector<std::pair<int, double>> out;
    double mass = 0.0;
    for (const auto& [pair, p] : probabilities)
        if (pair.first == origin && p > 0.0) {
            out.emplace_back(pair.second, p);
            mass += p;
        }
    for (auto& [d, p] : out) p /= mass;
    return out;
}

namespace {

std::vector<std::pair<int, double>> marginal(const std::map<PortalPair, double>& probs, bool by_origin) {
    std::map<int, double> m;
    for (const auto& [pair, p] : probs) m[by_origin ? pair.first : pair.second] += p;
    double mass = 0.0;
    for (const auto& [k, p] : m) mass += p;
    std::vector<std::pair<int, double>> out;
    for (const auto& [k, p] : m)
        if (p > 0.0) out.emplace_back(k, p / mass);
    return out;
}

int assign(const ArenaGeometry& arena, Vec2 p, double radius) {
    const auto [id, d] = arena.nearest_portal(p);
    return d <= radius ? id : kInteriorPortal;
}

}  // namespace

std::vector<std::pair<int, double>> RouteChoiceDistribution::destination_marginal() const {
    return marginal(probabilities, false);
}

std::vector<std::pair<int, double>> RouteChoiceDistribution::origin_marginal() const {
    return marginal(probabilities, true);
}

RouteChoiceDistribution extract_route_choices(const Clip& clip, const ArenaGeometry& arena,
                                              PortalAssignmentReport* report, double assign_radius) {
    if (arena.portals.empty()) throw InvalidArgument("arena has no portals");
    std::map<PortalPair, std::size_t> counts;
    std::size_t n = 0;
    for (const auto& track : clip.tracks) {
        if (track.points.empty()) continue;
        const int origin = assign(arena, track.points.front().position(), assign_radius);
        const int dest = assign(arena, track.points.back().position(), assign_radius);
        if ((origin == kInteriorPortal || dest == kInteriorPortal) && report)
            report->interior_tracks.push_back(track.id);
        ++counts[{origin, dest}];
        ++n;
    }
    RouteChoiceDistribution routes;
    for (const auto& [pair, c] : counts)
        routes.probabilities[pair] = static_cast<double>(c) / static_cast<double>(n);
    return routes;
}

EntryTimeDistribution extract_entry_times(const Clip& clip, const ArenaGeometry& arena, double assign_radius) {
    if (arena.portals.empty()) throw InvalidArgument("arena has no portals");
    EntryTimeDistribution entries;
    for (const auto& track : clip.tracks) {
        if (track.points.empty()) continue;
        const auto& first = track.points.front();
        entries.observations.push_back({first.t - clip.start, assign(arena, first.position(), assign_radius)});
    }
    std::stable_sort(entries.observations.begin(), entries.observations.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });
    return entries;
}

double SpeedStats::histogram_mean() const {
    double weighted = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < histogram.size(); ++k) {
        weighted += (static_cast<double>(k) + 0.5) * bin_width * static_cast<double>(histogram[k]);
        n += histogram[k];
    }
    return n ? weighted / static_cast<double>(n) : 0.0;
}

SpeedStats speed_stats(const std::vector<Clip>& clips, double bin_width) {
    if (!(bin_width > 0)) throw InvalidArgument("histogram bin width must be positive");
    SpeedStats stats;
    stats.bin_width = bin_width;
    for (const auto& clip : clips) {
        for (const auto& track : clip.tracks) {
            const auto& pts = track.points;
            if (pts.size() < 2 || !(pts.back().t > pts.front().t)) {
                ++stats.excluded;
                continue;
            }
            double path = 0.0;
            for (std::size_t i = 1; i < pts.size(); ++i) path += distance(pts[i - 1].position(), pts[i].position());
            stats.track_means.push_back(path / (pts.back().t - pts.front().t));
        }
    }
    if (stats.track_means.empty()) return stats;
    double sum = 0.0;
    for (double v : stats.track_means) {
        sum += v;
        const auto bin = static_cast<std::size_t>(std::floor(v / bin_width));
        if (bin >= stats.histogram.size()) stats.histogram.resize(bin + 1, 0);
        ++stats.histogram[bin];
    }
    stats.mean = sum / static_cast<double>(stats.track_means.size());
    return stats;
}

PlaybackScale playback_scale(double observed_mean, double reference) {
    if (!(observed_mean > 0.0) || !(reference > 0.0))
        throw InvalidArgument("playback scaling needs positive observed and reference speeds");
    return {reference / observed_mean};
}

// ---------------------------------------------------------------------------

namespace {

template <typename RowFn>
void read_table(std::istream& in, std::string_view header, std::size_t columns, RowFn&& on_row) {
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (!header_seen) {
            if (body != header) throw ParseError(lineno, "expected header `" + std::string(header) + "`");
            header_seen = true;
            continue;
        }
        const auto fields = text::split(body, ',');
        if (fields.size() != columns) throw ParseError(lineno, "expected " + std::to_string(columns) + " fields");
        on_row(fields, lineno);
    }
}

}  // namespace

void write_routes(std::ostream& out, const RouteChoiceDistribution& routes) {
    out << "origin,destination,probability\n";
    for (const auto& [pair, p] : routes.probabilities)
        out << pair.first << ',' << pair.second << ',' << text::format_double(p) << '\n';
}

RouteChoiceDistribution read_routes(std::istream& in) {
    RouteChoiceDistribution routes;
    read_table(in, "origin,destination,probability", 3, [&](const auto& f, std::size_t line) {
        long long o = 0, d = 0;
        double p = 0.0;
        if (!text::parse_int(f[0], o) || !text::parse_int(f[1], d) || !text::parse_double(f[2], p) || p < 0.0)
            throw ParseError(line, "bad route row");
        routes.probabilities[{static_cast<int>(o), static_cast<int>(d)}] += p;
    });
    return routes;
}

void write_entries(std::ostream& out, const EntryTimeDistribution& entries) {
    out << "time,portal\n";
    for (const auto& e : entries.observations) out << text::format_double(e.time) << ',' << e.portal << '\n';
}

EntryTimeDistribution read_entries(std::istream& in) {
    EntryTimeDistribution entries;
    read_table(in, "time,portal", 2, [&](const auto& f, std::size_t line) {
        double t = 0.0;
        long long portal = 0;
        if (!text::parse_double(f[0], t) || t < 0.0 || !text::parse_int(f[1], portal))
            throw ParseError(line, "bad entry row");
        entries.observations.push_back({t, static_cast<int>(portal)});
    });
    return entries;
}

RouteChoiceDistribution load_routes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open routes file " + path);
    return read_routes(in);
}

EntryTimeDistribution load_entries(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open entries file " + path);
    return read_entries(in);
}

}  // namespace crowdtt
