#include "crowdtt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <ostream>

#include "crowdtt/error.hpp"
#include "crowdtt/rng.hpp"
#include "crowdtt/text_io.hpp"

namespace crowdtt::metrics {

std::optional<double> polarization(const Frame& frame) {
    const std::size_t n = frame.agents.size();
    if (n == 0) return std::nullopt;
    const double first = frame.agents.front().heading;
    if (std::all_of(frame.agents.begin(), frame.agents.end(), [&](const AgentState& a) { return a.heading == first; }))
        return 1.0;
    double c = 0.0;
    double s = 0.0;
    for (const auto& a : frame.agents) {
        c += std::cos(a.heading);
        s += std::sin(a.heading);
    }
    const double phi = std::sqrt(c * c + s * s) / static_cast<double>(n);
    return std::min(phi, 1.0);
}

namespace {

constexpr std::size_t kBruteForceLimit = 32;

std::vector<double> brute_force(std::span<const Vec2> pts) {
    std::vector<double> best(pts.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (i != j) best[i] = std::min(best[i], distance(pts[i], pts[j]));
    return best;
}

// Bucket grid over the points' bounding box, about two points per cell.
class Grid {
public:
    explicit Grid(std::span<const Vec2> pts) : pts_(pts) {
        lo_ = hi_ = pts.front();
        for (const auto& p : pts) {
            lo_.x = std::min(lo_.x, p.x);
            lo_.y = std::min(lo_.y, p.y);
            hi_.x = std::max(hi_.x, p.x);
            hi_.y = std::max(hi_.y, p.y);
        }
        const double w = std::max(hi_.x - lo_.x, 1e-9);
        const double h = std::max(hi_.y - lo_.y, 1e-9);
        cell_ = std::max({std::sqrt(2.0 * w * h / static_cast<double>(pts.size())), w / 4095.0, h / 4095.0});
        nx_ = static_cast<long>(w / cell_) + 1;
        ny_ = static_cast<long>(h / cell_) + 1;
        start_.assign(static_cast<std::size_t>(nx_ * ny_) + 1, 0);
        std::vector<long> cell_of(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            cell_of[i] = cell_index(pts[i]);
            ++start_[static_cast<std::size_t>(cell_of[i]) + 1];
        }
        for (std::size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
        items_.resize(pts.size());
        std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[static_cast<std::size_t>(cell_of[i])]++] = i;
    }

    // Distance from point `i` to its nearest other point. Rings of cells
    // are scanned until the ring's inner edge lies beyond the best distance.
    double nearest(std::size_t i) const {
        const Vec2 p = pts_[i];
        const long cx = coord(p.x, lo_.x, nx_);
        const long cy = coord(p.y, lo_.y, ny_);
        double best = std::numeric_limits<double>::infinity();
        for (long ring = 0;; ++ring) {
            if (ring > 0 && static_cast<double>(ring - 1) * cell_ > best) break;
            if (cx - ring < 0 && cy - ring < 0 && cx + ring >= nx_ && cy + ring >= ny_) break;
            for (long gy = cy - ring; gy <= cy + ring; ++gy) {
                if (gy < 0 || gy >= ny_) continue;
                const bool edge_row = gy == cy - ring || gy == cy + ring;
                for (long gx = cx - ring; gx <= cx + ring; gx += (edge_row ? 1 : 2 * ring)) {
                    if (gx >= 0 && gx < nx_) {
                        const auto c = static_cast<std::size_t>(gy * nx_ + gx);
                        for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) {
                            const std::size_t j = items_[k];
                            if (j != i) best = std::min(best, distance(p, pts_[j]));
                        }
                    }
                    if (ring == 0) break;
                }
            }
        }
        return best;
    }

private:
    long coord(double v, double lo, long n) const {
        return std::clamp<long>(static_cast<long>((v - lo) / cell_), 0, n - 1);
    }
    long cell_index(Vec2 p) const { return coord(p.y, lo_.y, ny_) * nx_ + coord(p.x, lo_.x, nx_); }

    std::span<const Vec2> pts_;
    Vec2 lo_, hi_;
    double cell_ = 1.0;
    long nx_ = 1, ny_ = 1;
    std::vector<std::size_t> start_;
    std::vector<std::size_t> items_;
};

}  // namespace

std::vector<double> nearest_neighbour_distances(std::span<const Vec2> points) {
    if (points.size() < 2) throw InvalidArgument("nearest-neighbour distance needs at least two points");
    if (points.size() <= kBruteForceLimit) return brute_force(points);
    const Grid grid(points);
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = grid.nearest(i);
    return out;
}

std::optional<double> nnd(const Frame& frame) {
    if (frame.agents.size() < 2) return std::nullopt;
    std::vector<Vec2> pts;
    pts.reserve(frame.agents.size());
    for (const auto& a : frame.agents) pts.push_back(a.position);
    double sum = 0.0;
    for (double d : nearest_neighbour_distances(pts)) sum += d;
    return sum / static_cast<double>(pts.size());
}

namespace {

void finish(MetricSeries& s) {
    double sum = 0.0;
    for (double v : s.values) sum += v;
    s.mean = s.values.empty() ? 0.0 : sum / static_cast<double>(s.values.size());
}

}  // namespace

ClipMetrics frame_metrics(const std::vector<Frame>& frames, std::size_t population) {
    ClipMetrics m;
    m.polarization.population = m.nnd.population = population;
    for (const auto& f : frames) {
        if (const auto phi = polarization(f)) {
            m.polarization.times.push_back(f.t);
            m.polarization.values.push_back(*phi);
        } else {
            ++m.polarization.skipped;
        }
        if (const auto nu = nnd(f)) {
            m.nnd.times.push_back(f.t);
            m.nnd.values.push_back(*nu);
        } else {
            ++m.nnd.skipped;
        }
    }
    if (m.polarization.values.empty()) throw InvalidArgument("no frame holds an agent; metrics undefined");
    finish(m.polarization);
    finish(m.nnd);
    return m;
}

ClipMetrics clip_metrics(const Clip& clip) { return frame_metrics(to_frames(clip), clip.population()); }

std::vector<SweepPoint> sweep(std::span<const LabelledClip> clips) {
    std::vector<SweepPoint> points;
    for (const auto& lc : clips) {
        const ClipMetrics m = clip_metrics(*lc.clip);
        points.push_back({lc.clip->population(), m.nnd.mean, m.polarization.mean, lc.label});
    }
    std::stable_sort(points.begin(), points.end(), [](const SweepPoint& a, const SweepPoint& b) {
        return a.crowd_size != b.crowd_size ? a.crowd_size < b.crowd_size : a.label < b.label;
    });
    return points;
}

Frame uniform_crowd(std::size_t n, double width, double height, std::uint64_t seed) {
    Rng rng(seed);
    Frame f;
    f.agents.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        AgentState a;
        a.id = "u" + std::to_string(i);
        a.position = {rng.uniform(0.0, width), rng.uniform(0.0, height)};
        a.heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
        f.agents.push_back(std::move(a));
    }
    return f;
}

std::vector<SweepPoint> uniform_sweep(std::span<const std::size_t> sizes, double width, double height,
                                      std::size_t reps, std::uint64_t seed) {
    if (reps == 0) throw InvalidArgument("sweep needs at least one repetition");
    std::vector<SweepPoint> out;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        if (sizes[s] < 2) throw InvalidArgument("sweep sizes must be at least 2");
        std::vector<Frame> frames;
        for (std::size_t r = 0; r < reps; ++r)
            frames.push_back(uniform_crowd(sizes[s], width, height, Rng::derive(seed, s * reps + r).next()));
        const ClipMetrics m = frame_metrics(frames, sizes[s]);
        out.push_back({sizes[s], m.nnd.mean, m.polarization.mean, "uniform"});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const SweepPoint& a, const SweepPoint& b) { return a.crowd_size < b.crowd_size; });
    return out;
}

void write_series(std::ostream& out, const MetricSeries& series) {
    out << "# population=" << series.population << '\n';
    out << "# mean=" << text::format_double(series.mean) << '\n';
    out << "# skipped=" << series.skipped << '\n';
    out << "t,value\n";
    for (std::size_t i = 0; i < series.values.size(); ++i)
        out << text::format_double(series.times[i]) << ',' << text::format_double(series.values[i]) << '\n';
}

void write_sweep(std::ostream& out, std::span<const SweepPoint> points) {
    out << "size,nnd,polarization,label\n";
    for (const auto& p : points)
        out << p.crowd_size << ',' << text::format_double(p.mean_nnd) << ','
            << text::format_double(p.mean_polarization) << ',' << p.label << '\n';
}

}  // namespace crowdtt::metrics
