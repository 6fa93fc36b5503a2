#include "crowdtt/sfm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <numbers>
#include <sstream>
#include <thread>

#include "crowdtt/error.hpp"
#include "crowdtt/rng.hpp"
#include "crowdtt/text_io.hpp"

namespace crowdtt::sfm {

void SfmParams::validate() const {
    // Amplitudes may be zero (repulsion switched off); everything else is a
    // length, speed or rate and must be positive.
    if (ped_body_potential < 0 || obstacle_body_potential < 0)
        throw InvalidArgument("repulsion amplitudes must be non-negative");
    for (double v : {ped_recognition_distance, obstacle_repulsion_strength, ped_radius, speed_mean, speed_min,
                     speed_max, acceleration, search_radius, force_cap})
        if (!(v > 0)) throw InvalidArgument("social-force lengths, speeds and rates must be positive");
    if (!(speed_min <= speed_mean && speed_mean <= speed_max))
        throw InvalidArgument("speed bounds must satisfy min <= mean <= max");
    if (speed_sigma < 0) throw InvalidArgument("speed_sigma must be non-negative");
    if (!(solver.atol > 0) || !(solver.rtol > 0) || !(solver.initial_step > 0) || !(solver.max_step > 0))
        throw InvalidArgument("solver tolerances and steps must be positive");
    if (!(anticipation_time >= 0) || !(portal_margin >= 0) || !(spawn_depth >= 0) || !(exit_distance > 0))
        throw InvalidArgument("anticipation, margins and exit distance must be non-negative");
    if (!(target_setback >= 0 && target_setback < exit_distance))
        throw InvalidArgument("target_setback must lie in [0, exit_distance)");
}

std::vector<Obstacle> build_obstacles(const ArenaGeometry& arena, std::optional<int> only_opening) {
    ArenaGeometry shape = arena;
    if (only_opening)
        std::erase_if(shape.portals, [&](const PortalRegion& p) { return p.id != *only_opening; });
    std::vector<Obstacle> out;
    for (const auto& wall : shape.boundary_walls()) {
        Obstacle o;
        for (std::size_t i = 1; i < wall.size(); ++i) o.edges.push_back({wall[i - 1], wall[i]});
        if (!o.edges.empty()) out.push_back(std::move(o));
    }
    for (const auto& poly : arena.obstacles) {
        Obstacle o;
        o.edges = poly.edges();
        o.closed = true;
        o.outline = poly;
        out.push_back(std::move(o));
    }
    return out;
}

namespace {

Segment shrink(const Segment& s, double margin) {
    const double len = s.length();
    if (len <= 2.0 * margin) return {s.midpoint(), s.midpoint()};
    const Vec2 dir = (s.b - s.a) / len;
    return {s.a + dir * margin, s.b - dir * margin};
}

// Unit normal of a boundary opening pointing into the arena.
Vec2 inward_normal(const ArenaGeometry& arena, const Segment& s) {
    const Vec2 d = s.b - s.a;
    const double len = norm(d);
    Vec2 n{-d.y / len, d.x / len};
    const Vec2 centre{arena.width / 2, arena.height / 2};
    if (dot(centre - s.midpoint(), n) < 0) n = -n;
    return n;
}

double jitter_angle(std::uint64_t seed, std::uint64_t lo, std::uint64_t hi) {
    Rng r = Rng::derive(seed, lo * 0x9e3779b97f4a7c15ULL ^ hi);
    return 2.0 * std::numbers::pi * r.uniform();
}

Vec2 cap(Vec2 a, double limit) {
    const double m = norm(a);
    return m > limit ? a * (limit / m) : a;
}

}  // namespace

Vec2 steering_target(const PortalRegion& portal, Vec2 from, double margin, Vec2 inward, double setback) {
    return closest_point(shrink(portal.span, margin), from) + inward * setback;
}

Vec2 net_force(const Pedestrian& ped, Vec2 target, std::span<const Neighbour> neighbours,
               std::span<const Obstacle> obstacles, const SfmParams& params, std::uint64_t jitter_seed) {
    // Driving term, relaxation time tau = v0 / a.
    const double tau = ped.desired_speed / params.acceleration;
    const Vec2 to_target = target - ped.position;
    const double dist_target = norm(to_target);
    const Vec2 e = dist_target > 1e-12 ? to_target / dist_target : Vec2{};
    Vec2 force = (e * ped.desired_speed - ped.velocity) / tau;

    const double r2 = params.search_radius * params.search_radius;
    for (const auto& nb : neighbours) {
        if (nb.id == ped.id) continue;
        const Vec2 diff = ped.position - nb.position;
        const double d2 = dot(diff, diff);
        if (d2 >= r2) continue;
        const double d = std::sqrt(d2);
        if (d <= 1e-12) {
            const std::uint64_t lo = std::min(ped.id, nb.id);
            const std::uint64_t hi = std::max(ped.id, nb.id);
            const double a = jitter_angle(jitter_seed, lo, hi);
            const Vec2 n = Vec2{std::cos(a), std::sin(a)} * (ped.id == lo ? 1.0 : -1.0);
            force += n * (params.ped_body_potential * std::exp(2.0 * params.ped_radius / params.ped_recognition_distance));
            continue;
        }
        // Elliptical potential: semi-minor axis b of the ellipse through
        // the current offset and the offset one anticipation horizon ahead.
        const Vec2 step = (nb.velocity - ped.velocity) * params.anticipation_time;
        const Vec2 ahead = diff - step;
        const double d_ahead = norm(ahead);
        const double sum = d + d_ahead;
        const double b = 0.5 * std::sqrt(std::max(0.0, sum * sum - dot(step, step)));
        const Vec2 dir = (diff / d + (d_ahead > 1e-12 ? ahead / d_ahead : diff / d)) * 0.5;
        const double magnitude =
            params.ped_body_potential * std::exp((2.0 * params.ped_radius - b) / params.ped_recognition_distance);
        const double stretch = b > 1e-9 ? sum / (2.0 * b) : params.force_cap;
        force += dir * (magnitude * stretch);
    }

    for (const auto& obs : obstacles) {
        double best = std::numeric_limits<double>::infinity();
        Vec2 nearest;
        for (const auto& edge : obs.edges) {
            const Vec2 c = closest_point(edge, ped.position);
            const double d = distance(c, ped.position);
            if (d < best) {
                best = d;
                nearest = c;
            }
        }
        if (!(best < params.search_radius)) continue;
        Vec2 n;
        if (best > 1e-12) {
            n = (ped.position - nearest) / best;
            if (obs.closed && obs.outline.contains(ped.position)) n = -n;
        } else {
            continue;  // on the outline: no defined direction
        }
        force += n * (params.obstacle_body_potential *
                      std::exp((params.ped_radius - best) / params.obstacle_repulsion_strength));
    }
    return cap(force, params.force_cap);
}

void Scenario::validate() const {
    arena.validate();
    params.validate();
    if (!(duration > 0)) throw InvalidArgument("scenario duration must be positive");
    if (!(output_rate > 0)) throw InvalidArgument("output rate must be positive");
    for (const auto& [pair, p] : routes.probabilities) {
        for (int id : {pair.first, pair.second})
            if (id != kInteriorPortal && !arena.find_portal(id))
                throw InvalidArgument("route references unknown portal " + std::to_string(id));
        if (p < 0) throw InvalidArgument("negative route probability");
    }
    for (const auto& e : entries.observations)
        if (e.portal != kInteriorPortal && !arena.find_portal(e.portal))
            throw InvalidArgument("entry references unknown portal " + std::to_string(e.portal));
}

namespace {

int draw(Rng& rng, const std::vector<std::pair<int, double>>& dist) {
    double u = rng.uniform();
    for (const auto& [id, p] : dist) {
        if (u < p) return id;
        u -= p;
    }
    return dist.back().first;
}

std::vector<std::pair<int, double>> without_interior(std::vector<std::pair<int, double>> dist) {
    std::erase_if(dist, [](const auto& e) { return e.first == kInteriorPortal; });
    double mass = 0.0;
    for (const auto& [id, p] : dist) mass += p;
    for (auto& [id, p] : dist) p /= mass;
    return dist;
}

std::vector<std::pair<int, double>> uniform_portals(const ArenaGeometry& arena, int exclude) {
    std::vector<std::pair<int, double>> out;
    for (const auto& p : arena.portals)
        if (p.id != exclude) out.emplace_back(p.id, 0.0);
    if (out.empty())
        for (const auto& p : arena.portals) out.emplace_back(p.id, 0.0);
    for (auto& [id, p] : out) p = 1.0 / static_cast<double>(out.size());
    return out;
}

}  // namespace

std::vector<SpawnEvent> spawn_schedule(const Scenario& scenario, ScheduleReport* report) {
    scenario.validate();
    const auto& arena = scenario.arena;
    const auto& params = scenario.params;
    if (arena.portals.empty()) throw InvalidArgument("arena has no portals");

    Rng rng = Rng::derive(scenario.seed, 1);
    std::vector<EntryObservation> entries = scenario.entries.observations;
    if (scenario.resample_entries && !entries.empty()) {
        std::vector<EntryObservation> boot;
        for (std::size_t i = 0; i < entries.size(); ++i) boot.push_back(entries[rng.below(entries.size())]);
        entries = std::move(boot);
    }
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.time < b.time; });

    const auto origins = without_interior(scenario.routes.origin_marginal());
    const auto dest_marginal = without_interior(scenario.routes.destination_marginal());

    std::vector<SpawnEvent> schedule;
    schedule.reserve(entries.size());
    for (const auto& entry : entries) {
        SpawnEvent ev;
        ev.id = schedule.size() + 1;
        ev.time = entry.time;
        ev.origin = entry.portal;
        if (ev.origin == kInteriorPortal) {
            ev.origin = draw(rng, origins.empty() ? uniform_portals(arena, kInteriorPortal) : origins);
            if (report) ++report->reassigned_origins;
        }
        auto dests = without_interior(scenario.routes.destinations_from(ev.origin));
        if (dests.empty()) {
            dests = dest_marginal.empty() ? uniform_portals(arena, ev.origin) : dest_marginal;
            if (report) ++report->marginal_destinations;
        }
        ev.destination = draw(rng, dests);
        ev.desired_speed =
            params.speed_sigma > 0
                ? rng.truncated_normal(params.speed_mean, params.speed_sigma, params.speed_min, params.speed_max)
                : params.speed_mean;
        const PortalRegion& portal = *arena.find_portal(ev.origin);
        const Segment span = shrink(portal.span, params.portal_margin);
        const Vec2 along = span.a + (span.b - span.a) * rng.uniform();
        ev.position = along + inward_normal(arena, portal.span) * params.spawn_depth;
        schedule.push_back(ev);
    }
    return schedule;
}

// ---------------------------------------------------------------------------

namespace {

struct Active {
    Pedestrian ped;
    std::size_t track = 0;  // index into output tracks
    const PortalRegion* destination = nullptr;
    Vec2 inward;  // destination normal pointing into the arena
    const std::vector<Obstacle>* obstacles = nullptr;
};

// Where the step prev -> cur first leaves the arena rectangle, if it does.
std::optional<Vec2> boundary_exit(const ArenaGeometry& arena, Vec2 prev, Vec2 cur) {
    double best = INFINITY;
    const Vec2 d = cur - prev;
    auto consider = [&](double lo_bound, double p, double dp, bool upper) {
        const double bound = lo_bound;
        if (dp == 0.0) return;
        if (upper ? (p + dp <= bound) : (p + dp >= bound)) return;
        const double u = std::clamp((bound - p) / dp, 0.0, 1.0);
        best = std::min(best, u);
    };
    consider(0.0, prev.x, d.x, false);
    consider(arena.width, prev.x, d.x, true);
    consider(0.0, prev.y, d.y, false);
    consider(arena.height, prev.y, d.y, true);
    if (!std::isfinite(best)) return std::nullopt;
    return prev + d * best;
}

std::string dump_state(double t, const std::vector<Active>& active, const std::vector<double>& y) {
    std::ostringstream os;
    os << "step size underflow at t=" << text::format_double(t) << " with " << active.size()
       << " pedestrians; state (id x y vx vy):";
    for (std::size_t i = 0; i < active.size(); ++i)
        os << "\n  " << active[i].ped.id << ' ' << y[4 * i] << ' ' << y[4 * i + 1] << ' ' << y[4 * i + 2] << ' '
           << y[4 * i + 3];
    return os.str();
}

}  // namespace

SimOutput integrate(const Scenario& scenario) { return integrate(scenario, spawn_schedule(scenario)); }

SimOutput integrate(const Scenario& scenario, const std::vector<SpawnEvent>& schedule) {
    scenario.validate();
    const auto& params = scenario.params;
    const auto& arena = scenario.arena;
    // Openings other than a pedestrian's destination are walls to them.
    std::map<int, std::vector<Obstacle>> obstacles_for;
    for (const auto& portal : arena.portals) obstacles_for[portal.id] = build_obstacles(arena, portal.id);
    const double rate = scenario.output_rate;
    const long long last_sample = static_cast<long long>(std::floor(scenario.duration * rate + 1e-9));
    const std::uint64_t jitter_seed = Rng::derive(scenario.seed, 2).next();

    std::vector<SpawnEvent> pending = schedule;
    std::stable_sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) { return a.time < b.time; });

    SimOutput out;
    std::vector<Active> active;
    std::vector<double> y;
    std::vector<Neighbour> neighbours;
    std::vector<Vec2> targets;

    auto rhs = [&](double, std::span<const double> state, std::span<double> dydt) {
        const std::size_t n = active.size();
        neighbours.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            neighbours[i] = {active[i].ped.id, {state[4 * i], state[4 * i + 1]}, {state[4 * i + 2], state[4 * i + 3]}};
        for (std::size_t i = 0; i < n; ++i) {
            Pedestrian p = active[i].ped;
            p.position = {state[4 * i], state[4 * i + 1]};
            p.velocity = {state[4 * i + 2], state[4 * i + 3]};
            const Vec2 target = steering_target(*active[i].destination, p.position, params.portal_margin,
                                                active[i].inward, params.target_setback);
            const Vec2 a = net_force(p, target, neighbours, *active[i].obstacles, params, jitter_seed);
            dydt[4 * i] = p.velocity.x;
            dydt[4 * i + 1] = p.velocity.y;
            dydt[4 * i + 2] = a.x;
            dydt[4 * i + 3] = a.y;
        }
    };
    auto clamp_speed = [&](double, std::vector<double>& state) {
        bool changed = false;
        for (std::size_t i = 0; i < active.size(); ++i) {
            const Vec2 v{state[4 * i + 2], state[4 * i + 3]};
            const double s = norm(v);
            if (s > params.speed_max) {
                const Vec2 c = v * (params.speed_max / s);
                state[4 * i + 2] = c.x;
                state[4 * i + 3] = c.y;
                changed = true;
            }
        }
        return changed;
    };

    auto spawn = [&](const SpawnEvent& ev) {
        const PortalRegion* dest = arena.find_portal(ev.destination);
        if (!dest) throw InvalidArgument("spawn destination is not a portal");
        Track track;
        track.id = "p" + std::to_string(ev.id);
        track.source = TrackSource::simulated;
        track.native_rate = rate;
        out.tracks.push_back(std::move(track));
        out.velocities.emplace_back();
        const Pedestrian ped{ev.id, ev.position, {}, ev.desired_speed, params.ped_radius, ev.origin, ev.destination,
                             ev.time};
        active.push_back({ped, out.tracks.size() - 1, dest, inward_normal(arena, dest->span), &obstacles_for.at(dest->id)});
        y.insert(y.end(), {ev.position.x, ev.position.y, 0.0, 0.0});
        out.events.push_back({SimEvent::Kind::spawn, ev.time, ev.id});
        ++out.spawned;
    };

    double t = 0.0;
    double step = params.solver.initial_step;
    std::size_t next_spawn = 0;
    for (long long k = 0; k <= last_sample; ++k) {
        const double sample_time = static_cast<double>(k) / rate;

        // Advance to the sample instant, stopping at spawn times on the way.
        for (;;) {
            const bool spawn_first = next_spawn < pending.size() && pending[next_spawn].time < sample_time;
            const double stop = spawn_first ? pending[next_spawn].time : sample_time;
            if (!active.empty() && stop > t &&
                !dopri5_advance(rhs, t, stop, y, step, params.solver, clamp_speed, &out.solver))
                throw SimulationError(dump_state(t, active, y));
            t = std::max(t, stop);
            if (!spawn_first) break;
            // Off-grid spawns join the state immediately and are first
            // sampled at the next output instant.
            while (next_spawn < pending.size() && pending[next_spawn].time <= t) spawn(pending[next_spawn++]);
        }

        // Exits: pedestrians with two samples near their destination, and
        // anyone who has left the arena through another opening.
        for (std::size_t i = 0; i < active.size();) {
            const Vec2 pos{y[4 * i], y[4 * i + 1]};
            const auto& pts = out.tracks[active[i].track].points;
            const bool arrived =
                pts.size() >= 2 && distance_to_segment(active[i].destination->span, pos) <= params.exit_distance;
            const bool outside = !arena.in_bounds(pos);
            if (arrived || outside) {
                if (outside && !arrived) {
                    ++out.strays;
                    const Vec2 prev = pts.empty() ? active[i].ped.position : pts.back().position();
                    const auto crossing = boundary_exit(arena, prev, pos);
                    bool through_opening = false;
                    if (crossing)
                        for (const auto& portal : arena.portals)
                            through_opening = through_opening || distance_to_segment(portal.span, *crossing) <= 1e-9;
                    if (!through_opening) ++out.wall_crossings;
                }
                out.events.push_back({SimEvent::Kind::exit, sample_time, active[i].ped.id});
                ++out.exited;
                active.erase(active.begin() + static_cast<std::ptrdiff_t>(i));
                y.erase(y.begin() + static_cast<std::ptrdiff_t>(4 * i), y.begin() + static_cast<std::ptrdiff_t>(4 * i + 4));
            } else {
                ++i;
            }
        }

        // Spawns due exactly at this instant.
        while (next_spawn < pending.size() && pending[next_spawn].time <= sample_time) spawn(pending[next_spawn++]);

        for (std::size_t i = 0; i < active.size(); ++i) {
            out.tracks[active[i].track].points.push_back({sample_time, y[4 * i], y[4 * i + 1]});
            out.velocities[active[i].track].push_back({y[4 * i + 2], y[4 * i + 3]});
        }
    }

    Clip clip;
    clip.tracks = out.tracks;
    out.realized_mean_speed = speed_stats({clip}).mean;
    return out;
}

std::vector<SimOutput> integrate_batch(const std::vector<Scenario>& scenarios, unsigned threads) {
    std::vector<SimOutput> results(scenarios.size());
    std::vector<std::exception_ptr> errors(scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            try {
                results[i] = integrate(scenarios[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(scenarios.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

Clip to_clip(const SimOutput& output, const Scenario& scenario) {
    Clip clip;
    clip.start = 0.0;
    clip.duration = scenario.duration;
    clip.rate = scenario.output_rate;
    clip.arena = scenario.arena;
    clip.source = TrackSource::simulated;
    for (const auto& t : output.tracks)
        if (t.points.size() >= 2) clip.tracks.push_back(t);
    return clip;
}

double min_pair_distance(const SimOutput& output) {
    double best = std::numeric_limits<double>::infinity();
    std::map<long long, std::vector<Vec2>> by_instant;
    for (const auto& track : output.tracks)
        for (const auto& p : track.points) by_instant[frame_index(p.t, track.native_rate)].push_back(p.position());
    for (const auto& [k, pts] : by_instant)
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, distance(pts[i], pts[j]));
    return best;
}

HeadOnFixture head_on_fixture(const SfmParams& params, double lateral_offset, bool single) {
    HeadOnFixture f;
    auto& s = f.scenario;
    s.arena.width = 20.0;
    s.arena.height = 10.0;
    s.arena.portals = {{1, {{0.0, 0.0}, {0.0, 10.0}}}, {2, {{20.0, 10.0}, {20.0, 0.0}}}};
    s.params = params;
    s.params.portal_margin = 0.0;
    s.seed = 7;
    s.duration = 20.0;
    s.output_rate = 72.0;
    s.routes.probabilities = {{{1, 2}, 0.5}, {{2, 1}, 0.5}};
    const double mid = s.arena.height / 2;
    f.schedule.push_back({1, 0.0, 1, 2, params.speed_mean, {params.spawn_depth, mid - lateral_offset / 2}});
    if (!single)
        f.schedule.push_back(
            {2, 0.0, 2, 1, params.speed_mean, {s.arena.width - params.spawn_depth, mid + lateral_offset / 2}});
    for (const auto& ev : f.schedule) s.entries.observations.push_back({ev.time, ev.origin});
    return f;
}

double head_on_clearance(const HeadOnFixture& fixture) {
    return min_pair_distance(integrate(fixture.scenario, fixture.schedule));
}

}  // namespace crowdtt::sfm
