#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdtt/calibration.hpp"
#include "crowdtt/dopri5.hpp"
#include "crowdtt/geometry.hpp"
#include "crowdtt/trajectory.hpp"

namespace crowdtt::sfm {

// Social-force parameters. The first ten defaults are the stock
// Helbing-Molnar template values; "body potential" entries are read as
// repulsion amplitudes (m/s^2) and "recognition distance" / "repulsion
// strength" as exponential decay lengths (m).
struct SfmParams {
    double ped_body_potential = 2.72;
    double ped_recognition_distance = 0.3;
    double obstacle_body_potential = 20.1;
    double obstacle_repulsion_strength = 0.25;
    double ped_radius = 0.2;
    double speed_mean = 1.4;
    double speed_min = 0.4;
    double speed_max = 3.2;
    double acceleration = 2.0;
    double search_radius = 2.0;

    double anticipation_time = 0.5;  // s, horizon of the elliptical potential
    double speed_sigma = 0.26;  // desired-speed spread before truncation
    double force_cap = 50.0;    // m/s^2

    Dopri5Options solver{};

    double portal_margin = 0.5;  // targets and spawns stay this far from opening ends
    double spawn_depth = 0.3;    // spawn this far inside the arena
    double exit_distance = 0.5;  // removal distance from the destination opening
    double target_setback = 0.25;  // steering target sits this far inside the opening

    // Throws InvalidArgument when a value breaks the model's invariants.
    void validate() const;
};

struct Pedestrian {
    std::uint64_t id = 0;
    Vec2 position;
    Vec2 velocity;
    double desired_speed = 1.4;
    double radius = 0.2;
    int origin = 0;
    int destination = 0;
    double spawn_time = 0.0;
};

struct Neighbour {
    std::uint64_t id = 0;
    Vec2 position;
    Vec2 velocity;
};

// Wall or obstacle outline. Closed outlines are solid polygons.
struct Obstacle {
    std::vector<Segment> edges;
    bool closed = false;
    Polygon outline;  // set when closed
};

// Boundary walls between openings plus interior polygons. With
// `only_opening`, every other opening is walled up.
std::vector<Obstacle> build_obstacles(const ArenaGeometry& arena, std::optional<int> only_opening = std::nullopt);

// Point the pedestrian steers towards: the nearest point of the opening
// (ends trimmed by `margin`), moved `setback` along the inward normal so
// walkers hugging a wall do not drift out through a neighbouring opening.
Vec2 steering_target(const PortalRegion& portal, Vec2 from, double margin, Vec2 inward = {}, double setback = 0.0);

// Acceleration of one pedestrian:
//   driving    (v0 * e_target - v) / tau,            tau = v0 / acceleration
//   neighbours A_p * exp((2r - b) / B_p) along the gradient of b, where b
//              is the semi-minor axis of the ellipse through the current
//              offset and the offset one anticipation_time ahead (b equals
//              the centre distance when the relative velocity is zero)
//   obstacles  A_o * exp((r - d) / B_o) away from the nearest outline point
// Neighbours and obstacles at or beyond the search radius are ignored.
// Coincident neighbours are separated along a direction derived from
// `jitter_seed` and the two ids. The result is capped at params.force_cap.
Vec2 net_force(const Pedestrian& ped, Vec2 target, std::span<const Neighbour> neighbours,
               std::span<const Obstacle> obstacles, const SfmParams& params, std::uint64_t jitter_seed = 0);

struct Scenario {
    ArenaGeometry arena;
    RouteChoiceDistribution routes;
    EntryTimeDistribution entries;
    SfmParams params;
    std::uint64_t seed = 0;
    double duration = 60.0;
    double output_rate = 9.0;
    bool resample_entries = false;  // bootstrap entries instead of replaying them

    void validate() const;
};

struct SpawnEvent {
    std::uint64_t id = 0;
    double time = 0.0;
    int origin = 0;
    int destination = 0;
    double desired_speed = 1.4;
    Vec2 position;
};

struct ScheduleReport {
    std::size_t reassigned_origins = 0;       // interior entries moved to a real portal
    std::size_t marginal_destinations = 0;    // origin had no route mass
};

std::vector<SpawnEvent> spawn_schedule(const Scenario& scenario, ScheduleReport* report = nullptr);

struct SimEvent {
    enum class Kind { spawn, exit };
    Kind kind = Kind::spawn;
    double time = 0.0;
    std::uint64_t id = 0;

    bool operator==(const SimEvent&) const = default;
};

struct SimOutput {
    std::vector<Track> tracks;                     // source = simulated
    std::vector<std::vector<Vec2>> velocities;     // parallel to tracks' points
    std::vector<SimEvent> events;
    std::size_t spawned = 0;
    std::size_t exited = 0;          // includes strays
    std::size_t strays = 0;          // left through an opening other than the destination
    std::size_t wall_crossings = 0;  // strays whose exit step crossed a wall, not an opening
    double realized_mean_speed = 0.0;              // speed_stats mean over tracks
    Dopri5Stats solver;
};

// Runs the scenario from its own spawn schedule.
SimOutput integrate(const Scenario& scenario);
// Runs an explicit schedule (fixtures, replays).
SimOutput integrate(const Scenario& scenario, const std::vector<SpawnEvent>& schedule);

// Runs independent scenarios on up to `threads` workers. Output order
// matches input order and does not depend on the thread count.
std::vector<SimOutput> integrate_batch(const std::vector<Scenario>& scenarios, unsigned threads);

// Output as a clip covering [0, duration].
Clip to_clip(const SimOutput& output, const Scenario& scenario);

// Smallest centre-to-centre distance between any two pedestrians sampled at
// the same instant; +inf when no instant holds two pedestrians.
double min_pair_distance(const SimOutput& output);

// Two pedestrians walking at each other along the centre line of an empty
// corridor. `lateral_offset` shifts their lanes apart; 3 m gives two
// non-interacting parallel walkers.
struct HeadOnFixture {
    Scenario scenario;
    std::vector<SpawnEvent> schedule;
};

HeadOnFixture head_on_fixture(const SfmParams& params, double lateral_offset = 0.0, bool single = false);

// Minimum centre distance over a head-on run.
double head_on_clearance(const HeadOnFixture& fixture);

}  // namespace crowdtt::sfm
