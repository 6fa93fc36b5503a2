#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "crowdtt/trajectory.hpp"

namespace crowdtt {

inline constexpr double kReferenceWalkingSpeed = 1.4;  // m/s
inline constexpr double kPortalAssignRadius = 1.0;     // metres
inline constexpr double kSpeedBinWidth = 0.1;          // m/s

using PortalPair = std::pair<int, int>;  // (origin, destination)

struct RouteChoiceDistribution {
    std::map<PortalPair, double> probabilities;

    bool empty() const { return probabilities.empty(); }
    double total() const;
    // P(destination | origin) restricted to the given origin; empty when the
    // origin carries no mass.
    std::vector<std::pair<int, double>> destinations_from(int origin) const;
    // Marginal destination distribution.
    std::vector<std::pair<int, double>> destination_marginal() const;
    std::vector<std::pair<int, double>> origin_marginal() const;
};

struct EntryObservation {
    double time = 0.0;  // seconds since clip start
    int portal = kInteriorPortal;

    bool operator==(const EntryObservation&) const = default;
};

struct EntryTimeDistribution {
    std::vector<EntryObservation> observations;  // ordered by time, then portal
};

struct SpeedStats {
    double mean = 0.0;
    double bin_width = kSpeedBinWidth;
    std::vector<std::size_t> histogram;  // bin k covers [k*w, (k+1)*w)
    std::vector<double> track_means;
    std::size_t excluded = 0;  // tracks with fewer than two samples

    double histogram_mean() const;  // bin-centre weighted mean
};

struct PlaybackScale {
    double factor = 1.0;
};

// Tracks whose endpoint was not within the assignment radius of any portal.
struct PortalAssignmentReport {
    std::vector<std::string> interior_tracks;
};

RouteChoiceDistribution extract_route_choices(const Clip& clip, const ArenaGeometry& arena,
                                              PortalAssignmentReport* report = nullptr,
                                              double assign_radius = kPortalAssignRadius);

EntryTimeDistribution extract_entry_times(const Clip& clip, const ArenaGeometry& arena,
                                          double assign_radius = kPortalAssignRadius);

// Per-track mean speed is path length over visible duration; the aggregate
// mean is the mean of the per-track values.
SpeedStats speed_stats(const std::vector<Clip>& clips, double bin_width = kSpeedBinWidth);

// factor = reference / observed_mean. Throws InvalidArgument on
// non-positive input.
PlaybackScale playback_scale(double observed_mean, double reference = kReferenceWalkingSpeed);

// `origin,destination,probability` rows after a header line.
void write_routes(std::ostream& out, const RouteChoiceDistribution& routes);
RouteChoiceDistribution read_routes(std::istream& in);
// `time,portal` rows after a header line.
void write_entries(std::ostream& out, const EntryTimeDistribution& entries);
EntryTimeDistribution read_entries(std::istream& in);

RouteChoiceDistribution load_routes(const std::string& path);
EntryTimeDistribution load_entries(const std::string& path);

}  // namespace crowdtt
