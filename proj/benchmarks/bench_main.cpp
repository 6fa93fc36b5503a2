#include <benchmark/benchmark.h>

#include <vector>

#include "crowdtt/metrics.hpp"
#include "crowdtt/render.hpp"
#include "crowdtt/sfm.hpp"

using namespace crowdtt;

namespace {

std::vector<Vec2> points(std::size_t n) {
    std::vector<Vec2> pts;
    for (const auto& a : metrics::uniform_crowd(n, 15.8, 11.86, 3).agents) pts.push_back(a.position);
    return pts;
}

void BM_NndGrid(benchmark::State& state) {
    const auto pts = points(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(metrics::nearest_neighbour_distances(pts));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NndGrid)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_NndBruteForce(benchmark::State& state) {
    const auto pts = points(static_cast<std::size_t>(state.range(0)));
    std::vector<double> best(pts.size());
    for (auto _ : state) {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double b = 1e300;
            for (std::size_t j = 0; j < pts.size(); ++j)
                if (j != i) b = std::min(b, distance(pts[i], pts[j]));
            best[i] = b;
        }
        benchmark::DoNotOptimize(best.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NndBruteForce)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_NetForce(benchmark::State& state) {
    const auto arena = forum_arena();
    const auto obstacles = sfm::build_obstacles(arena, 5);
    const auto crowd = metrics::uniform_crowd(static_cast<std::size_t>(state.range(0)), 4.0, 4.0, 9);
    std::vector<sfm::Neighbour> neighbours;
    for (std::size_t i = 0; i < crowd.agents.size(); ++i)
        neighbours.push_back({i + 1, crowd.agents[i].position + Vec2{5.0, 4.0}, {0.5, 0.0}});
    sfm::Pedestrian ped;
    ped.position = {7.0, 6.0};
    ped.velocity = {1.0, 0.2};
    const sfm::SfmParams params;
    for (auto _ : state)
        benchmark::DoNotOptimize(sfm::net_force(ped, {15.8, 6.0}, neighbours, obstacles, params));
}
BENCHMARK(BM_NetForce)->Arg(8)->Arg(32)->Arg(128);

void BM_RenderFrame(benchmark::State& state) {
    const auto arena = forum_arena();
    Frame f = metrics::uniform_crowd(static_cast<std::size_t>(state.range(0)), 15.8, 11.86, 4);
    for (auto& a : f.agents) a.speed = 1.3;
    const render::RenderStyle style;
    for (auto _ : state) benchmark::DoNotOptimize(render::render_frame(f, arena, style));
}
BENCHMARK(BM_RenderFrame)->Arg(50)->Arg(150);

void BM_ForumMinute(benchmark::State& state) {
    sfm::Scenario s;
    s.arena = forum_arena();
    s.duration = 60.0;
    for (int o = 1; o <= 11; ++o)
        for (int d = 1; d <= 11; ++d)
            if (o != d) s.routes.probabilities[{o, d}] = 1.0 / 110.0;
    for (int i = 0; i < 139; ++i) s.entries.observations.push_back({i * 59.0 / 139.0, 1 + i % 11});
    for (auto _ : state) benchmark::DoNotOptimize(sfm::integrate(s));
}
BENCHMARK(BM_ForumMinute)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
