#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nde/sim/episode.hpp"
#include "nde/sim/init.hpp"
#include "nde/sim/policy.hpp"
#include "nde/sim/rng.hpp"
#include "nde/sim/world.hpp"

namespace nde::sim {

/// Runs job(i) for i in [0, n) on `workers` threads. Jobs write to their own
/// slot, so results do not depend on scheduling. The first exception thrown
/// by any job is rethrown after all threads stop.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& job) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

enum class Environment { Nde, IdmBaseline };

inline const char* to_string(Environment e) { return e == Environment::Nde ? "nde" : "idm"; }

struct AvEpisode {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  std::size_t vehicles = 0;
  AvOutcome outcome;
};

/// AV testing episodes: each starts from a fresh data-driven initial state
/// and hands one randomly chosen vehicle to the AV controller.
template <ModelSource Source>
std::vector<AvEpisode> run_av_episodes(const SimConfig& cfg, const Source& source,
                                       const InitDistributions& init, Environment env,
                                       std::size_t episodes, std::uint64_t master_seed,
                                       unsigned workers = 1) {
  cfg.validate();
  std::vector<AvEpisode> out(episodes);
  const NdePolicy<Source> nde_policy(source, cfg);
  const IdmMobilPolicy idm_policy(cfg);
  parallel_for(episodes, workers, [&](std::size_t i) {
    AvEpisode& e = out[i];
    e.index = i;
    e.seed = derive_seed(master_seed, i);
    Rng rng(e.seed);
    World w(cfg);
    init_world(w, init, rng);
    e.vehicles = w.vehicles().size();
    const auto av = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(e.vehicles));
    if (env == Environment::Nde) {
      e.outcome = run_av(w, av, idm_policy, nde_policy, rng);
    } else {
      e.outcome = run_av(w, av, idm_policy, idm_policy, rng);
    }
  });
  return out;
}

/// Statistics-mode episodes, merged in episode order.
template <ModelSource Source>
TrafficStats run_traffic_episodes(const SimConfig& cfg, const Source& source,
                                  const InitDistributions& init, std::size_t episodes,
                                  std::uint64_t master_seed, unsigned workers = 1) {
  cfg.validate();
  std::vector<TrafficStats> per(episodes, make_traffic_stats(cfg));
  const NdePolicy<Source> policy(source, cfg);
  parallel_for(episodes, workers, [&](std::size_t i) {
    Rng rng(derive_seed(master_seed, i));
    World w(cfg);
    init_world(w, init, rng);
    per[i] = run_traffic(w, policy, rng);
  });
  TrafficStats total = make_traffic_stats(cfg);
  for (const auto& s : per) total.merge(s);
  return total;
}

}  // namespace nde::sim
