/*
 * Copyright 2026 The relaxha Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relaxha/config.hpp"
#include "relaxha/engine.hpp"

namespace relaxha {

struct Scenario {
    ClusterConfig cluster;
    std::vector<FailureInjection> injections;
    Seconds horizon_s = 0;
    int replications = 1;
    /// Overrides cluster.timing.rng_seed when present.
    std::optional<std::uint64_t> seed;
};

/// Parses a scenario document. `cluster` is either an inline cluster
/// configuration or a path, resolved against `base_dir`. Throws ConfigError;
/// a cluster path that cannot be read is reported as std::ios_base::failure.
Scenario load_scenario(std::string_view text, const std::filesystem::path& base_dir = ".");

/// Seed of replication `index` in a batch started from `base_seed`.
constexpr std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t index) {
    return base_seed + index;
}

/// Runs replications of one scenario. Replication i uses
/// replication_seed(seed, i); episodes are merged in replication order and
/// renumbered. `make_options` may return per-replication options (traces).
SimReport run_replications(const Scenario& scenario, std::uint64_t seed,
                           const std::function<SimOptions(int)>& make_options = {});

// ---- crash experiments ----------------------------------------------------

enum class Experiment { NonDestructive, Destructive };

std::optional<Experiment> experiment_from_string(std::string_view name);

/// A versioned, named parameter set. Acceptance numbers are pinned to these.
struct ExperimentPreset {
    std::string name;
    ClusterConfig cluster;
    FailureKind crash = FailureKind::NonDestructiveCrash;
    std::string victim;
    /// Crashes land uniformly in [crash_window_start_s, + scan_period_s).
    Seconds crash_window_start_s = 600;
    Seconds horizon_s = 4000;
};

ExperimentPreset preset(Experiment experiment);

/// Crash instant of episode `index`: the window start plus an offset drawn
/// from the episode seed, independent of the engine's duration draws.
Seconds crash_time(const ExperimentPreset& preset, std::uint64_t episode_seed);

/// `n` independent crash episodes, each on a fresh cluster copy with seed
/// replication_seed(seed, i). Work is split across `workers` threads (0 =
/// hardware concurrency); output order does not depend on it.
SimReport replicate(Experiment experiment, int n, std::uint64_t seed, unsigned workers = 0);

}  // namespace relaxha
