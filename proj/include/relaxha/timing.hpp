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
#include <random>

#include "relaxha/cluster.hpp"

namespace relaxha {

struct TimingParams {
    Seconds boot_jitter_s = 10;
    Seconds reinstall_jitter_s = 17;
    /// Offset of the controller scan grid within a scan period.
    Seconds controller_phase_s = 0;
    std::uint64_t rng_seed = 1;
};

/// The engine's only randomness source. mt19937_64 output is fixed by the
/// standard, so runs are reproducible across toolchains.
using Rng = std::mt19937_64;

/// Uniform integer draw from [nominal - jitter, nominal + jitter]. Consumes
/// exactly one engine output, including when jitter is zero.
Seconds sample_duration(Seconds nominal_s, Seconds jitter_s, Rng& rng);

}  // namespace relaxha
