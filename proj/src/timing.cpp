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

#include "relaxha/timing.hpp"

#include <stdexcept>

namespace relaxha {

Seconds sample_duration(Seconds nominal_s, Seconds jitter_s, Rng& rng) {
    if (jitter_s < 0 || jitter_s >= nominal_s)
        throw std::invalid_argument("sample_duration: need 0 <= jitter < nominal");
    const std::uint64_t span = static_cast<std::uint64_t>(2 * jitter_s + 1);
    // Modulo bias is below 2^-50 for any realistic span; a rejection loop
    // would break the one-draw contract.
    const std::uint64_t draw = rng() % span;
    return nominal_s - jitter_s + static_cast<Seconds>(draw);
}

}  // namespace relaxha
