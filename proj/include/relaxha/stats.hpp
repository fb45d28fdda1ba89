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

#include <string>
#include <vector>

#include "relaxha/cluster.hpp"

namespace relaxha {

struct HistogramBin {
    Seconds bin_start_s = 0;
    int count = 0;

    friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

/// Recovery-time statistics for one failure kind. Only recovered episodes
/// enter the moments and the histogram; the rest are counted apart.
struct KindSummary {
    std::string kind;
    int count = 0;
    int unrecovered = 0;
    double mean_s = 0.0;
    double stddev_s = 0.0;  // population standard deviation
    Seconds min_s = 0;
    Seconds max_s = 0;
    std::vector<HistogramBin> histogram;

    friend bool operator==(const KindSummary&, const KindSummary&) = default;
};

/// One row per failure kind present, sorted by kind name.
using Summary = std::vector<KindSummary>;

}  // namespace relaxha
