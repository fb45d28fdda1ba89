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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relaxha/engine.hpp"
#include "relaxha/stats.hpp"

namespace relaxha {

/// Per-kind moments and a fixed-width histogram of recovery times. Bins are
/// aligned to multiples of `bin_width_s` and span the observed range.
Summary summarize(std::span<const Episode> episodes, Seconds bin_width_s);

inline Summary summarize(const SimReport& report, Seconds bin_width_s) {
    return summarize(report.episodes, bin_width_s);
}

/// `kind,count,mean_s,stddev_s,min_s,max_s`
std::string report_csv(const Summary& summary);

/// `bin_start_s,count`
std::string histogram_csv(const KindSummary& row);

/// One line per episode; the format `report` reads back.
std::string episodes_csv(std::span<const Episode> episodes);
std::vector<Episode> parse_episodes_csv(std::string_view text);

/// Rebuilds episodes from a scenario trace (episode_open, detected, action,
/// recovered records). Throws std::runtime_error on malformed lines.
std::vector<Episode> parse_trace(std::string_view text);

/// Free-form summary for people; not meant to be parsed.
std::string summary_text(const Summary& summary, std::span<const Episode> episodes);

}  // namespace relaxha
