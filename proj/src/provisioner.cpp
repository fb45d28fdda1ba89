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

#include "relaxha/provisioner.hpp"

#include <numeric>

namespace relaxha {

Seconds BootPlan::nominal_total() const {
    return std::accumulate(segments.begin(), segments.end(), Seconds{0},
                           [](Seconds acc, const BootSegment& s) { return acc + s.duration_s; });
}

PxeMap::PxeMap(std::map<std::string, BootProfile> profiles) : profiles_(std::move(profiles)) {}

const BootProfile& PxeMap::profile(const std::string& name) const {
    auto it = profiles_.find(name);
    if (it == profiles_.end())
        throw UnknownProfileError(name);
    return it->second;
}

void PxeMap::bind_install(MacAddress mac, const std::string& profile_name) {
    (void)profile(profile_name);
    installs_[mac] = profile_name;
}

BootPlan PxeMap::boot_outcome(MacAddress mac, const std::string& local_profile) const {
    BootPlan plan;
    if (auto it = installs_.find(mac); it != installs_.end()) {
        const BootProfile& p = profile(it->second);
        plan.mode = BootMode::Install;
        plan.profile = p.name;
        // The installer reboots into the new system, which again goes
        // through PXE before handing over to the local disk.
        plan.segments = {{BootSegment::Kind::PxeSetup, p.pxe_setup_s},
                         {BootSegment::Kind::Install, p.install_s},
                         {BootSegment::Kind::PxeSetup, p.pxe_setup_s},
                         {BootSegment::Kind::Boot, p.boot_s}};
        return plan;
    }
    // Unknown profiles fall back to the stock timings.
    BootProfile stock;
    const BootProfile& p = profiles_.count(local_profile) ? profiles_.at(local_profile) : stock;
    plan.mode = BootMode::LocalBoot;
    plan.segments = {{BootSegment::Kind::PxeSetup, p.pxe_setup_s},
                     {BootSegment::Kind::Boot, p.boot_s}};
    return plan;
}

void PxeMap::complete_install(MacAddress mac) { installs_.erase(mac); }

BootMode PxeMap::mode(MacAddress mac) const {
    return installs_.count(mac) ? BootMode::Install : BootMode::LocalBoot;
}

}  // namespace relaxha
