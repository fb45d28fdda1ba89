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

#include <map>
#include <string>
#include <vector>

#include "relaxha/cluster.hpp"

namespace relaxha {

/// Install parameters for one OS + middleware combination.
struct BootProfile {
    std::string name;
    Seconds pxe_setup_s = 10;
    Seconds boot_s = 70;
    Seconds install_s = 352;
    /// Middleware tag handed to the post-install step; recorded in traces only.
    std::string middleware;

    friend bool operator==(const BootProfile&, const BootProfile&) = default;
};

enum class BootMode { LocalBoot, Install };

/// One segment of a boot: PXE network setup, OS installation, or OS boot.
struct BootSegment {
    enum class Kind { PxeSetup, Install, Boot } kind;
    Seconds duration_s;
};

struct BootPlan {
    BootMode mode = BootMode::LocalBoot;
    std::string profile;  // set for Install plans
    std::vector<BootSegment> segments;

    Seconds nominal_total() const;
};

class UnknownProfileError : public std::invalid_argument {
public:
    explicit UnknownProfileError(const std::string& name)
        : std::invalid_argument("unknown boot profile: " + name), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// The pxelinux.cfg view of the provisioning server: which MACs install on
/// their next boot. MACs without an entry boot from local disk.
///
/// Bindings change only through bind_install and complete_install (the
/// one-shot revert).
class PxeMap {
public:
    PxeMap() = default;
    explicit PxeMap(std::map<std::string, BootProfile> profiles);

    /// Points `mac` at the install configuration for `profile_name`.
    void bind_install(MacAddress mac, const std::string& profile_name);

    /// Boot plan for the next boot of `mac`. `local_profile` supplies the
    /// PXE and boot timings of a LocalBoot when the MAC is not bound to an
    /// install.
    BootPlan boot_outcome(MacAddress mac, const std::string& local_profile) const;

    /// Called when an install boot finishes: the MAC reverts to LocalBoot.
    void complete_install(MacAddress mac);

    BootMode mode(MacAddress mac) const;
    const std::map<MacAddress, std::string>& install_bindings() const { return installs_; }
    const BootProfile& profile(const std::string& name) const;

    friend bool operator==(const PxeMap&, const PxeMap&) = default;

private:
    std::map<std::string, BootProfile> profiles_;
    std::map<MacAddress, std::string> installs_;
};

}  // namespace relaxha
