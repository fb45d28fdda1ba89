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

#include <doctest.h>

#include "relaxha/provisioner.hpp"

using namespace relaxha;

namespace {

PxeMap default_map() {
    BootProfile p;
    p.name = "sl-grid";
    p.middleware = "lcg";
    return PxeMap({{p.name, p}});
}

const MacAddress kGridce = *MacAddress::parse("00:16:3e:0a:00:01");

Seconds segment_sum(const BootPlan& plan) {
    Seconds total = 0;
    for (const auto& s : plan.segments) {
        CHECK(s.duration_s > 0);
        total += s.duration_s;
    }
    return total;
}

}  // namespace

TEST_CASE("local boot takes 80 s nominal") {
    const PxeMap map = default_map();
    const BootPlan plan = map.boot_outcome(kGridce, "sl-grid");
    CHECK(plan.mode == BootMode::LocalBoot);
    CHECK(plan.nominal_total() == 80);
    CHECK(segment_sum(plan) == 80);
    CHECK(map.mode(MacAddress(0x1234)) == BootMode::LocalBoot);
}

TEST_CASE("install boot takes 442 s nominal") {
    PxeMap map = default_map();
    map.bind_install(kGridce, "sl-grid");
    const BootPlan plan = map.boot_outcome(kGridce, "sl-grid");
    CHECK(plan.mode == BootMode::Install);
    CHECK(plan.profile == "sl-grid");
    CHECK(plan.nominal_total() == 442);
    CHECK(segment_sum(plan) == 442);
    REQUIRE(plan.segments.size() == 4);
    CHECK(plan.segments[1].kind == BootSegment::Kind::Install);
    CHECK(plan.segments[1].duration_s == 352);
}

TEST_CASE("binding twice is idempotent") {
    PxeMap map = default_map();
    map.bind_install(kGridce, "sl-grid");
    const PxeMap once = map;
    map.bind_install(kGridce, "sl-grid");
    CHECK(map == once);
}

TEST_CASE("unknown profile is named in the error") {
    PxeMap map = default_map();
    try {
        map.bind_install(kGridce, "nope");
        FAIL("expected UnknownProfileError");
    } catch (const UnknownProfileError& e) {
        CHECK(e.name() == "nope");
        CHECK(std::string(e.what()).find("nope") != std::string::npos);
    }
    CHECK(map.install_bindings().empty());
}

TEST_CASE("install binding is one-shot") {
    PxeMap map = default_map();
    map.bind_install(kGridce, "sl-grid");
    std::vector<BootMode> modes;
    for (int i = 0; i < 2; ++i) {
        const BootPlan plan = map.boot_outcome(kGridce, "sl-grid");
        modes.push_back(plan.mode);
        if (plan.mode == BootMode::Install)
            map.complete_install(kGridce);
    }
    CHECK(modes == std::vector<BootMode>{BootMode::Install, BootMode::LocalBoot});
}
