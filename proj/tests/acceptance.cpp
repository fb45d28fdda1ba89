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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "relaxha/report.hpp"
#include "relaxha/scenario.hpp"

using namespace relaxha;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("%s criterion %d: %s [%s]\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok)
        ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Exact distribution of a sum of independent discrete uniforms, by
// convolution. Used as the analytic reference for the recovery windows.
struct Pmf {
    Seconds lo = 0;
    std::vector<double> p{1.0};

    static Pmf uniform(Seconds a, Seconds b) {
        Pmf u;
        u.lo = a;
        u.p.assign(static_cast<std::size_t>(b - a + 1), 1.0 / static_cast<double>(b - a + 1));
        return u;
    }
    Pmf operator+(const Pmf& o) const {
        Pmf r;
        r.lo = lo + o.lo;
        r.p.assign(p.size() + o.p.size() - 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i)
            for (std::size_t j = 0; j < o.p.size(); ++j)
                r.p[i + j] += p[i] * o.p[j];
        return r;
    }
    Pmf shift(Seconds s) const {
        Pmf r = *this;
        r.lo += s;
        return r;
    }
    double mean() const {
        double m = 0;
        for (std::size_t i = 0; i < p.size(); ++i)
            m += p[i] * static_cast<double>(lo + static_cast<Seconds>(i));
        return m;
    }
    Seconds hi() const { return lo + static_cast<Seconds>(p.size()) - 1; }
    double mass(Seconds a, Seconds b) const {
        double m = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const Seconds x = lo + static_cast<Seconds>(i);
            if (x >= a && x <= b)
                m += p[i];
        }
        return m;
    }
};

// Crash offset within the scan period plus the staleness wait decides the
// scan that detects; the delay is 70 + (time to the next scan grid point).
Pmf detection_pmf() {
    Pmf d;
    d.p.clear();
    d.lo = 70;
    std::map<Seconds, double> m;
    for (Seconds off = 0; off < 60; ++off) {
        const Seconds stale = 600 + off + 70;
        const Seconds scan = (stale + 59) / 60 * 60;
        m[scan - (600 + off)] += 1.0 / 60.0;
    }
    d.lo = m.begin()->first;
    d.p.assign(static_cast<std::size_t>(m.rbegin()->first - d.lo + 1), 0.0);
    for (const auto& [k, v] : m)
        d.p[static_cast<std::size_t>(k - d.lo)] = v;
    return d;
}

struct Recovery {
    std::vector<Seconds> xs;
    double mean = 0;
    Seconds lo = 0, hi = 0;
    std::size_t unrecovered = 0;
};

Recovery recoveries(const SimReport& r) {
    Recovery out;
    for (const auto& ep : r.episodes) {
        if (auto t = ep.recovery_time())
            out.xs.push_back(*t);
        else
            ++out.unrecovered;
    }
    if (out.xs.empty())
        return out;
    double sum = 0;
    for (auto x : out.xs)
        sum += static_cast<double>(x);
    out.mean = sum / static_cast<double>(out.xs.size());
    out.lo = *std::min_element(out.xs.begin(), out.xs.end());
    out.hi = *std::max_element(out.xs.begin(), out.xs.end());
    return out;
}

void criterion_nondestructive() {
    const auto t0 = std::chrono::steady_clock::now();
    const SimReport r = replicate(Experiment::NonDestructive, 1000, 42);
    const double elapsed = seconds_since(t0);
    const Recovery rec = recoveries(r);
    const auto inside = std::count_if(rec.xs.begin(), rec.xs.end(), [](Seconds x) { return x >= 150 && x <= 210; });
    const double frac = static_cast<double>(inside) / 1000.0;
    const Pmf oracle = detection_pmf() + Pmf::uniform(70, 90);
    const bool ok = rec.xs.size() == 1000 && rec.mean >= 170 && rec.mean <= 190 && rec.lo >= 140 &&
                    rec.hi <= 220 && frac >= 0.90 && elapsed < 10.0 && rec.lo >= oracle.lo &&
                    rec.hi <= oracle.hi();
    verdict(1, ok, "non-destructive recovery distribution",
            fmt("mean %.2f s, range ", rec.mean) + std::to_string(rec.lo) + ".." + std::to_string(rec.hi) +
                fmt(", %.1f%% in [150,210]", 100 * frac) +
                fmt("; analytic mean %.2f, P[150,210] %.3f", oracle.mean(), oracle.mass(150, 210)) +
                ", support " + std::to_string(oracle.lo) + ".." + std::to_string(oracle.hi()) +
                fmt("; %.2f s", elapsed));
}

void criterion_destructive() {
    const auto t0 = std::chrono::steady_clock::now();
    const SimReport r = replicate(Experiment::Destructive, 1000, 42);
    const double elapsed = seconds_since(t0);
    const Recovery rec = recoveries(r);
    const Pmf oracle = detection_pmf() + Pmf::uniform(425, 459);
    const bool ok = rec.xs.size() == 1000 && rec.mean >= 535 && rec.mean <= 550 && rec.lo >= 495 &&
                    rec.hi <= 589 && elapsed < 10.0 && rec.lo >= oracle.lo && rec.hi <= oracle.hi();
    verdict(2, ok, "destructive recovery distribution",
            fmt("mean %.2f s, range ", rec.mean) + std::to_string(rec.lo) + ".." + std::to_string(rec.hi) +
                fmt("; analytic mean %.2f", oracle.mean()) + ", support " + std::to_string(oracle.lo) + ".." +
                std::to_string(oracle.hi()) + fmt("; %.2f s", elapsed));
}

void criterion_detection() {
    const SimReport r = replicate(Experiment::NonDestructive, 1000, 4242);
    double sum = 0;
    Seconds lo = 1 << 30, hi = 0;
    std::size_t n = 0;
    for (const auto& ep : r.episodes) {
        if (!ep.detected_at)
            continue;
        const Seconds d = *ep.detected_at - ep.failure_at;
        sum += static_cast<double>(d);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
        ++n;
    }
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    const Pmf oracle = detection_pmf();
    const bool ok = n == 1000 && mean >= 95 && mean <= 105 && lo >= 70 && hi <= 130;
    verdict(3, ok, "detection delay",
            fmt("mean %.2f s over ", mean) + std::to_string(n) + " episodes, range " + std::to_string(lo) + ".." +
                std::to_string(hi) + fmt("; analytic mean %.2f", oracle.mean()) + ", support " +
                std::to_string(oracle.lo) + ".." + std::to_string(oracle.hi()));
}

Scenario glitch_scenario() {
    std::ifstream in(RELAXHA_SCENARIO_DIR "/power_glitch.json");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_scenario(ss.str(), RELAXHA_SCENARIO_DIR);
}

void criterion_power_glitch() {
    Scenario sc = glitch_scenario();
    std::string detail;
    bool ok = true;
    for (bool reboot : {true, false}) {
        sc.cluster.controller.reboot_step_enabled = reboot;
        std::vector<std::string> placements;
        SimOptions o;
        o.on_scan = [&](const ScanView& v) {
            for (const auto& a : v.actions)
                if (a.vm_id == "gridce" && (a.kind == ActionKind::Restart || a.kind == ActionKind::Reinstall))
                    placements.push_back(a.target_host);
        };
        const SimReport r = run_scenario(sc.cluster, sc.injections, sc.horizon_s, o);
        const Seconds limit = reboot ? 480 : 240;
        std::optional<Seconds> took;
        std::string on;
        for (const auto& ep : r.episodes)
            if (ep.vm_id == "gridce") {
                took = ep.recovery_time();
                on = ep.recovered_on.value_or("-");
            }
        const bool this_ok = took && *took < limit && on == "alfa04" &&
                             placements == std::vector<std::string>{"alfa04"};
        ok = ok && this_ok;
        detail += std::string(reboot ? "reboot step on: " : "reboot step off: ") +
                  (took ? std::to_string(*took) : std::string("unrecovered")) + " s on " + on + " (limit " +
                  std::to_string(limit) + ")" + (reboot ? "; " : "");
    }
    verdict(4, ok, "power-glitch replay restores gridce on alfa04", detail);
}

// ---- randomized FSM properties ------------------------------------------------

struct RandomScenario {
    ClusterConfig cfg;
    std::vector<FailureInjection> injections;
    Seconds horizon = 0;
};

RandomScenario random_scenario(std::mt19937_64& rng) {
    auto pick = [&](auto n) { return static_cast<decltype(n)>(rng() % static_cast<std::uint64_t>(n)); };
    RandomScenario s;
    ClusterConfig& cfg = s.cfg;
    const int hosts = 1 + pick(6);
    const int vms = pick(21);
    cfg.controller.scan_period_s = pick(2) ? 60 : 30;
    const Seconds scan = cfg.controller.scan_period_s;
    cfg.controller.reboot_step_enabled = pick(4) != 0;
    cfg.controller.t1_s = pick(5) == 0 ? 0 : scan * (1 + pick(Seconds{4}));
    cfg.controller.t2_s = pick(5) == 0 ? 0 : scan * (1 + pick(Seconds{4}));
    cfg.controller.reinstall_timeout_s = 600;
    cfg.controller.max_cycles = 1 + pick(3);
    cfg.timing.controller_phase_s = pick(scan);
    cfg.timing.rng_seed = rng();

    for (int h = 0; h < hosts; ++h) {
        PhysicalHost host;
        host.host_id = "h" + std::to_string(h);
        host.cpu_count = 1 + pick(8);
        host.ram_mb = 4096;
        host.load_threshold = 1.0 + static_cast<double>(pick(16)) / 2.0;
        cfg.hosts.push_back(host);
    }
    BootProfile p;
    p.name = "guest";
    cfg.profiles.emplace(p.name, p);
    for (int v = 0; v < vms; ++v) {
        VirtualMachine vm;
        vm.vm_id = "v" + std::to_string(v);
        vm.mac = MacAddress(0x00163e000000ull + static_cast<std::uint64_t>(v));
        vm.bound_host = "h" + std::to_string(pick(hosts));
        vm.boot_profile = p.name;
        vm.reinstall_allowed = pick(4) != 0;
        vm.load_contribution = 0.25 * static_cast<double>(1 + pick(8));
        cfg.vms.push_back(vm);
    }

    s.horizon = 3000 + pick(Seconds{3000});
    const int n = pick(7);
    for (int i = 0; i < n; ++i) {
        const Seconds at = pick(s.horizon - 600);
        const std::string host = "h" + std::to_string(pick(hosts));
        switch (pick(5)) {
        case 0:
            if (vms)
                s.injections.push_back(FailureInjection::nondestructive_crash(at, "v" + std::to_string(pick(vms))));
            break;
        case 1:
            if (vms)
                s.injections.push_back(FailureInjection::destructive_crash(at, "v" + std::to_string(pick(vms))));
            break;
        case 2: s.injections.push_back(FailureInjection::host_failure(at, host)); break;
        case 3: s.injections.push_back(FailureInjection::power_glitch(at, {host})); break;
        default:
            s.injections.push_back(FailureInjection::load_spike(at, host, static_cast<double>(pick(10)),
                                                                60 + pick(Seconds{1500})));
        }
    }
    return s;
}

struct PropertyCounts {
    long order = 0, suppression = 0, threshold = 0, deadline = 0, conservation = 0, crashes = 0;
    long actions = 0, placements = 0;
};

// Controller-side episode: everything between a record leaving Healthy and
// returning to it.
struct EpisodeTrack {
    std::vector<std::pair<Seconds, ActionKind>> steps;  // Defers excluded
};

void check_scenario(const RandomScenario& s, PropertyCounts& c) {
    const ControllerParams& p = s.cfg.controller;
    std::map<std::string, EpisodeTrack> open;
    std::map<std::string, bool> reinstall_ok;
    for (const auto& v : s.cfg.vms)
        reinstall_ok[v.vm_id] = v.reinstall_allowed;

    SimOptions o;
    o.check_invariants = true;
    o.on_scan = [&](const ScanView& v) {
        // Independent view in which each placement is charged in order.
        std::map<std::string, HostView> view;
        for (const auto& h : v.placement)
            view[h.host_id] = h;
        std::map<std::string, std::string> claimed;  // vm -> host charged within this scan
        std::set<std::string> released;

        for (const Action& a : v.actions) {
            ++c.actions;
            const VirtualMachine& vm = v.state.vm(a.vm_id);
            if (a.kind == ActionKind::Reinstall && !reinstall_ok[a.vm_id])
                ++c.suppression;

            const bool placing = a.kind == ActionKind::Restart || a.kind == ActionKind::Reinstall;
            // A placed or deferred VM gives up whatever it held before.
            if (placing || a.kind == ActionKind::Defer) {
                if (auto it = claimed.find(a.vm_id); it != claimed.end()) {
                    view[it->second].load -= vm.load_contribution;
                    view[it->second].vm_count -= 1;
                    claimed.erase(it);
                } else if (released.insert(a.vm_id).second && vm.bound_host) {
                    HostView& own = view[*vm.bound_host];
                    const bool counted = own.power_state == PowerState::On &&
                                         (vm.lifecycle == Lifecycle::Running || vm.lifecycle == Lifecycle::Booting ||
                                          vm.lifecycle == Lifecycle::Installing);
                    if (counted)
                        own.load -= vm.load_contribution;
                    own.vm_count -= 1;
                }
            }
            if (placing) {
                ++c.placements;
                HostView& target = view[a.target_host];
                if (target.power_state != PowerState::On || !target.monitored_up ||
                    !(target.load + vm.load_contribution < target.load_threshold))
                    ++c.threshold;
                target.load += vm.load_contribution;
                target.vm_count += 1;
                claimed[a.vm_id] = a.target_host;
            }
            if (a.kind == ActionKind::Defer)
                continue;

            EpisodeTrack& ep = open[a.vm_id];
            if (!ep.steps.empty()) {
                const auto [prev_t, prev] = ep.steps.back();
                const Seconds waited = v.now - prev_t;
                const Seconds need = prev == ActionKind::Reboot    ? p.t1_s
                                     : prev == ActionKind::Restart ? p.t2_s
                                                                   : p.reinstall_timeout_s;
                if (waited < need)
                    ++c.deadline;
            }
            // Order: Reboot only as the very first step; a Reinstall only
            // directly after a Restart.
            if (a.kind == ActionKind::Reboot && !ep.steps.empty())
                ++c.order;
            if (a.kind == ActionKind::Reinstall && (ep.steps.empty() || ep.steps.back().second != ActionKind::Restart))
                ++c.order;
            if (a.kind == ActionKind::Restart && !ep.steps.empty() && ep.steps.back().second == ActionKind::Restart &&
                reinstall_ok[a.vm_id])
                ++c.order;
            ep.steps.emplace_back(v.now, a.kind);
        }
        for (const auto& [id, rec] : v.records_after)
            if (std::holds_alternative<phase::Healthy>(rec.phase))
                open.erase(id);
    };
    const std::size_t total = s.cfg.vms.size();
    o.on_event = [&](Seconds, const ClusterState& st) {
        std::set<std::string> seen;
        std::size_t hosted = 0;
        for (const auto& [hid, h] : st.hosts)
            for (const auto& vid : h.hosted_vms) {
                ++hosted;
                if (!seen.insert(vid).second)
                    ++c.conservation;
            }
        for (const auto& [vid, vm] : st.vms)
            if (!vm.bound_host && !seen.insert(vid).second)
                ++c.conservation;
        if (st.vms.size() != total || seen.size() != total)
            ++c.conservation;
    };
    try {
        run_scenario(s.cfg, s.injections, s.horizon, o);
    } catch (const std::exception&) {
        ++c.crashes;
    }
}

void criterion_fsm_properties() {
    std::mt19937_64 rng(20060905);
    PropertyCounts c;
    const int runs = 10000;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < runs; ++i)
        check_scenario(random_scenario(rng), c);
    const bool ok = c.order == 0 && c.suppression == 0 && c.threshold == 0 && c.deadline == 0 &&
                    c.conservation == 0 && c.crashes == 0 && c.placements > 0;
    verdict(5, ok, "FSM properties over randomized scenarios",
            std::to_string(runs) + " scenarios, " + std::to_string(c.actions) + " actions (" +
                std::to_string(c.placements) + " placements); violations: order " + std::to_string(c.order) +
                ", reinstall " + std::to_string(c.suppression) + ", threshold " + std::to_string(c.threshold) +
                ", deadline " + std::to_string(c.deadline) + ", conservation " + std::to_string(c.conservation) +
                ", aborted runs " + std::to_string(c.crashes) + fmt("; %.1f s", seconds_since(t0)));
}

// ---- placement oracles --------------------------------------------------------

std::optional<std::string> oracle_choose(const std::vector<HostView>& view, double contribution) {
    std::vector<std::tuple<double, int, std::string>> keys;
    for (const auto& h : view)
        if (h.power_state == PowerState::On && h.monitored_up && h.load + contribution < h.load_threshold)
            keys.emplace_back(h.load, h.vm_count, h.host_id);
    if (keys.empty())
        return std::nullopt;
    std::sort(keys.begin(), keys.end());
    return std::get<2>(keys.front());
}

PlacementView random_view(std::mt19937_64& rng) {
    PlacementView view;
    const int n = static_cast<int>(rng() % 7);
    std::set<std::string> used;
    for (int i = 0; i < n; ++i) {
        HostView h;
        h.host_id = "alfa0" + std::to_string(rng() % 9);
        if (!used.insert(h.host_id).second)
            continue;
        h.power_state = rng() % 7 == 0 ? PowerState::Off : PowerState::On;
        h.monitored_up = rng() % 7 != 0;
        h.load = static_cast<double>(rng() % 17) / 2.0;
        h.vm_count = static_cast<int>(rng() % 5);
        h.load_threshold = static_cast<double>(1 + rng() % 12);
        view.push_back(h);
    }
    return view;
}

void criterion_placement() {
    std::mt19937_64 rng(1337);
    int choose_mismatch = 0, failover_mismatch = 0;
    for (int i = 0; i < 10000; ++i) {
        const PlacementView view = random_view(rng);
        VirtualMachine vm;
        vm.vm_id = "x";
        vm.load_contribution = static_cast<double>(rng() % 8) / 2.0;
        if (choose_host(view, vm) != oracle_choose(view, vm.load_contribution))
            ++choose_mismatch;
    }
    for (int i = 0; i < 1000; ++i) {
        PlacementView view = random_view(rng);
        HostView dead;
        dead.host_id = "failed";
        dead.monitored_up = false;
        dead.power_state = rng() % 2 ? PowerState::Off : PowerState::On;
        dead.load_threshold = 8.0;
        std::vector<VirtualMachine> hosted;
        const int n = static_cast<int>(rng() % 9);
        for (int k = 0; k < n; ++k) {
            VirtualMachine vm;
            vm.vm_id = "vm" + std::to_string(rng() % 100);
            vm.bound_host = "failed";
            vm.lifecycle = Lifecycle::Unresponsive;
            vm.load_contribution = static_cast<double>(1 + rng() % 6) / 2.0;
            if (std::none_of(hosted.begin(), hosted.end(), [&](const auto& o) { return o.vm_id == vm.vm_id; }))
                hosted.push_back(vm);
        }
        dead.vm_count = static_cast<int>(hosted.size());
        view.push_back(dead);

        // Incremental greedy: place in vm_id order, charging each placement.
        std::vector<HostView> working = view;
        std::vector<VirtualMachine> order = hosted;
        std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.vm_id < b.vm_id; });
        std::vector<Action> expect;
        for (const auto& vm : order) {
            working.back().vm_count -= 1;
            if (auto t = oracle_choose(working, vm.load_contribution)) {
                for (auto& h : working)
                    if (h.host_id == *t) {
                        h.load += vm.load_contribution;
                        h.vm_count += 1;
                    }
                expect.push_back(Action::restart(vm.vm_id, *t));
            } else {
                expect.push_back(Action::defer(vm.vm_id));
            }
        }
        if (plan_host_failover("failed", hosted, view) != expect)
            ++failover_mismatch;
    }
    verdict(6, choose_mismatch == 0 && failover_mismatch == 0, "placement agrees with oracles",
            "choose_host mismatches " + std::to_string(choose_mismatch) + "/10000, failover mismatches " +
                std::to_string(failover_mismatch) + "/1000");
}

// ---- determinism --------------------------------------------------------------

struct Outputs {
    std::string trace, report, monitor;
    bool operator==(const Outputs&) const = default;
};

Outputs run_outputs(const ClusterConfig& cfg, const std::vector<FailureInjection>& inj, Seconds horizon) {
    std::ostringstream trace;
    std::string monitor;
    SimOptions o;
    o.trace = &trace;
    o.monitor_log = [&](const MonitorSnapshot& s) { monitor += serialize_snapshot(s); };
    const SimReport r = run_scenario(cfg, inj, horizon, o);
    return {trace.str(), report_csv(r.aggregates) + episodes_csv(r.episodes), monitor};
}

void criterion_determinism() {
    int differing = 0, runs = 0;
    const Scenario glitch = glitch_scenario();
    if (!(run_outputs(glitch.cluster, glitch.injections, glitch.horizon_s) ==
          run_outputs(glitch.cluster, glitch.injections, glitch.horizon_s)))
        ++differing;
    ++runs;
    std::mt19937_64 rng(99);
    for (int i = 0; i < 200; ++i, ++runs) {
        const RandomScenario s = random_scenario(rng);
        if (!(run_outputs(s.cfg, s.injections, s.horizon) == run_outputs(s.cfg, s.injections, s.horizon)))
            ++differing;
    }
    for (auto e : {Experiment::NonDestructive, Experiment::Destructive}) {
        ++runs;
        const SimReport a = replicate(e, 200, 7, 1), b = replicate(e, 200, 7, 3);
        if (!(report_csv(a.aggregates) + episodes_csv(a.episodes) ==
              report_csv(b.aggregates) + episodes_csv(b.episodes)))
            ++differing;
    }
    verdict(7, differing == 0, "same seed gives byte-identical outputs",
            std::to_string(runs) + " paired runs (trace, report, monitor log), " + std::to_string(differing) +
                " differing");
}

}  // namespace

int main() {
    criterion_nondestructive();
    criterion_destructive();
    criterion_detection();
    criterion_power_glitch();
    criterion_fsm_properties();
    criterion_placement();
    criterion_determinism();
    std::printf("%s: %d failing\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
