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

#include "relaxha/engine.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <queue>
#include <sstream>

#include "relaxha/provisioner.hpp"
#include "relaxha/report.hpp"
#include "relaxha/timing.hpp"

namespace relaxha {

std::string_view to_string(FailureKind k) {
    switch (k) {
    case FailureKind::NonDestructiveCrash: return "nondestructive_crash";
    case FailureKind::DestructiveCrash: return "destructive_crash";
    case FailureKind::PhysicalHostFailure: return "host_failure";
    case FailureKind::PowerGlitch: return "power_glitch";
    case FailureKind::LoadSpike: return "load_spike";
    }
    return "?";
}

std::optional<FailureKind> failure_kind_from_string(std::string_view name) {
    for (auto k : {FailureKind::NonDestructiveCrash, FailureKind::DestructiveCrash,
                   FailureKind::PhysicalHostFailure, FailureKind::PowerGlitch, FailureKind::LoadSpike})
        if (to_string(k) == name)
            return k;
    return std::nullopt;
}

FailureInjection FailureInjection::nondestructive_crash(Seconds at, std::string vm) {
    return {at, FailureKind::NonDestructiveCrash, {std::move(vm)}, 0.0, 0};
}
FailureInjection FailureInjection::destructive_crash(Seconds at, std::string vm) {
    return {at, FailureKind::DestructiveCrash, {std::move(vm)}, 0.0, 0};
}
FailureInjection FailureInjection::host_failure(Seconds at, std::string host) {
    return {at, FailureKind::PhysicalHostFailure, {std::move(host)}, 0.0, 0};
}
FailureInjection FailureInjection::power_glitch(Seconds at, std::vector<std::string> hosts) {
    return {at, FailureKind::PowerGlitch, std::move(hosts), 0.0, 0};
}
FailureInjection FailureInjection::load_spike(Seconds at, std::string host, double extra, Seconds duration) {
    return {at, FailureKind::LoadSpike, {std::move(host)}, extra, duration};
}

namespace {

enum class EventKind {
    HeartbeatDue,
    ControllerScan,
    InjectFailure,
    BootComplete,  // VM boot, or a physical host when `host_event` is set
    InstallComplete,
    LoadSpikeEnd,
};

struct Event {
    Seconds at = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::HeartbeatDue;
    std::string target;
    bool host_event = false;
    std::uint64_t generation = 0;
    std::size_t index = 0;
    double amount = 0.0;
};

struct LaterFirst {
    bool operator()(const Event& a, const Event& b) const {
        return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
};

std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

class Simulation {
public:
    Simulation(const ClusterConfig& config, std::vector<FailureInjection> injections, Seconds horizon,
               const SimOptions& options)
        : config_(config),
          injections_(std::move(injections)),
          horizon_(horizon),
          options_(options),
          state_(initial_state(config)),
          monitor_(config.telemetry),
          pxe_(config.profiles),
          rng_(config.timing.rng_seed) {
        validate_injections();
    }

    SimReport run() {
        trace(0, "start seed=" + std::to_string(config_.timing.rng_seed) +
                     " hosts=" + std::to_string(state_.hosts.size()) +
                     " vms=" + std::to_string(state_.vms.size()) + " horizon=" + std::to_string(horizon_));
        for (const auto& [id, h] : state_.hosts)
            monitor_.record_heartbeat(id, 0, host_load(state_, id));
        for (const auto& [id, v] : state_.vms)
            monitor_.record_heartbeat(id, 0, 0.0);

        schedule({.at = 0, .kind = EventKind::HeartbeatDue});
        schedule({.at = config_.timing.controller_phase_s, .kind = EventKind::ControllerScan});
        std::stable_sort(injections_.begin(), injections_.end(),
                         [](const auto& a, const auto& b) { return a.at < b.at; });
        for (std::size_t i = 0; i < injections_.size(); ++i)
            schedule({.at = injections_[i].at, .kind = EventKind::InjectFailure, .index = i});

        Seconds last_at = 0;
        std::uint64_t last_seq = 0;
        while (!queue_.empty() && queue_.top().at <= horizon_) {
            Event ev = queue_.top();
            queue_.pop();
            RELAXHA_CHECK(ev.at > last_at || (ev.at == last_at && ev.seq >= last_seq),
                          "event order violated");
            last_at = ev.at;
            last_seq = ev.seq;
            state_.clock = ev.at;
            dispatch(ev);
            if (options_.check_invariants)
                state_.check_invariants();
            if (options_.on_event)
                options_.on_event(ev.at, state_);
        }

        SimReport report;
        int unrecovered = 0;
        for (auto& ep : episodes_) {
            if (!ep.recovered_at)
                ++unrecovered;
            report.episodes.push_back(std::move(ep));
        }
        trace(horizon_, "end episodes=" + std::to_string(report.episodes.size()) +
                            " unrecovered=" + std::to_string(unrecovered));
        report.aggregates = summarize(report.episodes, SimReport::kDefaultBinWidth);
        return report;
    }

private:
    struct VmRuntime {
        bool destroyed = false;
        std::uint64_t generation = 0;
        std::optional<std::size_t> open_episode;
        std::optional<Seconds> pending_recovery;
    };

    void validate_injections() {
        for (const auto& inj : injections_) {
            if (inj.at < 0 || inj.at > horizon_)
                throw std::invalid_argument("injection at " + std::to_string(inj.at) +
                                            " outside [0, horizon]");
            if (inj.targets.empty())
                throw std::invalid_argument("injection without target");
            const bool vm_target = inj.kind == FailureKind::NonDestructiveCrash ||
                                   inj.kind == FailureKind::DestructiveCrash;
            if (vm_target && inj.targets.size() != 1)
                throw std::invalid_argument("crash injections take exactly one vm");
            if (inj.kind == FailureKind::LoadSpike && (inj.duration_s < 1 || !(inj.extra_load >= 0)))
                throw std::invalid_argument("load spike needs duration_s >= 1 and extra_load >= 0");
            for (const auto& t : inj.targets)
                (void)(vm_target ? static_cast<const void*>(&state_.vm(t))
                                 : static_cast<const void*>(&state_.host(t)));
        }
    }

    void schedule(Event ev) {
        ev.seq = next_seq_++;
        queue_.push(std::move(ev));
    }

    void trace(Seconds t, const std::string& what) {
        if (options_.trace)
            *options_.trace << t << ' ' << what << '\n';
    }

    void dispatch(const Event& ev) {
        switch (ev.kind) {
        case EventKind::HeartbeatDue: heartbeats(ev.at); break;
        case EventKind::ControllerScan: scan(ev.at); break;
        case EventKind::InjectFailure: inject(ev.at, injections_[ev.index]); break;
        case EventKind::BootComplete:
            if (ev.host_event)
                host_boot_complete(ev);
            else
                vm_boot_complete(ev, false);
            break;
        case EventKind::InstallComplete: vm_boot_complete(ev, true); break;
        case EventKind::LoadSpikeEnd:
            state_.extra_load[ev.target] -= ev.amount;
            if (state_.extra_load[ev.target] <= 1e-12)
                state_.extra_load.erase(ev.target);
            trace(ev.at, "load_spike_end " + ev.target + " " + fmt(ev.amount));
            break;
        }
    }

    bool responsive(const VirtualMachine& v) const {
        return v.lifecycle == Lifecycle::Running && v.bound_host &&
               state_.host(*v.bound_host).power_state == PowerState::On;
    }

    void heartbeats(Seconds now) {
        int count = 0;
        for (const auto& [id, h] : state_.hosts) {
            if (h.power_state != PowerState::On)
                continue;
            monitor_.record_heartbeat(id, now, host_load(state_, id));
            ++count;
        }
        for (const auto& [id, v] : state_.vms) {
            if (!responsive(v))
                continue;
            monitor_.record_heartbeat(id, now, v.load_contribution);
            ++count;
        }
        trace(now, "heartbeat " + std::to_string(count));
        schedule({.at = now + config_.telemetry.heartbeat_period_s, .kind = EventKind::HeartbeatDue});
    }

    // ---- failures ---------------------------------------------------------

    void inject(Seconds now, const FailureInjection& inj) {
        std::string args;
        for (const auto& t : inj.targets)
            args += " " + t;
        if (inj.kind == FailureKind::LoadSpike)
            args += " " + fmt(inj.extra_load) + " " + std::to_string(inj.duration_s);
        trace(now, "inject " + std::string(to_string(inj.kind)) + args);

        switch (inj.kind) {
        case FailureKind::NonDestructiveCrash:
        case FailureKind::DestructiveCrash: crash_vm(now, inj.targets.front(), inj.kind); break;
        case FailureKind::PhysicalHostFailure: fail_host(now, inj.targets.front(), inj.kind); break;
        case FailureKind::PowerGlitch:
            for (const auto& host : inj.targets)
                if (fail_host(now, host, inj.kind)) {
                    BootProfile stock;
                    const Seconds d = sample_duration(stock.pxe_setup_s + stock.boot_s,
                                                      config_.timing.boot_jitter_s, rng_);
                    schedule({.at = now + d,
                              .kind = EventKind::BootComplete,
                              .target = host,
                              .host_event = true,
                              .generation = ++host_generation_[host]});
                }
            break;
        case FailureKind::LoadSpike: {
            const std::string& host = inj.targets.front();
            state_.extra_load[host] += inj.extra_load;
            schedule({.at = now + inj.duration_s,
                      .kind = EventKind::LoadSpikeEnd,
                      .target = host,
                      .amount = inj.extra_load});
            break;
        }
        }
    }

    // Records the start of a failure for `vm_id`. A VM whose previous episode
    // had already come back (heartbeats resumed, not yet confirmed by a scan)
    // closes that episode and starts a new one; otherwise the failure joins
    // the open episode.
    void open_episode(Seconds now, const std::string& vm_id, FailureKind kind) {
        VmRuntime& rt = runtime_[vm_id];
        if (rt.open_episode && rt.pending_recovery)
            close_episode(vm_id, *rt.pending_recovery);
        if (rt.open_episode)
            return;
        Episode ep;
        ep.id = static_cast<int>(episodes_.size());
        ep.vm_id = vm_id;
        ep.kind = kind;
        ep.failure_at = now;
        rt.open_episode = episodes_.size();
        episodes_.push_back(std::move(ep));
        trace(now, "episode_open " + std::to_string(episodes_.back().id) + " " + vm_id + " " +
                       std::string(to_string(kind)));
    }

    void close_episode(const std::string& vm_id, Seconds recovered_at) {
        VmRuntime& rt = runtime_[vm_id];
        Episode& ep = episodes_[*rt.open_episode];
        ep.recovered_at = recovered_at;
        ep.recovered_on = state_.vm(vm_id).bound_host;
        trace(state_.clock, "recovered " + std::to_string(ep.id) + " " + vm_id + " " +
                                std::to_string(recovered_at) + " " + ep.recovered_on.value_or("-"));
        rt.open_episode.reset();
        rt.pending_recovery.reset();
    }

    void crash_vm(Seconds now, const std::string& vm_id, FailureKind kind) {
        VirtualMachine& v = state_.vm(vm_id);
        if (!responsive(v)) {
            trace(now, "inject_ignored " + vm_id + " " + std::string(to_string(v.lifecycle)));
            return;
        }
        // The crash instant is the last moment the machine was alive.
        monitor_.record_heartbeat(vm_id, now, v.load_contribution);
        v.lifecycle = Lifecycle::Unresponsive;
        VmRuntime& rt = runtime_[vm_id];
        if (kind == FailureKind::DestructiveCrash)
            rt.destroyed = true;
        open_episode(now, vm_id, kind);
    }

    bool fail_host(Seconds now, const std::string& host_id, FailureKind kind) {
        PhysicalHost& h = state_.host(host_id);
        if (h.power_state == PowerState::Off) {
            trace(now, "inject_ignored " + host_id + " Off");
            return false;
        }
        monitor_.record_heartbeat(host_id, now, host_load(state_, host_id));
        for (const auto& vm_id : h.hosted_vms) {
            VirtualMachine& v = state_.vm(vm_id);
            VmRuntime& rt = runtime_[vm_id];
            switch (v.lifecycle) {
            case Lifecycle::Running:
                monitor_.record_heartbeat(vm_id, now, v.load_contribution);
                open_episode(now, vm_id, kind);
                break;
            case Lifecycle::Booting:
            case Lifecycle::Installing:
            case Lifecycle::Unresponsive:
                open_episode(now, vm_id, kind);
                break;
            case Lifecycle::Halted:
            case Lifecycle::WaitingForCapacity:
                break;
            }
            ++rt.generation;  // cancels any boot in progress
            v.lifecycle = Lifecycle::Halted;
        }
        h.power_state = PowerState::Off;
        ++host_generation_[host_id];
        return true;
    }

    void host_boot_complete(const Event& ev) {
        if (ev.generation != host_generation_[ev.target])
            return;
        PhysicalHost& h = state_.host(ev.target);
        h.power_state = PowerState::On;
        monitor_.record_heartbeat(ev.target, ev.at, host_load(state_, ev.target));
        trace(ev.at, "host_boot_complete " + ev.target);
    }

    // ---- controller -------------------------------------------------------

    void scan(Seconds now) {
        schedule({.at = now + config_.controller.scan_period_s, .kind = EventKind::ControllerScan});

        const MonitorSnapshot snap = monitor_.snapshot(now);
        if (options_.monitor_log)
            options_.monitor_log(snap);
        int up = 0, down = 0;
        for (const auto& [id, e] : snap.entries)
            (e.verdict == Verdict::Up ? up : down) += 1;
        trace(now, "scan up=" + std::to_string(up) + " down=" + std::to_string(down));

        for (auto& [vm_id, rt] : runtime_) {
            if (!rt.open_episode)
                continue;
            Episode& ep = episodes_[*rt.open_episode];
            const auto verdict = snap.verdict(vm_id);
            if (!ep.detected_at && verdict == Verdict::Down) {
                ep.detected_at = now;
                trace(now, "detected " + std::to_string(ep.id) + " " + vm_id);
            }
            if (rt.pending_recovery && verdict == Verdict::Up)
                close_episode(vm_id, *rt.pending_recovery);
        }

        const PlacementView view = make_placement_view(state_, snap);
        TickResult result = tick(records_, snap, view, now, config_.controller, state_.vms);
        if (options_.on_scan)
            options_.on_scan(ScanView{now, state_, snap, view, records_, result.records, result.actions});

        for (const auto& [vm_id, rec] : result.records) {
            const bool was_human = records_.count(vm_id) &&
                                   std::holds_alternative<phase::RequiresHuman>(records_.at(vm_id).phase);
            if (std::holds_alternative<phase::RequiresHuman>(rec.phase) && !was_human)
                trace(now, "requires_human " + vm_id);
        }
        records_ = std::move(result.records);

        for (const Action& a : result.actions)
            apply(now, a);
    }

    void apply(Seconds now, const Action& a) {
        trace(now, "action " + to_string(a));
        VmRuntime& rt = runtime_[a.vm_id];
        if (rt.open_episode)
            episodes_[*rt.open_episode].actions.push_back({now, a});

        VirtualMachine& v = state_.vm(a.vm_id);
        switch (a.kind) {
        case ActionKind::Reboot:
            // A reboot goes through the guest, so the guest must still be
            // reachable: running on a powered host, merely unresponsive.
            if (v.lifecycle == Lifecycle::Unresponsive && v.bound_host &&
                state_.host(*v.bound_host).power_state == PowerState::On)
                start_boot(now, v);
            else
                trace(now, "reboot_failed " + a.vm_id + " unreachable");
            break;
        case ActionKind::Reinstall:
            pxe_.bind_install(v.mac, v.boot_profile);
            trace(now, "pxe_bind " + v.mac.str() + " install:" + v.boot_profile);
            [[fallthrough]];
        case ActionKind::Restart: {
            RELAXHA_CHECK(state_.host(a.target_host).power_state == PowerState::On,
                          "placement on powered-off host " + a.target_host);
            const bool was_parked = !v.bound_host;
            state_.bind(a.vm_id, a.target_host);
            if (was_parked)
                monitor_.set_registered(a.vm_id, true);
            start_boot(now, v);
            break;
        }
        case ActionKind::Defer:
            ++rt.generation;
            state_.bind(a.vm_id, std::nullopt);
            v.lifecycle = Lifecycle::WaitingForCapacity;
            monitor_.set_registered(a.vm_id, false);
            break;
        case ActionKind::NoOp:
            break;
        }
    }

    // ---- provisioning -----------------------------------------------------

    void start_boot(Seconds now, VirtualMachine& v) {
        RELAXHA_CHECK(v.bound_host && state_.host(*v.bound_host).power_state == PowerState::On,
                      "boot of " + v.vm_id + " on a host that cannot serve it");
        VmRuntime& rt = runtime_[v.vm_id];
        rt.pending_recovery.reset();
        const BootPlan plan = pxe_.boot_outcome(v.mac, v.boot_profile);
        const bool install = plan.mode == BootMode::Install;
        const Seconds d = sample_duration(plan.nominal_total(),
                                          install ? config_.timing.reinstall_jitter_s
                                                  : config_.timing.boot_jitter_s,
                                          rng_);
        v.lifecycle = install ? Lifecycle::Installing : Lifecycle::Booting;
        trace(now, "boot_start " + v.vm_id + " " + *v.bound_host + (install ? " install " : " local ") +
                       std::to_string(d));
        schedule({.at = now + d,
                  .kind = install ? EventKind::InstallComplete : EventKind::BootComplete,
                  .target = v.vm_id,
                  .generation = ++rt.generation});
    }

    void vm_boot_complete(const Event& ev, bool install) {
        VmRuntime& rt = runtime_[ev.target];
        if (ev.generation != rt.generation)
            return;
        VirtualMachine& v = state_.vm(ev.target);
        RELAXHA_CHECK(v.bound_host && state_.host(*v.bound_host).power_state == PowerState::On,
                      "boot completed on a host that is off");
        if (install) {
            pxe_.complete_install(v.mac);
            rt.destroyed = false;
            trace(ev.at, "pxe_bind " + v.mac.str() + " localboot");
            trace(ev.at, "install_complete " + v.vm_id + " " + *v.bound_host + " " +
                             pxe_.profile(v.boot_profile).middleware);
        }
        if (rt.destroyed) {
            v.lifecycle = Lifecycle::Unresponsive;
            trace(ev.at, "boot_failed " + v.vm_id + " " + *v.bound_host);
            return;
        }
        v.lifecycle = Lifecycle::Running;
        monitor_.record_heartbeat(v.vm_id, ev.at, v.load_contribution);
        if (!install)
            trace(ev.at, "boot_complete " + v.vm_id + " " + *v.bound_host);
        if (rt.open_episode)
            rt.pending_recovery = ev.at;
    }

    const ClusterConfig& config_;
    std::vector<FailureInjection> injections_;
    Seconds horizon_;
    const SimOptions& options_;

    ClusterState state_;
    Monitor monitor_;
    PxeMap pxe_;
    Rng rng_;
    std::map<std::string, EscalationRecord> records_;
    std::map<std::string, VmRuntime> runtime_;
    std::map<std::string, std::uint64_t> host_generation_;
    std::vector<Episode> episodes_;

    std::priority_queue<Event, std::vector<Event>, LaterFirst> queue_;
    std::uint64_t next_seq_ = 0;
};

}  // namespace

SimReport run_scenario(const ClusterConfig& config, std::vector<FailureInjection> injections,
                       Seconds horizon_s, const SimOptions& options) {
    if (horizon_s < 0)
        throw std::invalid_argument("horizon_s must be >= 0");
    Simulation sim(config, std::move(injections), horizon_s, options);
    return sim.run();
}

}  // namespace relaxha
