// Copyright 2026 The hijackmon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HIJACKMON_SIMULATOR_HPP
#define HIJACKMON_SIMULATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hijackmon/errors.hpp"
#include "hijackmon/jsonl.hpp"
#include "hijackmon/locator.hpp"
#include "hijackmon/rng.hpp"
#include "hijackmon/session.hpp"

namespace hijackmon {

/// Camouflage flavor injected by the simulated tap. Mixed flips a seeded
/// coin per hijacked session.
enum class AttackKind { Redirect302, Ok200, Mixed };

/// Optional on/off attack windows, for bursty short-period attack patterns.
struct BurstWindows {
    double on_s = 0.0;
    double off_s = 0.0;
};

struct AttackSpec {
    std::string tap_node;  ///< router hosting the bypass tap (BRAS, BR or CR id)
    AttackKind kind = AttackKind::Redirect302;
    double rate = 0.0;  ///< per-session hijack probability under the tap
    bool ttl_tamper = false;  ///< camouflage copies the legitimate TTL
    std::string redirect_url;
    /// Negative-testing knobs, both excluded from default scenario sets:
    /// lose_race timestamps the camouflage after the genuine reply;
    /// drop_true_response suppresses the genuine reply entirely, leaving no
    /// duplicate to observe (the documented detection blind spot).
    bool lose_race = false;
    bool drop_true_response = false;
    std::optional<BurstWindows> burst;
};

struct SiteSpec {
    std::string host;
    std::vector<std::string> server_ips;
    int base_hops_default = -1;                   ///< applies to every BRAS when >= 0
    std::map<std::string, int> base_hops_by_bras; ///< per-BRAS values, override the default
    double legit_redirect_rate = 0.0;  ///< fraction of genuine responses that are 302s

    int base_hops_for(const std::string& bras_id) const {
        auto it = base_hops_by_bras.find(bras_id);
        if (it != base_hops_by_bras.end()) return it->second;
        if (base_hops_default >= 0) return base_hops_default;
        throw InvalidScenarioError("site '" + host + "' has no base hop count for BRAS '" +
                                   bras_id + "'");
    }
};

struct ScenarioConfig {
    std::vector<TopologyRow> topology;
    std::vector<SiteSpec> sites;
    int n_sessions = 0;
    std::optional<AttackSpec> attack;
    int hop_jitter = 0;
    std::uint64_t rng_seed = 0;
    double duration_s = 300.0;  ///< stream length the sessions are spread across
    int access_offset = 3;      ///< hops of the access segment below the BRAS
};

struct DatasetCounts {
    std::uint64_t sessions = 0;
    std::uint64_t normal = 0;
    std::uint64_t hijacked302 = 0;
    std::uint64_t hijacked200 = 0;
    std::uint64_t observations = 0;
};

struct LabeledDataset {
    std::vector<SessionRecord> sessions;
    std::vector<ResponseObservation> observations;  ///< flat, sorted by (timestamp, session)
    ScenarioConfig scenario;
    DatasetCounts counts;
};

/// Hop count of a camouflage packet injected at `tap_node` as seen by a
/// client in `bras_id`: one hop per topology level from the BRAS up to the
/// tap, plus the constant access segment below the BRAS. The tap must sit on
/// the BRAS's upstream path.
inline HopCount hop_distance(const Topology& topology, const std::string& bras_id,
                             const std::string& tap_node, int access_offset = 3) {
    if (!topology.has_bras(bras_id)) {
        throw UnknownNodeError("BRAS '" + bras_id + "' is not in the topology");
    }
    if (!topology.contains_node(tap_node)) {
        throw UnknownNodeError("tap node '" + tap_node + "' is not in the topology");
    }
    if (tap_node == bras_id) return HopCount(access_offset);
    const std::string& br = topology.border_router_of(bras_id);
    if (tap_node == br) return HopCount(1 + access_offset);
    if (tap_node == topology.core_router_of_border(br)) return HopCount(2 + access_offset);
    throw InvalidScenarioError("tap node '" + tap_node + "' is not on the upstream path of '" +
                               bras_id + "'");
}

namespace detail {

inline bool in_burst_window(const BurstWindows& burst, std::int64_t t_us) {
    const double period = burst.on_s + burst.off_s;
    if (period <= 0.0) return true;
    const double phase = std::fmod(static_cast<double>(t_us) / 1e6, period);
    return phase < burst.on_s;
}

inline std::string padded_session_id(int index) {
    std::string digits = std::to_string(index);
    std::string id = "s";
    id.append(digits.size() < 8 ? 8 - digits.size() : 0, '0');
    id += digits;
    return id;
}

}  // namespace detail

/// Validates a scenario and returns its topology. Every violated constraint
/// maps to an InvalidScenario with the offending detail.
inline Topology validate_scenario(const ScenarioConfig& config) {
    if (config.topology.empty()) throw InvalidScenarioError("topology is empty");
    Topology topology;
    try {
        topology = Topology(config.topology);
    } catch (const InvalidTopologyError& e) {
        throw InvalidScenarioError(std::string("bad topology: ") + e.what());
    }
    if (config.n_sessions < 0) throw InvalidScenarioError("n_sessions must be >= 0");
    if (config.hop_jitter < 0) throw InvalidScenarioError("hop_jitter must be >= 0");
    if (config.duration_s <= 0) throw InvalidScenarioError("duration_s must be > 0");
    if (config.access_offset < 0) throw InvalidScenarioError("access_offset must be >= 0");
    if (config.sites.empty()) throw InvalidScenarioError("at least one site is required");

    for (const auto& site : config.sites) {
        if (site.host.empty()) throw InvalidScenarioError("site host name is empty");
        if (site.server_ips.empty()) {
            throw InvalidScenarioError("site '" + site.host + "' has no server IPs");
        }
        if (site.legit_redirect_rate < 0.0 || site.legit_redirect_rate > 1.0) {
            throw InvalidScenarioError("site '" + site.host +
                                       "' legit_redirect_rate outside [0, 1]");
        }
        for (const auto& row : config.topology) {
            const int base = site.base_hops_for(row.bras_id);
            if (base - config.hop_jitter < 0) {
                throw InvalidScenarioError("site '" + site.host + "' at BRAS '" + row.bras_id +
                                           "': base hops minus jitter goes negative");
            }
            if (base + config.hop_jitter > 63) {
                throw InvalidScenarioError("site '" + site.host + "' at BRAS '" + row.bras_id +
                                           "': base hops plus jitter exceeds 63 (TTL underflow)");
            }
        }
    }

    if (config.attack) {
        const AttackSpec& attack = *config.attack;
        if (attack.rate < 0.0 || attack.rate > 1.0) {
            throw InvalidScenarioError("attack rate outside [0, 1]");
        }
        if (!topology.contains_node(attack.tap_node)) {
            throw InvalidScenarioError("tap node '" + attack.tap_node +
                                       "' is not in the topology");
        }
        if (attack.kind != AttackKind::Ok200 && attack.redirect_url.empty()) {
            throw InvalidScenarioError("redirect attacks require a redirect_url");
        }
        if (attack.burst && (attack.burst->on_s <= 0.0 || attack.burst->off_s < 0.0)) {
            throw InvalidScenarioError("burst windows must have on_s > 0 and off_s >= 0");
        }
        // The tap sits between client and server, so its camouflage must
        // arrive with strictly fewer hops than any legitimate reply even at
        // the lowest jitter excursion.
        for (const auto& row : config.topology) {
            if (!topology.in_subtree(row.bras_id, attack.tap_node)) continue;
            const int camouflage =
                hop_distance(topology, row.bras_id, attack.tap_node, config.access_offset)
                    .value();
            for (const auto& site : config.sites) {
                const int legit_min = site.base_hops_for(row.bras_id) - config.hop_jitter;
                if (camouflage >= legit_min) {
                    throw InvalidScenarioError(
                        "camouflage from tap '" + attack.tap_node + "' would travel " +
                        std::to_string(camouflage) + " hops to BRAS '" + row.bras_id +
                        "', not fewer than site '" + site.host + "' minimum of " +
                        std::to_string(legit_min));
                }
            }
        }
    }
    return topology;
}

/// Generates one labeled dataset. Fully deterministic for a given config:
/// the RNG stream is consumed in a fixed per-session order and all derived
/// values (timestamps, identifiers) are computed, never sampled from the
/// clock.
inline LabeledDataset generate_dataset(const ScenarioConfig& config) {
    Topology topology = validate_scenario(config);
    DetRng rng(config.rng_seed);

    const auto brases = topology.bras_ids();
    const double duration_us = config.duration_s * 1e6;

    LabeledDataset dataset;
    dataset.scenario = config;
    dataset.sessions.reserve(static_cast<std::size_t>(config.n_sessions));

    std::map<std::string, int> clients_per_bras;
    std::map<std::string, std::size_t> bras_index;
    for (std::size_t b = 0; b < brases.size(); ++b) bras_index[brases[b]] = b;

    for (int i = 0; i < config.n_sessions; ++i) {
        const std::string& bras = brases[rng.bounded(brases.size())];
        const SiteSpec& site = config.sites[rng.bounded(config.sites.size())];
        const std::string& server_ip = site.server_ips[rng.bounded(site.server_ips.size())];

        const auto request_time = static_cast<std::int64_t>(
            duration_us * static_cast<double>(i) / static_cast<double>(config.n_sessions));

        const int client_no = clients_per_bras[bras]++;
        const std::string client_ip = "10." + std::to_string(bras_index[bras] % 250) + "." +
                                      std::to_string((client_no / 250) % 250) + "." +
                                      std::to_string(client_no % 250 + 1);

        SessionRecord session;
        session.session_id = detail::padded_session_id(i);
        session.request_time = request_time;

        const int base = site.base_hops_for(bras);
        const int jitter =
            config.hop_jitter > 0
                ? static_cast<int>(rng.range(-config.hop_jitter, config.hop_jitter))
                : 0;
        const int legit_hops = base + jitter;

        ResponseObservation legit;
        legit.session_id = session.session_id;
        legit.server_ip = server_ip;
        legit.client_ip = client_ip;
        legit.bras_id = bras;
        legit.ttl = 64 - legit_hops;
        legit.tcp_seq = rng.next_u32();
        legit.timestamp = request_time + rng.range(15000, 30000);
        legit.host = site.host;
        if (rng.uniform01() < site.legit_redirect_rate) {
            legit.http_status = 302;
            legit.redirect_location = "http://" + site.host + "/";
        } else {
            legit.http_status = 200;
        }

        bool hijacked = false;
        if (config.attack) {
            const AttackSpec& attack = *config.attack;
            bool eligible = topology.in_subtree(bras, attack.tap_node);
            if (eligible && attack.burst) {
                eligible = detail::in_burst_window(*attack.burst, request_time);
            }
            hijacked = eligible && rng.uniform01() < attack.rate;
        }

        if (!hijacked) {
            session.label = Label::Normal;
            session.responses.push_back(std::move(legit));
            ++dataset.counts.normal;
        } else {
            const AttackSpec& attack = *config.attack;
            AttackKind kind = attack.kind;
            if (kind == AttackKind::Mixed) {
                kind = (rng.next_u64() & 1) ? AttackKind::Redirect302 : AttackKind::Ok200;
            }

            ResponseObservation camouflage;
            camouflage.session_id = session.session_id;
            camouflage.server_ip = server_ip;
            camouflage.client_ip = client_ip;
            camouflage.bras_id = bras;
            camouflage.tcp_seq = legit.tcp_seq;  // the decisive duplicate
            camouflage.host = site.host;
            const int camouflage_hops =
                hop_distance(topology, bras, attack.tap_node, config.access_offset).value();
            camouflage.ttl = attack.ttl_tamper ? legit.ttl : 64 - camouflage_hops;
            camouflage.timestamp = attack.lose_race ? request_time + rng.range(31000, 40000)
                                                    : request_time + rng.range(4000, 9000);
            if (kind == AttackKind::Redirect302) {
                camouflage.http_status = 302;
                camouflage.redirect_location = attack.redirect_url;
                session.label = Label::Hijacked302;
                ++dataset.counts.hijacked302;
            } else {
                camouflage.http_status = 200;
                session.label = Label::Hijacked200;
                ++dataset.counts.hijacked200;
            }

            if (attack.drop_true_response) {
                session.responses.push_back(std::move(camouflage));
            } else if (attack.lose_race) {
                session.responses.push_back(std::move(legit));
                session.responses.push_back(std::move(camouflage));
            } else {
                session.responses.push_back(std::move(camouflage));
                session.responses.push_back(std::move(legit));
            }
        }

        ++dataset.counts.sessions;
        dataset.counts.observations += session.responses.size();
        dataset.sessions.push_back(std::move(session));
    }

    dataset.observations.reserve(dataset.counts.observations);
    for (const auto& session : dataset.sessions) {
        for (const auto& obs : session.responses) dataset.observations.push_back(obs);
    }
    std::stable_sort(dataset.observations.begin(), dataset.observations.end(),
                     [](const ResponseObservation& a, const ResponseObservation& b) {
                         return std::tie(a.timestamp, a.session_id) <
                                std::tie(b.timestamp, b.session_id);
                     });
    return dataset;
}

/// Copy of a scenario with the attacker removed; used for hijack-free
/// learning phases.
inline ScenarioConfig without_attack(ScenarioConfig config) {
    config.attack.reset();
    return config;
}

// ---- scenario / manifest serialization ----

inline std::string attack_kind_name(AttackKind kind) {
    switch (kind) {
        case AttackKind::Redirect302: return "Redirect302";
        case AttackKind::Ok200: return "Ok200";
        case AttackKind::Mixed: return "Mixed";
    }
    return "Redirect302";
}

inline AttackKind attack_kind_from_name(const std::string& name) {
    if (name == "Redirect302") return AttackKind::Redirect302;
    if (name == "Ok200") return AttackKind::Ok200;
    if (name == "Mixed") return AttackKind::Mixed;
    throw InvalidScenarioError("unknown attack kind '" + name + "'");
}

inline json scenario_to_json(const ScenarioConfig& config) {
    json topology = json::array();
    for (const auto& row : config.topology) {
        topology.push_back({{"bras_id", row.bras_id},
                            {"border_router_id", row.border_router_id},
                            {"core_router_id", row.core_router_id}});
    }
    json sites = json::array();
    for (const auto& site : config.sites) {
        json s{{"host", site.host}, {"server_ips", site.server_ips}};
        if (!site.base_hops_by_bras.empty()) {
            s["base_hops"] = site.base_hops_by_bras;
        } else {
            s["base_hops"] = site.base_hops_default;
        }
        if (site.legit_redirect_rate > 0.0) s["legit_redirect_rate"] = site.legit_redirect_rate;
        sites.push_back(std::move(s));
    }
    json j{{"topology", std::move(topology)},
           {"sites", std::move(sites)},
           {"n_sessions", config.n_sessions},
           {"hop_jitter", config.hop_jitter},
           {"rng_seed", config.rng_seed},
           {"duration_s", config.duration_s},
           {"access_offset", config.access_offset}};
    if (config.attack) {
        const AttackSpec& attack = *config.attack;
        json a{{"tap_node", attack.tap_node},
               {"kind", attack_kind_name(attack.kind)},
               {"rate", attack.rate},
               {"ttl_tamper", attack.ttl_tamper},
               {"redirect_url", attack.redirect_url}};
        if (attack.lose_race) a["lose_race"] = true;
        if (attack.drop_true_response) a["drop_true_response"] = true;
        if (attack.burst) {
            a["burst"] = {{"on_s", attack.burst->on_s}, {"off_s", attack.burst->off_s}};
        }
        j["attack"] = std::move(a);
    }
    return j;
}

inline ScenarioConfig scenario_from_json(const json& j) {
    try {
        ScenarioConfig config;
        for (const auto& row : j.at("topology")) {
            config.topology.push_back(TopologyRow{row.at("bras_id").get<std::string>(),
                                                  row.at("border_router_id").get<std::string>(),
                                                  row.at("core_router_id").get<std::string>()});
        }
        for (const auto& s : j.at("sites")) {
            SiteSpec site;
            site.host = s.at("host").get<std::string>();
            site.server_ips = s.at("server_ips").get<std::vector<std::string>>();
            const auto& hops = s.at("base_hops");
            if (hops.is_object()) {
                site.base_hops_by_bras = hops.get<std::map<std::string, int>>();
            } else {
                site.base_hops_default = hops.get<int>();
            }
            if (s.contains("legit_redirect_rate")) {
                site.legit_redirect_rate = s["legit_redirect_rate"].get<double>();
            }
            config.sites.push_back(std::move(site));
        }
        config.n_sessions = j.at("n_sessions").get<int>();
        if (j.contains("hop_jitter")) config.hop_jitter = j["hop_jitter"].get<int>();
        if (j.contains("rng_seed")) config.rng_seed = j["rng_seed"].get<std::uint64_t>();
        if (j.contains("duration_s")) config.duration_s = j["duration_s"].get<double>();
        if (j.contains("access_offset")) config.access_offset = j["access_offset"].get<int>();
        if (j.contains("attack") && !j["attack"].is_null()) {
            const auto& a = j["attack"];
            AttackSpec attack;
            attack.tap_node = a.at("tap_node").get<std::string>();
            attack.kind = attack_kind_from_name(a.at("kind").get<std::string>());
            attack.rate = a.at("rate").get<double>();
            if (a.contains("ttl_tamper")) attack.ttl_tamper = a["ttl_tamper"].get<bool>();
            if (a.contains("redirect_url")) {
                attack.redirect_url = a["redirect_url"].get<std::string>();
            }
            if (a.contains("lose_race")) attack.lose_race = a["lose_race"].get<bool>();
            if (a.contains("drop_true_response")) {
                attack.drop_true_response = a["drop_true_response"].get<bool>();
            }
            if (a.contains("burst") && !a["burst"].is_null()) {
                attack.burst = BurstWindows{a["burst"].at("on_s").get<double>(),
                                            a["burst"].at("off_s").get<double>()};
            }
            config.attack = std::move(attack);
        }
        return config;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw InvalidScenarioError(std::string("malformed scenario document: ") + e.what());
    }
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
    auto in = open_input_file(path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw InvalidScenarioError(path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

inline json manifest_json(const LabeledDataset& dataset) {
    return json{{"scenario", scenario_to_json(dataset.scenario)},
                {"counts",
                 {{"sessions", dataset.counts.sessions},
                  {"normal", dataset.counts.normal},
                  {"hijacked302", dataset.counts.hijacked302},
                  {"hijacked200", dataset.counts.hijacked200},
                  {"observations", dataset.counts.observations}}}};
}

/// Writes sessions.jsonl, observations.jsonl and manifest.json into the
/// scenario directory.
inline void write_dataset(const LabeledDataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_sessions_jsonl(dir / "sessions.jsonl", dataset.sessions);
    write_observations_jsonl(dir / "observations.jsonl", dataset.observations);
    auto out = open_output_file(dir / "manifest.json");
    out << manifest_json(dataset).dump(2) << '\n';
}

}  // namespace hijackmon

#endif  // HIJACKMON_SIMULATOR_HPP
