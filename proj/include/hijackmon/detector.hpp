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

#ifndef HIJACKMON_DETECTOR_HPP
#define HIJACKMON_DETECTOR_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hijackmon/csv.hpp"
#include "hijackmon/errors.hpp"
#include "hijackmon/hop_table.hpp"
#include "hijackmon/jsonl.hpp"
#include "hijackmon/session.hpp"

namespace hijackmon {

enum class VerdictState { Normal, Suspicious, Hijacked };

enum class VerdictReason { None, HopAnomaly, DuplicateSeq, HopAnomalyAndDuplicateSeq };

/// Camouflage flavor of a confirmed hijack. 301-led confirmations are folded
/// into Redirect302; everything non-redirect is treated as an injected body.
enum class HijackKind { Redirect302, Ok200 };

/// Per-session detection outcome. Hijacked always implies a duplicate
/// sequence number was seen: a hop anomaly alone only ever suspends a
/// session in Suspicious, and that mark is cleared (back to Normal, with the
/// reason retained) when no confirming duplicate arrives.
struct Verdict {
    std::string session_id;
    VerdictState state = VerdictState::Normal;
    VerdictReason reason = VerdictReason::None;
    /// For Hijacked: index of the camouflage response (the earlier of the
    /// duplicate pair). For a cleared hop anomaly: index of the anomalous
    /// response.
    std::optional<std::size_t> offending_response_index;

    bool operator==(const Verdict&) const = default;
};

/// One confirmed hijack event, ready for the locator.
struct HijackRecord {
    std::string host;
    std::string server_ip;
    std::string bras_id;
    std::string victim_ip;
    std::int64_t timestamp = 0;
    HijackKind hijack_kind = HijackKind::Redirect302;

    bool operator==(const HijackRecord&) const = default;
};

/// True when the observed hop count sits more than `delta` hops below the
/// learned baseline for (host, server_ip, bras_id). An unknown baseline never
/// raises suspicion.
inline bool check_hop_anomaly(const ResponseObservation& obs, const HopTable& table, int delta) {
    auto normal = table.lookup_normal_hops(obs.host, obs.server_ip, obs.bras_id);
    if (!normal) return false;
    return infer_hops(obs.ttl).value() < normal->value() - delta;
}

/// Finds the earliest pair of distinct responses sharing a TCP sequence
/// number: the smallest completing index j, then the smallest i < j. Arrival
/// order is list order (responses are kept timestamp-sorted, ties stable).
inline std::optional<std::pair<std::size_t, std::size_t>> check_duplicate_seq(
    const SessionRecord& session) {
    const auto& responses = session.responses;
    for (std::size_t j = 1; j < responses.size(); ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            if (responses[i].tcp_seq == responses[j].tcp_seq) {
                return std::make_pair(i, j);
            }
        }
    }
    return std::nullopt;
}

/// Runs the two-stage check on one session against a table snapshot.
///
/// Stage one marks the session suspicious if any response's hop count falls
/// below the baseline by more than `delta`. Stage two looks for a duplicate
/// sequence number among the session's responses; that is the confirming
/// signal, and it also catches attackers who tamper the camouflage TTL to
/// dodge stage one. No duplicate means any suspicion is cleared and the
/// session is Normal. Pure function: same inputs, same verdict.
inline Verdict classify_session(const SessionRecord& session, const HopTable& table, int delta) {
    Verdict verdict;
    verdict.session_id = session.session_id;

    std::optional<std::size_t> anomaly_index;
    for (std::size_t i = 0; i < session.responses.size(); ++i) {
        if (check_hop_anomaly(session.responses[i], table, delta)) {
            anomaly_index = i;
            break;
        }
    }

    if (auto dup = check_duplicate_seq(session)) {
        verdict.state = VerdictState::Hijacked;
        verdict.reason = anomaly_index ? VerdictReason::HopAnomalyAndDuplicateSeq
                                       : VerdictReason::DuplicateSeq;
        verdict.offending_response_index = dup->first;
    } else if (anomaly_index) {
        verdict.state = VerdictState::Normal;  // suspicion cleared
        verdict.reason = VerdictReason::HopAnomaly;
        verdict.offending_response_index = anomaly_index;
    }
    return verdict;
}

/// Materializes the hijack event from a Hijacked verdict. Fields come from
/// the earlier response of the duplicate pair: the camouflage packet wins
/// the race, the genuine reply gets discarded by the client.
inline HijackRecord record_hijack(const Verdict& verdict, const SessionRecord& session) {
    if (verdict.state != VerdictState::Hijacked || !verdict.offending_response_index) {
        throw NotHijackedError("verdict for session '" + session.session_id +
                               "' is not a confirmed hijack");
    }
    const auto& camouflage = session.responses.at(*verdict.offending_response_index);
    HijackRecord record;
    record.host = camouflage.host;
    record.server_ip = camouflage.server_ip;
    record.bras_id = camouflage.bras_id;
    record.victim_ip = camouflage.client_ip;
    record.timestamp = camouflage.timestamp;
    record.hijack_kind = (camouflage.http_status == 301 || camouflage.http_status == 302)
                             ? HijackKind::Redirect302
                             : HijackKind::Ok200;
    return record;
}

struct DetectionRun {
    std::vector<Verdict> verdicts;        // one per session, input order
    std::vector<HijackRecord> records;    // sorted for deterministic emission
};

/// Classifies every session against one table snapshot and collects the
/// confirmed hijack records.
inline DetectionRun detect_sessions(const std::vector<SessionRecord>& sessions,
                                    const HopTable& table, int delta) {
    DetectionRun run;
    run.verdicts.reserve(sessions.size());
    for (const auto& session : sessions) {
        Verdict verdict = classify_session(session, table, delta);
        if (verdict.state == VerdictState::Hijacked) {
            run.records.push_back(record_hijack(verdict, session));
        }
        run.verdicts.push_back(std::move(verdict));
    }
    std::sort(run.records.begin(), run.records.end(),
              [](const HijackRecord& a, const HijackRecord& b) {
                  return std::tie(a.timestamp, a.host, a.server_ip, a.victim_ip) <
                         std::tie(b.timestamp, b.host, b.server_ip, b.victim_ip);
              });
    return run;
}

// ---- serialization ----

inline std::string verdict_state_name(VerdictState state) {
    switch (state) {
        case VerdictState::Normal: return "Normal";
        case VerdictState::Suspicious: return "Suspicious";
        case VerdictState::Hijacked: return "Hijacked";
    }
    return "Normal";
}

inline VerdictState verdict_state_from_name(const std::string& name) {
    if (name == "Normal") return VerdictState::Normal;
    if (name == "Suspicious") return VerdictState::Suspicious;
    if (name == "Hijacked") return VerdictState::Hijacked;
    throw CorruptInputFileError("unknown verdict state '" + name + "'");
}

inline std::string verdict_reason_name(VerdictReason reason) {
    switch (reason) {
        case VerdictReason::None: return "None";
        case VerdictReason::HopAnomaly: return "HopAnomaly";
        case VerdictReason::DuplicateSeq: return "DuplicateSeq";
        case VerdictReason::HopAnomalyAndDuplicateSeq: return "HopAnomalyAndDuplicateSeq";
    }
    return "None";
}

inline VerdictReason verdict_reason_from_name(const std::string& name) {
    if (name == "None") return VerdictReason::None;
    if (name == "HopAnomaly") return VerdictReason::HopAnomaly;
    if (name == "DuplicateSeq") return VerdictReason::DuplicateSeq;
    if (name == "HopAnomalyAndDuplicateSeq") return VerdictReason::HopAnomalyAndDuplicateSeq;
    throw CorruptInputFileError("unknown verdict reason '" + name + "'");
}

inline std::string hijack_kind_name(HijackKind kind) {
    return kind == HijackKind::Redirect302 ? "Redirect302" : "Ok200";
}

inline HijackKind hijack_kind_from_name(const std::string& name) {
    if (name == "Redirect302") return HijackKind::Redirect302;
    if (name == "Ok200") return HijackKind::Ok200;
    throw CorruptInputFileError("unknown hijack kind '" + name + "'");
}

inline json to_json(const Verdict& verdict) {
    json j{
        {"session_id", verdict.session_id},
        {"state", verdict_state_name(verdict.state)},
        {"reason", verdict_reason_name(verdict.reason)},
    };
    if (verdict.offending_response_index) {
        j["offending_response_index"] = *verdict.offending_response_index;
    }
    return j;
}

inline Verdict verdict_from_json(const json& j) {
    Verdict verdict;
    verdict.session_id = j.at("session_id").get<std::string>();
    verdict.state = verdict_state_from_name(j.at("state").get<std::string>());
    verdict.reason = verdict_reason_from_name(j.at("reason").get<std::string>());
    if (j.contains("offending_response_index") && !j["offending_response_index"].is_null()) {
        verdict.offending_response_index = j["offending_response_index"].get<std::size_t>();
    }
    // A hijack conviction always rests on a duplicate; suspicion only on hops.
    if (verdict.state == VerdictState::Hijacked &&
        verdict.reason != VerdictReason::DuplicateSeq &&
        verdict.reason != VerdictReason::HopAnomalyAndDuplicateSeq) {
        throw CorruptInputFileError("Hijacked verdict for session '" + verdict.session_id +
                                    "' lacks a duplicate-sequence reason");
    }
    if (verdict.state == VerdictState::Suspicious &&
        verdict.reason != VerdictReason::HopAnomaly) {
        throw CorruptInputFileError("Suspicious verdict for session '" + verdict.session_id +
                                    "' must carry the HopAnomaly reason");
    }
    return verdict;
}

inline std::vector<Verdict> read_verdicts_jsonl(const std::filesystem::path& path) {
    auto in = open_input_file(path);
    return read_jsonl<Verdict>(
        in, [](const json& j) { return verdict_from_json(j); }, path.string());
}

inline void write_verdicts_jsonl(const std::filesystem::path& path,
                                 const std::vector<Verdict>& verdicts) {
    auto out = open_output_file(path);
    write_jsonl(out, verdicts, [](const Verdict& v) { return to_json(v); });
}

inline void write_hijacks_csv(std::ostream& out, const std::vector<HijackRecord>& records) {
    out << "host,server_ip,bras_id,victim_ip,timestamp,hijack_kind\n";
    for (const auto& r : records) {
        out << csv_join({r.host, r.server_ip, r.bras_id, r.victim_ip,
                         std::to_string(r.timestamp), hijack_kind_name(r.hijack_kind)})
            << '\n';
    }
}

inline void write_hijacks_csv(const std::filesystem::path& path,
                              const std::vector<HijackRecord>& records) {
    auto out = open_output_file(path);
    write_hijacks_csv(out, records);
}

inline std::vector<HijackRecord> read_hijacks_csv(std::istream& in, const std::string& origin) {
    std::vector<HijackRecord> records;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "host,server_ip,bras_id,victim_ip,timestamp,hijack_kind") {
                throw CorruptInputFileError(origin + " line " + std::to_string(line_no) +
                                            ": unexpected header '" + line + "'");
            }
            saw_header = true;
            continue;
        }
        auto fields = csv_split(line);
        if (fields.size() != 6) {
            throw CorruptInputFileError(origin + " line " + std::to_string(line_no) +
                                        ": expected 6 fields, got " +
                                        std::to_string(fields.size()));
        }
        HijackRecord record;
        record.host = fields[0];
        record.server_ip = fields[1];
        record.bras_id = fields[2];
        record.victim_ip = fields[3];
        record.timestamp = parse_int_field<std::int64_t>(fields[4], origin, line_no);
        record.hijack_kind = hijack_kind_from_name(fields[5]);
        records.push_back(std::move(record));
    }
    if (!saw_header) {
        throw CorruptInputFileError(origin + ": missing header line");
    }
    return records;
}

inline std::vector<HijackRecord> read_hijacks_csv(const std::filesystem::path& path) {
    auto in = open_input_file(path);
    return read_hijacks_csv(in, path.string());
}

}  // namespace hijackmon

#endif  // HIJACKMON_DETECTOR_HPP
