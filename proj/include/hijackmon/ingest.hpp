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

#ifndef HIJACKMON_INGEST_HPP
#define HIJACKMON_INGEST_HPP

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "hijackmon/csv.hpp"
#include "hijackmon/errors.hpp"
#include "hijackmon/jsonl.hpp"
#include "hijackmon/session.hpp"

namespace hijackmon {

/// A raw capture-export record after column mapping: canonical field name to
/// source text. Anything beyond the mapped fields is ignored.
using RawHttpEvent = std::map<std::string, std::string>;

enum class RawFormat { Csv, Jsonl };

/// Column mapping document for one capture export flavor. `columns` maps the
/// canonical field names (src_ip, dst_ip, ttl, tcp_seq, http_status, host,
/// timestamp, tap; optionally location and session_id) to the export's own
/// column names or JSON keys. `bras_mapping` assigns every tap tag appearing
/// in the export to a BRAS domain id.
struct IngestMapping {
    std::map<std::string, std::string> columns;
    std::map<std::string, std::string> bras_mapping;
    double session_gap_s = 10.0;      ///< gap heuristic when no correlation id exists
    std::string timestamp_unit = "us";  ///< s, ms or us

    static IngestMapping from_json(const json& j) {
        IngestMapping mapping;
        if (!j.contains("columns") || !j["columns"].is_object()) {
            throw InvalidMappingError("mapping document needs a 'columns' object");
        }
        for (const auto& [key, value] : j["columns"].items()) {
            mapping.columns[key] = value.get<std::string>();
        }
        if (j.contains("bras_mapping")) {
            for (const auto& [key, value] : j["bras_mapping"].items()) {
                mapping.bras_mapping[key] = value.get<std::string>();
            }
        }
        if (j.contains("session_gap_s")) mapping.session_gap_s = j["session_gap_s"].get<double>();
        if (j.contains("timestamp_unit")) {
            mapping.timestamp_unit = j["timestamp_unit"].get<std::string>();
        }
        mapping.validate();
        return mapping;
    }

    static IngestMapping load(const std::filesystem::path& path) {
        auto in = open_input_file(path);
        json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw InvalidMappingError(path.string() + ": " + e.what());
        }
        return from_json(j);
    }

    void validate() const {
        static const char* kRequired[] = {"src_ip",      "dst_ip", "ttl",  "tcp_seq",
                                          "http_status", "host",   "timestamp", "tap"};
        for (const char* field : kRequired) {
            if (columns.find(field) == columns.end()) {
                throw InvalidMappingError(std::string("'columns' is missing the required '") +
                                          field + "' mapping");
            }
        }
        if (timestamp_unit != "s" && timestamp_unit != "ms" && timestamp_unit != "us") {
            throw InvalidMappingError("timestamp_unit must be one of s, ms, us");
        }
        if (session_gap_s <= 0) {
            throw InvalidMappingError("session_gap_s must be > 0");
        }
    }
};

struct IngestStats {
    std::uint64_t input = 0;
    std::uint64_t retained = 0;
    std::uint64_t dropped_status = 0;   ///< not a 200/301/302 response
    std::uint64_t dropped_invalid = 0;  ///< unparseable or incomplete record
};

struct IngestResult {
    std::vector<SessionRecord> sessions;
    std::vector<ResponseObservation> observations;
    IngestStats stats;
};

namespace detail {

inline std::optional<double> parse_number(const std::string& text) {
    if (text.empty()) return std::nullopt;
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size()) return std::nullopt;
    return value;
}

inline std::vector<RawHttpEvent> parse_raw_csv(std::istream& in,
                                               std::uint64_t& malformed_lines) {
    std::vector<RawHttpEvent> events;
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header.empty()) {
            header = csv_split(line);
            continue;
        }
        auto fields = csv_split(line);
        if (fields.size() != header.size()) {
            ++malformed_lines;
            continue;
        }
        RawHttpEvent event;
        for (std::size_t i = 0; i < header.size(); ++i) event[header[i]] = fields[i];
        events.push_back(std::move(event));
    }
    return events;
}

inline std::vector<RawHttpEvent> parse_raw_jsonl(std::istream& in,
                                                 std::uint64_t& malformed_lines) {
    std::vector<RawHttpEvent> events;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            ++malformed_lines;
            continue;
        }
        RawHttpEvent event;
        for (const auto& [key, value] : j.items()) {
            event[key] = value.is_string() ? value.get<std::string>() : value.dump();
        }
        events.push_back(std::move(event));
    }
    return events;
}

}  // namespace detail

/// Turns a capture export into the canonical observation/session form:
/// responses are filtered to 200/301/302, tap tags become BRAS ids,
/// timestamps are rebased to microseconds from the earliest retained event,
/// and sessions are grouped by (client, server, host) plus the correlation
/// id when one is mapped, otherwise split on the configured time gap.
/// Invalid records are counted, never fatal; an unknown tap tag is fatal
/// because it silently misattributes evidence.
inline IngestResult normalize_events(std::istream& in, RawFormat format,
                                     const IngestMapping& mapping) {
    mapping.validate();

    IngestResult result;
    std::uint64_t malformed = 0;
    std::vector<RawHttpEvent> raw = format == RawFormat::Csv
                                        ? detail::parse_raw_csv(in, malformed)
                                        : detail::parse_raw_jsonl(in, malformed);
    result.stats.input = raw.size() + malformed;
    result.stats.dropped_invalid = malformed;

    struct Pending {
        ResponseObservation obs;        // session_id/timestamp filled in later
        std::int64_t raw_timestamp_us = 0;
        std::string correlation;
    };

    const bool has_location = mapping.columns.count("location") != 0;
    const bool has_correlation = mapping.columns.count("session_id") != 0;
    const double ts_scale = mapping.timestamp_unit == "s"    ? 1e6
                            : mapping.timestamp_unit == "ms" ? 1e3
                                                             : 1.0;

    std::vector<Pending> pending;
    std::set<std::string> unknown_taps;
    for (const auto& event : raw) {
        auto field = [&](const std::string& canonical) -> const std::string* {
            auto col = mapping.columns.find(canonical);
            if (col == mapping.columns.end()) return nullptr;
            auto it = event.find(col->second);
            return it == event.end() ? nullptr : &it->second;
        };

        const std::string* src = field("src_ip");
        const std::string* dst = field("dst_ip");
        const std::string* ttl = field("ttl");
        const std::string* seq = field("tcp_seq");
        const std::string* status = field("http_status");
        const std::string* host = field("host");
        const std::string* timestamp = field("timestamp");
        const std::string* tap = field("tap");
        if (!src || !dst || !ttl || !seq || !status || !host || !timestamp || !tap ||
            src->empty() || dst->empty() || host->empty() || tap->empty()) {
            ++result.stats.dropped_invalid;
            continue;
        }

        const auto ttl_value = detail::parse_number(*ttl);
        const auto seq_value = detail::parse_number(*seq);
        const auto status_value = detail::parse_number(*status);
        const auto ts_value = detail::parse_number(*timestamp);
        if (!ttl_value || !seq_value || !status_value || !ts_value || *ttl_value < 1 ||
            *ttl_value > 255 || *seq_value < 0 ||
            *seq_value > std::numeric_limits<std::uint32_t>::max()) {
            ++result.stats.dropped_invalid;
            continue;
        }

        const int status_code = static_cast<int>(*status_value);
        if (status_code != 200 && status_code != 301 && status_code != 302) {
            ++result.stats.dropped_status;
            continue;
        }

        auto bras = mapping.bras_mapping.find(*tap);
        if (bras == mapping.bras_mapping.end()) {
            unknown_taps.insert(*tap);
            continue;
        }

        Pending item;
        item.obs.server_ip = *src;  // responses travel server -> client
        item.obs.client_ip = *dst;
        item.obs.bras_id = bras->second;
        item.obs.ttl = static_cast<int>(*ttl_value);
        item.obs.tcp_seq = static_cast<std::uint32_t>(*seq_value);
        item.obs.http_status = status_code;
        item.obs.host = *host;
        if (status_code == 301 || status_code == 302) {
            const std::string* location = has_location ? field("location") : nullptr;
            item.obs.redirect_location = location ? *location : std::string();
        }
        item.raw_timestamp_us = static_cast<std::int64_t>(*ts_value * ts_scale);
        if (has_correlation) {
            if (const std::string* correlation = field("session_id")) {
                item.correlation = *correlation;
            }
        }
        pending.push_back(std::move(item));
    }

    if (!unknown_taps.empty()) {
        std::string listed;
        for (const auto& tag : unknown_taps) {
            if (!listed.empty()) listed += ", ";
            listed += "'" + tag + "'";
        }
        throw UnmappedTapError("no bras_mapping entry for tap tag(s): " + listed);
    }

    if (pending.empty()) {
        return result;
    }

    // Rebase to microseconds from the earliest retained event.
    std::int64_t t0 = pending.front().raw_timestamp_us;
    for (const auto& item : pending) t0 = std::min(t0, item.raw_timestamp_us);
    for (auto& item : pending) item.obs.timestamp = item.raw_timestamp_us - t0;

    // Group into sessions. The BRAS id joins the key so a session never
    // spans observation domains.
    using GroupKey =
        std::tuple<std::string, std::string, std::string, std::string, std::string>;
    std::map<GroupKey, std::vector<const Pending*>> groups;
    for (const auto& item : pending) {
        groups[GroupKey{item.obs.client_ip, item.obs.server_ip, item.obs.host,
                        item.obs.bras_id, item.correlation}]
            .push_back(&item);
    }

    const auto gap_us = static_cast<std::int64_t>(mapping.session_gap_s * 1e6);
    for (auto& [key, members] : groups) {
        std::stable_sort(members.begin(), members.end(), [](const Pending* a, const Pending* b) {
            return a->obs.timestamp < b->obs.timestamp;
        });
        const std::string correlation = std::get<4>(key);
        const std::string base_id = std::get<0>(key) + "~" + std::get<1>(key) + "~" +
                                    std::get<2>(key) +
                                    (correlation.empty() ? "" : "~" + correlation);

        std::vector<std::vector<const Pending*>> segments;
        for (const Pending* item : members) {
            const bool fresh = segments.empty() ||
                               (correlation.empty() &&
                                item->obs.timestamp - segments.back().back()->obs.timestamp >
                                    gap_us);
            if (fresh) segments.emplace_back();
            segments.back().push_back(item);
        }

        for (std::size_t seg = 0; seg < segments.size(); ++seg) {
            const std::string session_id = segments.size() == 1 && !correlation.empty()
                                               ? base_id
                                               : base_id + "#" + std::to_string(seg);
            std::vector<ResponseObservation> observations;
            observations.reserve(segments[seg].size());
            for (const Pending* item : segments[seg]) {
                ResponseObservation obs = item->obs;
                obs.session_id = session_id;
                observations.push_back(std::move(obs));
            }
            const std::int64_t request_time = observations.front().timestamp;
            result.sessions.push_back(session_from_packets(std::move(observations), request_time));
        }
    }

    std::sort(result.sessions.begin(), result.sessions.end(),
              [](const SessionRecord& a, const SessionRecord& b) {
                  return std::tie(a.request_time, a.session_id) <
                         std::tie(b.request_time, b.session_id);
              });
    for (const auto& session : result.sessions) {
        for (const auto& obs : session.responses) result.observations.push_back(obs);
    }
    std::stable_sort(result.observations.begin(), result.observations.end(),
                     [](const ResponseObservation& a, const ResponseObservation& b) {
                         return std::tie(a.timestamp, a.session_id) <
                                std::tie(b.timestamp, b.session_id);
                     });
    result.stats.retained = result.observations.size();
    return result;
}

}  // namespace hijackmon

#endif  // HIJACKMON_INGEST_HPP
