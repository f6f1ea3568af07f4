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

#ifndef HIJACKMON_JSONL_HPP
#define HIJACKMON_JSONL_HPP

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hijackmon/csv.hpp"
#include "hijackmon/errors.hpp"
#include "hijackmon/session.hpp"

namespace hijackmon {

using nlohmann::json;

// One JSON object per line, field names matching the domain type fields.
// This is the interchange format between simulator, ingester, detector and
// evaluator; plain nlohmann objects keep keys sorted, so output is
// byte-deterministic.

inline std::string label_name(Label label) {
    switch (label) {
        case Label::Normal: return "Normal";
        case Label::Hijacked302: return "Hijacked302";
        case Label::Hijacked200: return "Hijacked200";
    }
    return "Normal";
}

inline Label label_from_name(const std::string& name) {
    if (name == "Normal") return Label::Normal;
    if (name == "Hijacked302") return Label::Hijacked302;
    if (name == "Hijacked200") return Label::Hijacked200;
    throw CorruptInputFileError("unknown label '" + name + "'");
}

inline json to_json(const ResponseObservation& obs) {
    json j{
        {"session_id", obs.session_id},
        {"server_ip", obs.server_ip},
        {"client_ip", obs.client_ip},
        {"bras_id", obs.bras_id},
        {"ttl", obs.ttl},
        {"tcp_seq", obs.tcp_seq},
        {"http_status", obs.http_status},
        {"timestamp", obs.timestamp},
        {"host", obs.host},
    };
    if (obs.redirect_location) j["redirect_location"] = *obs.redirect_location;
    return j;
}

inline ResponseObservation observation_from_json(const json& j) {
    ResponseObservation obs;
    obs.session_id = j.at("session_id").get<std::string>();
    obs.server_ip = j.at("server_ip").get<std::string>();
    obs.client_ip = j.at("client_ip").get<std::string>();
    obs.bras_id = j.at("bras_id").get<std::string>();
    obs.ttl = j.at("ttl").get<int>();
    obs.tcp_seq = j.at("tcp_seq").get<std::uint32_t>();
    obs.http_status = j.at("http_status").get<int>();
    obs.timestamp = j.at("timestamp").get<std::int64_t>();
    obs.host = j.at("host").get<std::string>();
    if (j.contains("redirect_location") && !j["redirect_location"].is_null()) {
        obs.redirect_location = j["redirect_location"].get<std::string>();
    }
    obs.validate();
    return obs;
}

inline json to_json(const SessionRecord& session) {
    json responses = json::array();
    for (const auto& obs : session.responses) responses.push_back(to_json(obs));
    json j{
        {"session_id", session.session_id},
        {"request_time", session.request_time},
        {"responses", std::move(responses)},
    };
    if (session.label) j["label"] = label_name(*session.label);
    return j;
}

inline SessionRecord session_from_json(const json& j) {
    SessionRecord session;
    session.session_id = j.at("session_id").get<std::string>();
    session.request_time = j.at("request_time").get<std::int64_t>();
    for (const auto& item : j.at("responses")) {
        session.responses.push_back(observation_from_json(item));
    }
    if (j.contains("label") && !j["label"].is_null()) {
        session.label = label_from_name(j["label"].get<std::string>());
    }
    // Restore the ordering/consistency invariants for hand-written files.
    if (!session.responses.empty()) {
        if (session.responses.front().session_id != session.session_id) {
            throw MixedSessionError("responses of session '" + session.session_id +
                                    "' carry a different session_id");
        }
        auto rebuilt = session_from_packets(std::move(session.responses), session.request_time);
        session.responses = std::move(rebuilt.responses);
    }
    return session;
}

/// Parses a JSONL stream, reporting the 1-based line number on failure.
template <typename T, typename Parser>
std::vector<T> read_jsonl(std::istream& in, Parser parse, const std::string& origin) {
    std::vector<T> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            items.push_back(parse(json::parse(line)));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw CorruptInputFileError(origin + " line " + std::to_string(line_no) +
                                        ": " + e.what());
        }
    }
    return items;
}

template <typename T, typename Serializer>
void write_jsonl(std::ostream& out, const std::vector<T>& items, Serializer serialize) {
    for (const auto& item : items) {
        out << serialize(item).dump() << '\n';
    }
}

inline std::vector<ResponseObservation> read_observations_jsonl(const std::filesystem::path& path) {
    auto in = open_input_file(path);
    return read_jsonl<ResponseObservation>(
        in, [](const json& j) { return observation_from_json(j); }, path.string());
}

inline std::vector<SessionRecord> read_sessions_jsonl(const std::filesystem::path& path) {
    auto in = open_input_file(path);
    return read_jsonl<SessionRecord>(
        in, [](const json& j) { return session_from_json(j); }, path.string());
}

inline void write_observations_jsonl(const std::filesystem::path& path,
                                     const std::vector<ResponseObservation>& observations) {
    auto out = open_output_file(path);
    write_jsonl(out, observations, [](const ResponseObservation& o) { return to_json(o); });
}

inline void write_sessions_jsonl(const std::filesystem::path& path,
                                 const std::vector<SessionRecord>& sessions) {
    auto out = open_output_file(path);
    write_jsonl(out, sessions, [](const SessionRecord& s) { return to_json(s); });
}

}  // namespace hijackmon

#endif  // HIJACKMON_JSONL_HPP
