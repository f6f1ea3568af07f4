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

#ifndef HIJACKMON_SESSION_HPP
#define HIJACKMON_SESSION_HPP

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hijackmon/errors.hpp"

namespace hijackmon {

/// Ground-truth class of a session. Assigned by the simulator; absent on
/// ingested external data.
enum class Label { Normal, Hijacked302, Hijacked200 };

inline bool is_hijacked(Label label) { return label != Label::Normal; }

/// Route hop count, either observed on a packet or learned as a per-site
/// baseline. Valid range is 0..254 (a TTL of at least 1 must survive).
class HopCount {
public:
    HopCount() = default;

    explicit constexpr HopCount(int hops) : hops_(hops) {
        if (hops < 0 || hops > 254) {
            throw std::invalid_argument("hop count out of range [0, 254]");
        }
    }

    constexpr int value() const noexcept { return hops_; }

    friend constexpr auto operator<=>(HopCount, HopCount) = default;

private:
    int hops_ = 0;
};

/// Detection-relevant fields of a single captured HTTP response packet as
/// seen at a BRAS mirror point.
struct ResponseObservation {
    std::string session_id;
    std::string server_ip;   ///< purported target server (IPv4)
    std::string client_ip;   ///< victim (IPv4)
    std::string bras_id;     ///< observing BRAS domain
    int ttl = 0;             ///< 1..255 as seen on the wire
    std::uint32_t tcp_seq = 0;
    int http_status = 0;
    std::optional<std::string> redirect_location;  ///< present iff status is 301/302
    std::int64_t timestamp = 0;  ///< microseconds from dataset start
    std::string host;            ///< target host name

    bool operator==(const ResponseObservation&) const = default;

    /// Checks the per-packet invariants. bras_id membership in the active
    /// topology is a dataset-level invariant checked where a topology is in
    /// scope, not here.
    void validate() const {
        if (ttl < 1 || ttl > 255) {
            throw std::invalid_argument("ttl out of range [1, 255]: " + std::to_string(ttl));
        }
        const bool is_redirect = http_status == 301 || http_status == 302;
        if (is_redirect != redirect_location.has_value()) {
            throw std::invalid_argument(
                "redirect_location must be present exactly for 301/302 responses "
                "(status " + std::to_string(http_status) + ")");
        }
    }
};

/// One HTTP session: the request instant plus every response observed for it,
/// ordered by timestamp.
struct SessionRecord {
    std::string session_id;
    std::int64_t request_time = 0;
    std::vector<ResponseObservation> responses;
    std::optional<Label> label;

    bool operator==(const SessionRecord&) const = default;
};

/// Smallest conventional initial TTL ({64, 128, 255}) not below the observed
/// value. These are the Linux, Windows and network-stack defaults.
inline constexpr int initial_ttl_for(int ttl) {
    if (ttl <= 64) return 64;
    if (ttl <= 128) return 128;
    return 255;
}

/// Recovers the route hop count from an on-the-wire TTL by inferring the
/// sender's initial TTL. Requires ttl in [1, 255].
inline HopCount infer_hops(int ttl) {
    if (ttl < 1 || ttl > 255) {
        throw std::invalid_argument("ttl out of range [1, 255]: " + std::to_string(ttl));
    }
    return HopCount(initial_ttl_for(ttl) - ttl);
}

/// Assembles a SessionRecord from the observations of one session. Responses
/// are sorted by timestamp (stable, so equal timestamps keep arrival order);
/// the label is left unset.
inline SessionRecord session_from_packets(std::vector<ResponseObservation> observations,
                                          std::int64_t request_time) {
    if (observations.empty()) {
        throw EmptySessionError("cannot build a session from zero observations");
    }
    const auto& first = observations.front();
    for (const auto& obs : observations) {
        if (obs.session_id != first.session_id) {
            throw MixedSessionError("session_id mismatch: '" + first.session_id +
                                    "' vs '" + obs.session_id + "'");
        }
        if (obs.client_ip != first.client_ip || obs.bras_id != first.bras_id) {
            throw MixedSessionError("observations for session '" + first.session_id +
                                    "' disagree on client_ip or bras_id");
        }
    }
    std::stable_sort(observations.begin(), observations.end(),
                     [](const ResponseObservation& a, const ResponseObservation& b) {
                         return a.timestamp < b.timestamp;
                     });
    SessionRecord record;
    record.session_id = first.session_id;
    record.request_time = request_time;
    record.responses = std::move(observations);
    return record;
}

}  // namespace hijackmon

#endif  // HIJACKMON_SESSION_HPP
