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

#ifndef HIJACKMON_LOCATOR_HPP
#define HIJACKMON_LOCATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "hijackmon/csv.hpp"
#include "hijackmon/detector.hpp"
#include "hijackmon/errors.hpp"
#include "hijackmon/jsonl.hpp"

namespace hijackmon {

/// One row of the three-level routing hierarchy: which border router and
/// core router sit above a BRAS domain.
struct TopologyRow {
    std::string bras_id;
    std::string border_router_id;
    std::string core_router_id;

    bool operator==(const TopologyRow&) const = default;
};

/// Validated BRAS -> border router -> core router tree. Each BRAS hangs off
/// exactly one border router and each border router off exactly one core
/// router; anything else is rejected at construction.
class Topology {
public:
    Topology() = default;

    explicit Topology(std::vector<TopologyRow> rows) : rows_(std::move(rows)) {
        for (const auto& row : rows_) {
            if (row.bras_id.empty() || row.border_router_id.empty() ||
                row.core_router_id.empty()) {
                throw InvalidTopologyError("empty node identifier in topology row");
            }
            if (!bras_to_border_.emplace(row.bras_id, row.border_router_id).second) {
                throw InvalidTopologyError("BRAS '" + row.bras_id +
                                           "' appears in more than one row");
            }
            auto [it, inserted] =
                border_to_core_.emplace(row.border_router_id, row.core_router_id);
            if (!inserted && it->second != row.core_router_id) {
                throw InvalidTopologyError("border router '" + row.border_router_id +
                                           "' is wired to two core routers");
            }
        }
        // Levels must not alias one another or the tree walk is ambiguous.
        for (const auto& [bras, br] : bras_to_border_) {
            if (border_to_core_.count(bras) != 0) {
                throw InvalidTopologyError("node '" + bras +
                                           "' is both a BRAS and a border router");
            }
            (void)br;
        }
    }

    const std::vector<TopologyRow>& rows() const noexcept { return rows_; }
    bool empty() const noexcept { return rows_.empty(); }

    bool has_bras(const std::string& bras_id) const {
        return bras_to_border_.count(bras_id) != 0;
    }

    /// True for any known node id, at any of the three levels.
    bool contains_node(const std::string& node) const {
        if (bras_to_border_.count(node) != 0) return true;
        if (border_to_core_.count(node) != 0) return true;
        for (const auto& [br, cr] : border_to_core_) {
            (void)br;
            if (cr == node) return true;
        }
        return false;
    }

    const std::string& border_router_of(const std::string& bras_id) const {
        auto it = bras_to_border_.find(bras_id);
        if (it == bras_to_border_.end()) {
            throw UnknownBrasError("BRAS '" + bras_id + "' has no topology row");
        }
        return it->second;
    }

    const std::string& core_router_of_border(const std::string& border_id) const {
        auto it = border_to_core_.find(border_id);
        if (it == border_to_core_.end()) {
            throw UnknownNodeError("border router '" + border_id + "' has no topology row");
        }
        return it->second;
    }

    const std::string& core_router_of(const std::string& bras_id) const {
        return core_router_of_border(border_router_of(bras_id));
    }

    std::vector<std::string> bras_ids() const {
        std::vector<std::string> ids;
        ids.reserve(rows_.size());
        for (const auto& row : rows_) ids.push_back(row.bras_id);
        return ids;
    }

    /// True when `node` lies on the upstream path of `bras_id` (the BRAS
    /// itself, its border router or its core router). A bypass tap at `node`
    /// sees exactly the traffic of the BRAS domains below it.
    bool in_subtree(const std::string& bras_id, const std::string& node) const {
        if (bras_id == node) return true;
        const std::string& br = border_router_of(bras_id);
        return br == node || core_router_of_border(br) == node;
    }

    void save_csv(std::ostream& out) const {
        out << "bras_id,border_router_id,core_router_id\n";
        for (const auto& row : rows_) {
            out << csv_join({row.bras_id, row.border_router_id, row.core_router_id}) << '\n';
        }
    }

    void save_csv(const std::filesystem::path& path) const {
        auto out = open_output_file(path);
        save_csv(out);
    }

    static Topology load_csv(std::istream& in, const std::string& origin) {
        std::vector<TopologyRow> rows;
        std::string line;
        std::size_t line_no = 0;
        bool saw_header = false;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (!saw_header) {
                if (line != "bras_id,border_router_id,core_router_id") {
                    throw CorruptInputFileError(origin + " line " + std::to_string(line_no) +
                                                ": unexpected header '" + line + "'");
                }
                saw_header = true;
                continue;
            }
            auto fields = csv_split(line);
            if (fields.size() != 3) {
                throw CorruptInputFileError(origin + " line " + std::to_string(line_no) +
                                            ": expected 3 fields, got " +
                                            std::to_string(fields.size()));
            }
            rows.push_back(TopologyRow{fields[0], fields[1], fields[2]});
        }
        if (!saw_header) {
            throw CorruptInputFileError(origin + ": missing header line");
        }
        return Topology(std::move(rows));
    }

    static Topology load_csv(const std::filesystem::path& path) {
        auto in = open_input_file(path);
        return load_csv(in, path.string());
    }

private:
    std::vector<TopologyRow> rows_;
    std::map<std::string, std::string> bras_to_border_;
    std::map<std::string, std::string> border_to_core_;
};

/// Hijack-record tally per BRAS domain.
struct AttackDistribution {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;
};

enum class LocationLevel { Bras, BorderRouter, CoreRouter, Unresolved };

/// Where the evidence converges. converged_node is absent exactly when the
/// walk ends Unresolved; the autonomous domain (the core routers still in
/// play) is then reported instead of a single device.
struct LocationResult {
    std::optional<std::string> converged_node;
    LocationLevel level = LocationLevel::Unresolved;
    std::vector<std::string> supporting_bras;
    double confidence = 0.0;  ///< fraction of records explained by the converged subtree
    std::vector<std::string> autonomous_domain;
};

inline AttackDistribution attack_distribution(const std::vector<HijackRecord>& records) {
    AttackDistribution dist;
    for (const auto& record : records) {
        ++dist.counts[record.bras_id];
        ++dist.total;
    }
    return dist;
}

/// Walks the evidence up the topology: keep the BRAS domains holding at
/// least `min_share` of all records, then lift the set level by level until
/// it collapses to a single device. The confidence is the share of all
/// records (filtered noise included) that fall inside the converged node's
/// subtree.
inline LocationResult converge(const AttackDistribution& dist, const Topology& topology,
                               double min_share) {
    for (const auto& [bras, count] : dist.counts) {
        (void)count;
        if (!topology.has_bras(bras)) {
            throw UnknownBrasError("BRAS '" + bras + "' from the attack distribution "
                                   "has no topology row");
        }
    }

    LocationResult result;
    if (dist.total == 0) {
        return result;  // Unresolved, confidence 0
    }

    const double threshold = min_share * static_cast<double>(dist.total);
    std::vector<std::string> active;
    for (const auto& [bras, count] : dist.counts) {
        if (static_cast<double>(count) >= threshold && count > 0) {
            active.push_back(bras);
        }
    }
    if (active.empty()) {
        return result;
    }
    result.supporting_bras = active;  // map order, already sorted

    auto explained_share = [&](auto&& in_subtree) {
        std::uint64_t explained = 0;
        for (const auto& [bras, count] : dist.counts) {
            if (in_subtree(bras)) explained += count;
        }
        return static_cast<double>(explained) / static_cast<double>(dist.total);
    };

    if (active.size() == 1) {
        const std::string& bras = active.front();
        result.converged_node = bras;
        result.level = LocationLevel::Bras;
        result.confidence = explained_share([&](const std::string& b) { return b == bras; });
        return result;
    }

    std::set<std::string> borders;
    for (const auto& bras : active) borders.insert(topology.border_router_of(bras));
    if (borders.size() == 1) {
        const std::string& br = *borders.begin();
        result.converged_node = br;
        result.level = LocationLevel::BorderRouter;
        result.confidence = explained_share(
            [&](const std::string& b) { return topology.border_router_of(b) == br; });
        return result;
    }

    std::set<std::string> cores;
    for (const auto& br : borders) cores.insert(topology.core_router_of_border(br));
    if (cores.size() == 1) {
        const std::string& cr = *cores.begin();
        result.converged_node = cr;
        result.level = LocationLevel::CoreRouter;
        result.confidence = explained_share(
            [&](const std::string& b) { return topology.core_router_of(b) == cr; });
        return result;
    }

    // No single device explains the spread: report the autonomous domain of
    // the core routers still involved.
    result.level = LocationLevel::Unresolved;
    result.autonomous_domain.assign(cores.begin(), cores.end());
    result.confidence = explained_share(
        [&](const std::string& b) { return cores.count(topology.core_router_of(b)) != 0; });
    return result;
}

/// Per-BRAS share of 302 responses among all responses observed there.
/// Domains with no observations are absent (no denominator).
inline std::map<std::string, double> redirect_share_by_bras(
    const std::vector<ResponseObservation>& observations) {
    std::map<std::string, std::uint64_t> total;
    std::map<std::string, std::uint64_t> redirects;
    for (const auto& obs : observations) {
        ++total[obs.bras_id];
        if (obs.http_status == 302) ++redirects[obs.bras_id];
    }
    std::map<std::string, double> shares;
    for (const auto& [bras, n] : total) {
        shares[bras] = static_cast<double>(redirects[bras]) / static_cast<double>(n);
    }
    return shares;
}

namespace detail {

inline double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace detail

/// Cross-checks a location against the per-BRAS 302-share statistics. When
/// every supporting BRAS shows a 302 share above the median of all domains
/// by z_threshold robust deviations (median absolute deviation), the
/// confidence is raised by a factor of 1.1, capped at 1.0. The converged
/// node and level are never touched. An empty supporting set fails the gate.
inline LocationResult corroborate(LocationResult result,
                                  const std::map<std::string, double>& shares,
                                  double z_threshold) {
    if (result.supporting_bras.empty() || shares.empty()) return result;

    std::vector<double> all;
    all.reserve(shares.size());
    for (const auto& [bras, share] : shares) {
        (void)bras;
        all.push_back(share);
    }
    const double median = detail::median_of(all);
    std::vector<double> deviations;
    deviations.reserve(all.size());
    for (double share : all) deviations.push_back(std::abs(share - median));
    const double mad = detail::median_of(deviations);

    for (const auto& bras : result.supporting_bras) {
        auto it = shares.find(bras);
        if (it == shares.end()) return result;           // no data, gate fails
        if (it->second <= median + z_threshold * mad) return result;
    }
    result.confidence = std::min(1.0, result.confidence * 1.1);
    return result;
}

inline std::string location_level_name(LocationLevel level) {
    switch (level) {
        case LocationLevel::Bras: return "BRAS";
        case LocationLevel::BorderRouter: return "BorderRouter";
        case LocationLevel::CoreRouter: return "CoreRouter";
        case LocationLevel::Unresolved: return "Unresolved";
    }
    return "Unresolved";
}

inline json to_json(const LocationResult& result) {
    json j{
        {"converged_node", result.converged_node ? json(*result.converged_node) : json(nullptr)},
        {"level", location_level_name(result.level)},
        {"supporting_bras", result.supporting_bras},
        {"confidence", result.confidence},
    };
    if (result.level == LocationLevel::Unresolved && !result.autonomous_domain.empty()) {
        j["autonomous_domain"] = result.autonomous_domain;
    }
    return j;
}

}  // namespace hijackmon

#endif  // HIJACKMON_LOCATOR_HPP
