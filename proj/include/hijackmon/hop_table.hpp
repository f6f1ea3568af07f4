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

#ifndef HIJACKMON_HOP_TABLE_HPP
#define HIJACKMON_HOP_TABLE_HPP

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "hijackmon/csv.hpp"
#include "hijackmon/errors.hpp"
#include "hijackmon/session.hpp"

namespace hijackmon {

/// One learned baseline row: the normal route hop count for a target host's
/// server IP as seen from one BRAS domain.
struct HopTableEntry {
    std::string host;
    std::string server_ip;
    std::string bras_id;
    HopCount normal_hops;
    std::uint64_t sample_count = 0;
    std::int64_t last_updated = 0;

    bool operator==(const HopTableEntry&) const = default;
};

/// Baseline table of normal route hop counts keyed by
/// (host, server_ip, bras_id). Hop counts are stable per observation point,
/// so entries are kept per BRAS; cross-BRAS hop counts differ legitimately.
///
/// The baseline estimator is the mode of the retained samples, with ties
/// broken toward the larger hop count: camouflage packets travel fewer hops,
/// so rounding the baseline upward is the false-positive-minimizing
/// direction. A bounded window of recent samples is retained per key so the
/// mode stays recomputable after route changes; the window is in-memory
/// working state and is not persisted.
class HopTable {
public:
    /// Retained-sample window per key.
    static constexpr std::size_t kSampleWindow = 1024;

    explicit HopTable(std::size_t learning_min_samples = 5)
        : learning_min_samples_(learning_min_samples) {}

    std::size_t learning_min_samples() const noexcept { return learning_min_samples_; }
    std::size_t size() const noexcept { return slots_.size(); }
    bool empty() const noexcept { return slots_.empty(); }

    /// Admits one observation into the baseline. Callers must feed only
    /// traffic trusted to be hijack-free (a learning phase) or sessions the
    /// detector has cleared; the table itself cannot tell poison from truth.
    void learn(const ResponseObservation& obs) {
        obs.validate();
        Slot& slot = slots_[Key{obs.host, obs.server_ip, obs.bras_id}];
        slot.samples.push_back(infer_hops(obs.ttl).value());
        if (slot.samples.size() > kSampleWindow) slot.samples.pop_front();
        slot.normal_hops = mode_of(slot.samples);
        slot.sample_count += 1;
        slot.last_updated = obs.timestamp;
    }

    /// Returns the learned baseline, or nothing while the key is unknown or
    /// still below the minimum sample gate.
    std::optional<HopCount> lookup_normal_hops(const std::string& host,
                                               const std::string& server_ip,
                                               const std::string& bras_id) const {
        auto it = slots_.find(Key{host, server_ip, bras_id});
        if (it == slots_.end()) return std::nullopt;
        if (it->second.sample_count < learning_min_samples_) return std::nullopt;
        return HopCount(it->second.normal_hops);
    }

    /// Snapshot of all entries, sorted by key.
    std::vector<HopTableEntry> entries() const {
        std::vector<HopTableEntry> rows;
        rows.reserve(slots_.size());
        for (const auto& [key, slot] : slots_) {
            rows.push_back(HopTableEntry{key.host, key.server_ip, key.bras_id,
                                         HopCount(slot.normal_hops), slot.sample_count,
                                         slot.last_updated});
        }
        return rows;
    }

    /// Retained sample window for one key, oldest first. Empty when the key
    /// is unknown. Exposed so baselines can be audited against raw samples.
    std::vector<int> retained_samples(const std::string& host, const std::string& server_ip,
                                      const std::string& bras_id) const {
        auto it = slots_.find(Key{host, server_ip, bras_id});
        if (it == slots_.end()) return {};
        return {it->second.samples.begin(), it->second.samples.end()};
    }

    /// Equality over the persisted view (the CSV columns); the in-memory
    /// sample window is deliberately excluded so load(save(t)) == t holds.
    bool operator==(const HopTable& other) const { return entries() == other.entries(); }

    void save(std::ostream& out) const {
        out << "host,server_ip,bras_id,normal_hops,sample_count,last_updated\n";
        for (const auto& entry : entries()) {
            out << csv_join({entry.host, entry.server_ip, entry.bras_id,
                             std::to_string(entry.normal_hops.value()),
                             std::to_string(entry.sample_count),
                             std::to_string(entry.last_updated)})
                << '\n';
        }
    }

    void save(const std::filesystem::path& path) const {
        auto out = open_output_file(path);
        save(out);
    }

    static HopTable load(std::istream& in, const std::string& origin,
                         std::size_t learning_min_samples = 5) {
        HopTable table(learning_min_samples);
        std::string line;
        std::size_t line_no = 0;
        bool saw_header = false;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (!saw_header) {
                if (line != "host,server_ip,bras_id,normal_hops,sample_count,last_updated") {
                    throw CorruptTableFileError(origin + " line " + std::to_string(line_no) +
                                                ": unexpected header '" + line + "'");
                }
                saw_header = true;
                continue;
            }
            auto fields = csv_split(line);
            if (fields.size() != 6) {
                throw CorruptTableFileError(origin + " line " + std::to_string(line_no) +
                                            ": expected 6 fields, got " +
                                            std::to_string(fields.size()));
            }
            Key key{fields[0], fields[1], fields[2]};
            if (table.slots_.count(key) != 0) {
                throw CorruptTableFileError(origin + " line " + std::to_string(line_no) +
                                            ": duplicate key (" + key.host + ", " +
                                            key.server_ip + ", " + key.bras_id + ")");
            }
            int hops = parse_int_field<int, CorruptTableFileError>(fields[3], origin, line_no);
            if (hops < 0 || hops > 254) {
                throw CorruptTableFileError(origin + " line " + std::to_string(line_no) +
                                            ": hop count out of range: " + fields[3]);
            }
            auto count = parse_int_field<std::uint64_t, CorruptTableFileError>(fields[4], origin, line_no);
            if (count < 1) {
                throw CorruptTableFileError(origin + " line " + std::to_string(line_no) +
                                            ": sample_count must be >= 1");
            }
            Slot slot;
            slot.normal_hops = hops;
            slot.sample_count = count;
            slot.last_updated = parse_int_field<std::int64_t, CorruptTableFileError>(fields[5], origin, line_no);
            // Reseed the window with the persisted baseline so later learn()
            // calls blend new routes against the previous consensus.
            slot.samples.assign(std::min<std::uint64_t>(count, kSampleWindow), hops);
            table.slots_.emplace(std::move(key), std::move(slot));
        }
        if (!saw_header) {
            throw CorruptTableFileError(origin + ": missing header line");
        }
        return table;
    }

    static HopTable load(const std::filesystem::path& path, std::size_t learning_min_samples = 5) {
        auto in = open_input_file(path);
        return load(in, path.string(), learning_min_samples);
    }

private:
    struct Key {
        std::string host;
        std::string server_ip;
        std::string bras_id;
        friend auto operator<=>(const Key&, const Key&) = default;
    };

    struct Slot {
        std::deque<int> samples;
        int normal_hops = 0;
        std::uint64_t sample_count = 0;
        std::int64_t last_updated = 0;
    };

    static int mode_of(const std::deque<int>& samples) {
        std::map<int, std::size_t> freq;
        for (int s : samples) ++freq[s];
        int best = 0;
        std::size_t best_count = 0;
        for (const auto& [hops, count] : freq) {
            // >= keeps the larger value on ties (map iterates ascending).
            if (count >= best_count) {
                best = hops;
                best_count = count;
            }
        }
        return best;
    }

    std::map<Key, Slot> slots_;
    std::size_t learning_min_samples_;
};

/// Builds a table from a batch of trusted observations.
inline HopTable build_hop_table(const std::vector<ResponseObservation>& observations,
                                std::size_t learning_min_samples = 5) {
    HopTable table(learning_min_samples);
    for (const auto& obs : observations) table.learn(obs);
    return table;
}

}  // namespace hijackmon

#endif  // HIJACKMON_HOP_TABLE_HPP
