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

#ifndef HIJACKMON_EVALUATOR_HPP
#define HIJACKMON_EVALUATOR_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "hijackmon/detector.hpp"
#include "hijackmon/errors.hpp"
#include "hijackmon/hop_table.hpp"
#include "hijackmon/jsonl.hpp"
#include "hijackmon/rng.hpp"
#include "hijackmon/simulator.hpp"

namespace hijackmon {

/// Session-level confusion tallies. Positive class: a hijacked session.
struct EvalCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + fp + tn + fn; }

    bool operator==(const EvalCounts&) const = default;
};

/// The metric suite over one confusion table. Metrics with a zero
/// denominator are reported absent, never as 0 or 1, with the reason listed
/// under `undefined`.
struct MetricReport {
    EvalCounts counts;
    std::optional<double> detection_rate;        ///< recall, tp / (tp + fn)
    std::optional<double> false_alarm_rate;      ///< fp / (fp + tn)
    std::optional<double> missed_detection_rate; ///< fn / (tp + fn)
    std::optional<double> accuracy;              ///< (tp + tn) / total
    std::map<std::string, std::string> undefined;
};

inline MetricReport metrics_from_counts(const EvalCounts& counts) {
    MetricReport report;
    report.counts = counts;
    const auto positives = counts.tp + counts.fn;
    const auto negatives = counts.fp + counts.tn;
    if (positives > 0) {
        report.detection_rate = static_cast<double>(counts.tp) / static_cast<double>(positives);
        report.missed_detection_rate =
            static_cast<double>(counts.fn) / static_cast<double>(positives);
    } else {
        report.undefined["detection_rate"] = "no hijacked samples in ground truth";
        report.undefined["missed_detection_rate"] = "no hijacked samples in ground truth";
    }
    if (negatives > 0) {
        report.false_alarm_rate = static_cast<double>(counts.fp) / static_cast<double>(negatives);
    } else {
        report.undefined["false_alarm_rate"] = "no normal samples in ground truth";
    }
    if (counts.total() > 0) {
        report.accuracy =
            static_cast<double>(counts.tp + counts.tn) / static_cast<double>(counts.total());
    } else {
        report.undefined["accuracy"] = "no samples";
    }
    return report;
}

namespace detail {

inline std::string list_some(const std::set<std::string>& ids, std::size_t limit = 5) {
    std::string out = "[";
    std::size_t shown = 0;
    for (const auto& id : ids) {
        if (shown == limit) {
            out += ", ...";
            break;
        }
        if (shown > 0) out += ", ";
        out += id;
        ++shown;
    }
    out += "]";
    return out;
}

}  // namespace detail

/// Scores detector verdicts against labeled ground truth. The two inputs
/// must cover exactly the same session_id set.
inline MetricReport score(const std::vector<Verdict>& verdicts,
                          const std::vector<SessionRecord>& truth) {
    std::map<std::string, bool> predicted;  // session -> predicted positive
    for (const auto& verdict : verdicts) {
        if (!predicted.emplace(verdict.session_id, verdict.state == VerdictState::Hijacked)
                 .second) {
            throw SessionSetMismatchError("duplicate verdict for session '" +
                                          verdict.session_id + "'");
        }
    }

    std::set<std::string> truth_ids;
    for (const auto& session : truth) {
        if (!truth_ids.insert(session.session_id).second) {
            throw SessionSetMismatchError("duplicate ground-truth session '" +
                                          session.session_id + "'");
        }
    }

    std::set<std::string> missing_verdicts;   // in truth, no verdict
    std::set<std::string> missing_truth;      // verdict without truth
    for (const auto& id : truth_ids) {
        if (predicted.find(id) == predicted.end()) missing_verdicts.insert(id);
    }
    for (const auto& [id, pos] : predicted) {
        (void)pos;
        if (truth_ids.find(id) == truth_ids.end()) missing_truth.insert(id);
    }
    if (!missing_verdicts.empty() || !missing_truth.empty()) {
        throw SessionSetMismatchError(
            std::to_string(missing_verdicts.size()) + " session(s) lack a verdict " +
            detail::list_some(missing_verdicts) + "; " + std::to_string(missing_truth.size()) +
            " verdict(s) lack ground truth " + detail::list_some(missing_truth));
    }

    EvalCounts counts;
    for (const auto& session : truth) {
        if (!session.label) {
            throw UnlabeledSessionError("session '" + session.session_id +
                                        "' carries no ground-truth label");
        }
        const bool actual = is_hijacked(*session.label);
        const bool pred = predicted.at(session.session_id);
        if (actual && pred) ++counts.tp;
        else if (actual && !pred) ++counts.fn;
        else if (!actual && pred) ++counts.fp;
        else ++counts.tn;
    }
    return metrics_from_counts(counts);
}

struct RocPoint {
    int delta = 0;
    std::optional<double> false_alarm_rate;
    std::optional<double> detection_rate;
};

/// One ROC point per suspicion delta, produced by re-running the classifier
/// over the dataset. Deltas must be given sorted ascending.
inline std::vector<RocPoint> roc_sweep(const LabeledDataset& dataset, const HopTable& table,
                                       const std::vector<int>& deltas) {
    if (deltas.empty()) throw std::invalid_argument("roc_sweep: deltas must be non-empty");
    if (!std::is_sorted(deltas.begin(), deltas.end())) {
        throw std::invalid_argument("roc_sweep: deltas must be sorted ascending");
    }
    std::vector<RocPoint> points;
    points.reserve(deltas.size());
    for (int delta : deltas) {
        DetectionRun run = detect_sessions(dataset.sessions, table, delta);
        MetricReport report = score(run.verdicts, dataset.sessions);
        points.push_back(RocPoint{delta, report.false_alarm_rate, report.detection_rate});
    }
    return points;
}

struct ExperimentOptions {
    int delta = 1;
    std::size_t learning_min_samples = 5;
    /// Sessions in the hijack-free learning phase of each run. Defaults to
    /// enough traffic to pass the minimum-sample gate on every
    /// (host, server_ip, bras) key with ample margin.
    std::optional<int> warmup_sessions;
};

struct BatchResult {
    MetricReport aggregate;            ///< metrics over the summed counts
    std::vector<MetricReport> runs;    ///< per-run reports, in run order
};

/// Repeats generate -> learn -> detect -> score with per-run derived seeds
/// and aggregates the confusion counts by summation. Each run learns its hop
/// baseline from a hijack-free warmup stream generated from the same
/// scenario, then detects over a fresh attack stream spread across
/// `attack_duration_s` seconds.
inline BatchResult experiment_batch(const ScenarioConfig& scenario_template, int n_runs,
                                    double attack_duration_s,
                                    const ExperimentOptions& options = {}) {
    if (n_runs < 1) throw std::invalid_argument("experiment_batch: n_runs must be >= 1");
    if (attack_duration_s <= 0) {
        throw std::invalid_argument("experiment_batch: attack_duration_s must be > 0");
    }
    validate_scenario(scenario_template);

    int warmup_sessions;
    if (options.warmup_sessions) {
        warmup_sessions = *options.warmup_sessions;
    } else {
        std::size_t keys = 0;
        for (const auto& site : scenario_template.sites) {
            keys += site.server_ips.size() * scenario_template.topology.size();
        }
        // Mean of 4x the gate per key keeps the chance of an ungated key
        // negligible under uniform session placement.
        warmup_sessions = static_cast<int>(
            std::max<std::size_t>(static_cast<std::size_t>(scenario_template.n_sessions),
                                  4 * options.learning_min_samples * keys));
    }

    BatchResult result;
    EvalCounts summed;
    for (int run = 0; run < n_runs; ++run) {
        ScenarioConfig warmup = without_attack(scenario_template);
        warmup.n_sessions = warmup_sessions;
        warmup.rng_seed = derive_seed(scenario_template.rng_seed, 0xA0000000ULL + run);

        ScenarioConfig live = scenario_template;
        live.duration_s = attack_duration_s;
        live.rng_seed = derive_seed(scenario_template.rng_seed, 0xB0000000ULL + run);

        LabeledDataset warmup_data = generate_dataset(warmup);
        HopTable table = build_hop_table(warmup_data.observations, options.learning_min_samples);

        LabeledDataset live_data = generate_dataset(live);
        DetectionRun detection = detect_sessions(live_data.sessions, table, options.delta);
        MetricReport report = score(detection.verdicts, live_data.sessions);

        summed.tp += report.counts.tp;
        summed.fp += report.counts.fp;
        summed.tn += report.counts.tn;
        summed.fn += report.counts.fn;
        result.runs.push_back(std::move(report));
    }
    result.aggregate = metrics_from_counts(summed);
    return result;
}

// ---- serialization ----

inline json to_json(const MetricReport& report) {
    json j{{"counts",
            {{"tp", report.counts.tp},
             {"fp", report.counts.fp},
             {"tn", report.counts.tn},
             {"fn", report.counts.fn}}}};
    auto put = [&](const char* name, const std::optional<double>& value) {
        if (value) j[name] = *value;
    };
    put("detection_rate", report.detection_rate);
    put("false_alarm_rate", report.false_alarm_rate);
    put("missed_detection_rate", report.missed_detection_rate);
    put("accuracy", report.accuracy);
    if (!report.undefined.empty()) j["undefined"] = report.undefined;
    return j;
}

inline json to_json(const BatchResult& result) {
    json runs = json::array();
    for (const auto& run : result.runs) runs.push_back(to_json(run));
    return json{{"aggregate", to_json(result.aggregate)}, {"runs", std::move(runs)}};
}

/// delta,false_alarm_rate,detection_rate per line; absent metrics stay empty.
inline void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& points) {
    out << "delta,false_alarm_rate,detection_rate\n";
    for (const auto& point : points) {
        out << point.delta << ',';
        if (point.false_alarm_rate) out << json(*point.false_alarm_rate).dump();
        out << ',';
        if (point.detection_rate) out << json(*point.detection_rate).dump();
        out << '\n';
    }
}

/// Whitespace-separated plot data for gnuplot (`plot "roc.dat" using 2:3`).
/// Points with an undefined rate are skipped; gnuplot has no blank cell.
inline void write_roc_gnuplot(std::ostream& out, const std::vector<RocPoint>& points) {
    out << "# delta false_alarm_rate detection_rate\n";
    for (const auto& point : points) {
        if (!point.false_alarm_rate || !point.detection_rate) continue;
        out << point.delta << ' ' << json(*point.false_alarm_rate).dump() << ' '
            << json(*point.detection_rate).dump() << '\n';
    }
}

}  // namespace hijackmon

#endif  // HIJACKMON_EVALUATOR_HPP
