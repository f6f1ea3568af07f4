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

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hijackmon/detector.hpp"
#include "hijackmon/evaluator.hpp"
#include "hijackmon/hop_table.hpp"
#include "hijackmon/ingest.hpp"
#include "hijackmon/jsonl.hpp"
#include "hijackmon/locator.hpp"
#include "hijackmon/simulator.hpp"

namespace fs = std::filesystem;
using hijackmon::json;

namespace {

/// CLI11 config reader for JSON documents. Top-level keys address options of
/// the main command; one level of nesting addresses a subcommand's options,
/// e.g. {"detect": {"delta": 2}}. Command-line values take precedence.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const std::exception& e) {
            throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::FileError("config must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                for (const auto& [name, leaf] : value.items()) {
                    if (leaf.is_object()) {
                        throw CLI::FileError("config nesting deeper than one subcommand: '" +
                                             key + "." + name + "'");
                    }
                    items.push_back(make_item({key}, name, leaf));
                }
            } else {
                items.push_back(make_item({}, key, value));
            }
        }
        return items;
    }

private:
    static CLI::ConfigItem make_item(std::vector<std::string> parents, const std::string& name,
                                     const json& value) {
        CLI::ConfigItem item;
        item.parents = std::move(parents);
        item.name = name;
        if (value.is_array()) {
            for (const auto& element : value) item.inputs.push_back(scalar(element));
        } else {
            item.inputs.push_back(scalar(value));
        }
        return item;
    }

    static std::string scalar(const json& value) {
        if (value.is_string()) return value.get<std::string>();
        return value.dump();  // numbers and booleans in canonical text form
    }
};

void cmd_simulate(const std::string& scenario_path, const std::string& out_dir) {
    auto config = hijackmon::load_scenario(scenario_path);
    auto dataset = hijackmon::generate_dataset(config);
    hijackmon::write_dataset(dataset, out_dir);
    // The locator consumes the wiring as its own CSV interface; emit it
    // alongside the dataset so the pipeline needs no extra step.
    hijackmon::Topology(config.topology).save_csv(fs::path(out_dir) / "topology.csv");
    std::cerr << "simulate: wrote " << dataset.counts.sessions << " sessions ("
              << dataset.counts.hijacked302 + dataset.counts.hijacked200 << " hijacked, "
              << dataset.counts.observations << " observations) to " << out_dir << "\n";
}

void cmd_learn(const std::string& observations_path, const std::string& table_out,
               std::size_t min_samples) {
    auto observations = hijackmon::read_observations_jsonl(observations_path);
    auto table = hijackmon::build_hop_table(observations, min_samples);
    table.save(fs::path(table_out));
    std::cerr << "learn: " << observations.size() << " observations -> " << table.size()
              << " baseline entries in " << table_out << "\n";
}

void cmd_detect(const std::string& sessions_path, const std::string& table_path, int delta,
                std::size_t min_samples, const std::string& out_dir,
                std::string verdicts_path, std::string hijacks_path) {
    if (verdicts_path.empty()) verdicts_path = (fs::path(out_dir) / "verdicts.jsonl").string();
    if (hijacks_path.empty()) hijacks_path = (fs::path(out_dir) / "hijacks.csv").string();

    auto sessions = hijackmon::read_sessions_jsonl(sessions_path);
    auto table = hijackmon::HopTable::load(fs::path(table_path), min_samples);
    auto run = hijackmon::detect_sessions(sessions, table, delta);
    hijackmon::write_verdicts_jsonl(verdicts_path, run.verdicts);
    hijackmon::write_hijacks_csv(fs::path(hijacks_path), run.records);
    std::cerr << "detect: " << sessions.size() << " sessions, " << run.records.size()
              << " confirmed hijacks -> " << verdicts_path << ", " << hijacks_path << "\n";
}

void cmd_locate(const std::string& hijacks_path, const std::string& topology_path,
                const std::string& observations_path, double min_share, double z_threshold,
                const std::string& out_path) {
    auto records = hijackmon::read_hijacks_csv(fs::path(hijacks_path));
    auto topology = hijackmon::Topology::load_csv(fs::path(topology_path));
    auto observations = hijackmon::read_observations_jsonl(observations_path);

    auto dist = hijackmon::attack_distribution(records);
    auto location = hijackmon::converge(dist, topology, min_share);
    auto shares = hijackmon::redirect_share_by_bras(observations);
    location = hijackmon::corroborate(std::move(location), shares, z_threshold);

    const json j = hijackmon::to_json(location);
    std::cout << j.dump(2) << "\n";
    if (!out_path.empty()) {
        auto out = hijackmon::open_output_file(fs::path(out_path));
        out << j.dump(2) << "\n";
    }
}

void cmd_eval(const std::string& verdicts_path, const std::string& sessions_path,
              const std::string& out_path, const std::vector<int>& roc_deltas,
              const std::string& table_path, std::size_t min_samples,
              const std::string& roc_out, const std::string& roc_plot) {
    auto verdicts = hijackmon::read_verdicts_jsonl(verdicts_path);
    auto sessions = hijackmon::read_sessions_jsonl(sessions_path);
    auto report = hijackmon::score(verdicts, sessions);

    const json j = hijackmon::to_json(report);
    std::cout << j.dump(2) << "\n";
    if (!out_path.empty()) {
        auto out = hijackmon::open_output_file(fs::path(out_path));
        out << j.dump(2) << "\n";
    }

    if (!roc_deltas.empty()) {
        if (table_path.empty()) {
            throw hijackmon::FileNotFoundError("--roc requires --hoptable for re-classification");
        }
        auto table = hijackmon::HopTable::load(fs::path(table_path), min_samples);
        hijackmon::LabeledDataset dataset;
        dataset.sessions = std::move(sessions);
        auto points = hijackmon::roc_sweep(dataset, table, roc_deltas);
        auto out = hijackmon::open_output_file(fs::path(roc_out));
        hijackmon::write_roc_csv(out, points);
        if (!roc_plot.empty()) {
            auto plot = hijackmon::open_output_file(fs::path(roc_plot));
            hijackmon::write_roc_gnuplot(plot, points);
        }
        std::cerr << "eval: wrote " << points.size() << " ROC points to " << roc_out << "\n";
    }
}

void cmd_experiment(const std::string& scenario_path, int runs, double attack_duration, int delta,
                    std::size_t min_samples, std::optional<int> warmup_sessions,
                    const std::string& out_path) {
    auto scenario = hijackmon::load_scenario(scenario_path);
    hijackmon::ExperimentOptions options;
    options.delta = delta;
    options.learning_min_samples = min_samples;
    options.warmup_sessions = warmup_sessions;
    auto result = hijackmon::experiment_batch(scenario, runs, attack_duration, options);

    const json j = hijackmon::to_json(result);
    std::cout << j.dump(2) << "\n";
    if (!out_path.empty()) {
        auto out = hijackmon::open_output_file(fs::path(out_path));
        out << j.dump(2) << "\n";
    }
}

void cmd_ingest(const std::string& raw_path, const std::string& mapping_path,
                std::string format, const std::string& out_dir) {
    auto mapping = hijackmon::IngestMapping::load(mapping_path);
    if (format.empty()) {
        format = fs::path(raw_path).extension() == ".csv" ? "csv" : "jsonl";
    }
    auto in = hijackmon::open_input_file(raw_path);
    auto result = hijackmon::normalize_events(
        in, format == "csv" ? hijackmon::RawFormat::Csv : hijackmon::RawFormat::Jsonl, mapping);

    hijackmon::write_observations_jsonl(fs::path(out_dir) / "observations.jsonl",
                                        result.observations);
    hijackmon::write_sessions_jsonl(fs::path(out_dir) / "sessions.jsonl", result.sessions);
    std::cerr << "ingest: " << result.stats.input << " events in, " << result.stats.retained
              << " retained (" << result.stats.dropped_status << " off-status, "
              << result.stats.dropped_invalid << " invalid), " << result.sessions.size()
              << " sessions -> " << out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hijackmon: detect and locate HTTP spectral (bypass) hijacking"};
    app.require_subcommand(1);
    app.set_config("--config", "", "JSON config file supplying defaults for any flag");
    app.config_formatter(std::make_shared<JsonConfig>());

    // simulate
    std::string sim_scenario, sim_out_dir;
    auto* simulate = app.add_subcommand(
        "simulate", "Generate a labeled traffic dataset from a scenario document");
    simulate->add_option("scenario", sim_scenario, "scenario JSON document")->required();
    simulate->add_option("out_dir", sim_out_dir, "output directory for the dataset")->required();

    // learn
    std::string learn_obs, learn_out;
    std::size_t learn_min_samples = 5;
    auto* learn = app.add_subcommand(
        "learn", "Build the per-site routing-hops baseline from trusted observations");
    learn->add_option("observations", learn_obs, "observations JSONL")->required();
    learn->add_option("hoptable", learn_out, "output hop table CSV")->required();
    learn->add_option("--min-samples", learn_min_samples,
                      "samples required before a baseline is served");

    // detect
    std::string det_sessions, det_table, det_out_dir = ".", det_verdicts, det_hijacks;
    int det_delta = 1;
    std::size_t det_min_samples = 5;
    auto* detect =
        app.add_subcommand("detect", "Classify sessions against a hop-table baseline");
    detect->add_option("sessions", det_sessions, "sessions JSONL")->required();
    detect->add_option("hoptable", det_table, "hop table CSV")->required();
    detect->add_option("--delta", det_delta, "suspicion margin in hops")
        ->check(CLI::NonNegativeNumber);
    detect->add_option("--min-samples", det_min_samples,
                       "samples required before a baseline is served");
    detect->add_option("--out-dir", det_out_dir, "directory for default output names")
        ->envname("HIJACKMON_OUT_DIR");
    detect->add_option("--verdicts", det_verdicts, "verdicts JSONL path");
    detect->add_option("--hijacks", det_hijacks, "hijack records CSV path");

    // locate
    std::string loc_hijacks, loc_topology, loc_observations, loc_out;
    double loc_min_share = 0.05, loc_z = 2.0;
    auto* locate = app.add_subcommand(
        "locate", "Converge hijack records up the topology to the attack point");
    locate->add_option("hijacks", loc_hijacks, "hijack records CSV")->required();
    locate->add_option("topology", loc_topology, "topology CSV")->required();
    locate->add_option("observations", loc_observations, "observations JSONL")->required();
    locate->add_option("--min-share", loc_min_share,
                       "minimum record share for a BRAS to count as evidence")
        ->check(CLI::Range(0.0, 1.0));
    locate->add_option("--z-threshold", loc_z,
                       "robust deviations above the median 302-share for corroboration")
        ->check(CLI::NonNegativeNumber);
    locate->add_option("--out", loc_out, "also write the location JSON here");

    // eval
    std::string eval_verdicts, eval_sessions, eval_out, eval_table, eval_roc_out = "roc.csv";
    std::string eval_roc_plot;
    std::vector<int> eval_roc;
    std::size_t eval_min_samples = 5;
    auto* eval =
        app.add_subcommand("eval", "Score verdicts against labeled ground truth");
    eval->add_option("verdicts", eval_verdicts, "verdicts JSONL")->required();
    eval->add_option("sessions", eval_sessions, "labeled sessions JSONL")->required();
    eval->add_option("--out", eval_out, "also write the metrics JSON here");
    eval->add_option("--roc", eval_roc, "suspicion deltas to sweep for ROC data");
    eval->add_option("--hoptable", eval_table, "hop table CSV (required with --roc)");
    eval->add_option("--min-samples", eval_min_samples,
                     "samples required before a baseline is served");
    eval->add_option("--roc-out", eval_roc_out, "ROC CSV path");
    eval->add_option("--roc-plot", eval_roc_plot, "also write gnuplot-ready ROC data here");

    // experiment
    std::string exp_scenario, exp_out;
    int exp_runs = 30, exp_delta = 1;
    double exp_duration = 300.0;
    std::size_t exp_min_samples = 5;
    std::optional<int> exp_warmup;
    auto* experiment = app.add_subcommand(
        "experiment", "Run repeated simulate/learn/detect/score rounds and aggregate");
    experiment->add_option("scenario", exp_scenario, "scenario JSON template")->required();
    experiment->add_option("--runs", exp_runs, "number of rounds")->check(CLI::Range(1, 100000));
    experiment->add_option("--attack-duration", exp_duration,
                           "seconds of traffic per round");
    experiment->add_option("--delta", exp_delta, "suspicion margin in hops")
        ->check(CLI::NonNegativeNumber);
    experiment->add_option("--min-samples", exp_min_samples,
                           "samples required before a baseline is served");
    experiment->add_option("--warmup-sessions", exp_warmup,
                           "override the per-round learning stream length");
    experiment->add_option("--out", exp_out, "also write the aggregate JSON here");

    // ingest
    std::string ing_raw, ing_mapping, ing_format, ing_out_dir = ".";
    auto* ingest = app.add_subcommand(
        "ingest", "Normalize a capture export into canonical observation/session JSONL");
    ingest->add_option("input", ing_raw, "raw export (CSV or JSONL)")->required();
    ingest->add_option("--mapping", ing_mapping, "column/BRAS mapping JSON")->required();
    ingest->add_option("--format", ing_format, "csv or jsonl (default: by extension)")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    ingest->add_option("--out-dir", ing_out_dir, "output directory")
        ->envname("HIJACKMON_OUT_DIR");

    simulate->callback([&] { cmd_simulate(sim_scenario, sim_out_dir); });
    learn->callback([&] { cmd_learn(learn_obs, learn_out, learn_min_samples); });
    detect->callback([&] {
        cmd_detect(det_sessions, det_table, det_delta, det_min_samples, det_out_dir,
                   det_verdicts, det_hijacks);
    });
    locate->callback([&] {
        cmd_locate(loc_hijacks, loc_topology, loc_observations, loc_min_share, loc_z, loc_out);
    });
    eval->callback([&] {
        cmd_eval(eval_verdicts, eval_sessions, eval_out, eval_roc, eval_table, eval_min_samples,
                 eval_roc_out, eval_roc_plot);
    });
    experiment->callback([&] {
        cmd_experiment(exp_scenario, exp_runs, exp_duration, exp_delta, exp_min_samples,
                       exp_warmup, exp_out);
    });
    ingest->callback([&] { cmd_ingest(ing_raw, ing_mapping, ing_format, ing_out_dir); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the usage problem
        return code == 0 ? 0 : 2;
    } catch (const hijackmon::Error& e) {
        std::cerr << e.what() << "\n";  // "<ErrorName>: <context>"
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
