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

#include <deque>
#include <map>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "hijackmon/hop_table.hpp"
#include "hijackmon/rng.hpp"
#include "test_util.hpp"

using namespace hijackmon;
using hijackmon::test::make_obs;

namespace {

// Independent mode oracle over a sample log: highest count wins, ties go to
// the larger hop value.
int oracle_mode(const std::vector<int>& samples) {
    std::map<int, int> freq;
    for (int s : samples) ++freq[s];
    int best = -1;
    int best_count = -1;
    for (const auto& [hops, count] : freq) {
        if (count > best_count || (count == best_count && hops > best)) {
            best = hops;
            best_count = count;
        }
    }
    return best;
}

ResponseObservation learning_obs(int hops, std::int64_t ts, const std::string& host = "a",
                                 const std::string& ip = "198.51.100.1",
                                 const std::string& bras = "b1") {
    return make_obs("learn", 64 - hops, 1, ts, 200, host, ip, bras);
}

}  // namespace

TEST_CASE("first sample defines the baseline", "[hop_table]") {
    HopTable table(1);
    table.learn(learning_obs(12, 100));
    auto rows = table.entries();
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].normal_hops.value() == 12);
    CHECK(rows[0].sample_count == 1);
    CHECK(rows[0].last_updated == 100);
}

TEST_CASE("baseline is the sample mode, ties toward the larger count", "[hop_table]") {
    SECTION("majority wins: {12, 12, 11} -> 12") {
        HopTable table(1);
        table.learn(learning_obs(12, 1));
        table.learn(learning_obs(12, 2));
        table.learn(learning_obs(11, 3));
        CHECK(table.entries()[0].normal_hops.value() == 12);
        CHECK(oracle_mode({12, 12, 11}) == 12);
    }
    SECTION("tie breaks upward: {11, 12} -> 12") {
        HopTable table(1);
        table.learn(learning_obs(11, 1));
        table.learn(learning_obs(12, 2));
        CHECK(table.entries()[0].normal_hops.value() == 12);
        CHECK(oracle_mode({11, 12}) == 12);
    }
    SECTION("tie breaks upward regardless of arrival order") {
        HopTable table(1);
        table.learn(learning_obs(12, 1));
        table.learn(learning_obs(11, 2));
        CHECK(table.entries()[0].normal_hops.value() == 12);
    }
}

TEST_CASE("lookup respects the minimum-sample gate", "[hop_table]") {
    HopTable table(5);
    for (int i = 0; i < 10; ++i) table.learn(learning_obs(14, i));
    SECTION("known key over the gate") {
        auto hops = table.lookup_normal_hops("a", "198.51.100.1", "b1");
        REQUIRE(hops.has_value());
        CHECK(hops->value() == 14);
    }
    SECTION("unknown key") {
        CHECK_FALSE(table.lookup_normal_hops("a", "198.51.100.1", "other").has_value());
        CHECK_FALSE(table.lookup_normal_hops("z", "198.51.100.1", "b1").has_value());
    }
    SECTION("insufficient evidence") {
        table.learn(learning_obs(9, 0, "under", "198.51.100.2", "b1"));
        table.learn(learning_obs(9, 1, "under", "198.51.100.2", "b1"));
        CHECK_FALSE(table.lookup_normal_hops("under", "198.51.100.2", "b1").has_value());
    }
}

TEST_CASE("fuzzed learning matches the shadow-log mode oracle", "[hop_table]") {
    DetRng rng(20260809);
    HopTable table(1);

    struct KeyParts {
        std::string host, ip, bras;
    };
    std::vector<KeyParts> keys;
    for (int i = 0; i < 7; ++i) {
        keys.push_back({"host" + std::to_string(i % 3), "198.51.100." + std::to_string(i),
                        "bras" + std::to_string(i % 2)});
    }

    // Shadow log maintained independently, same bounded-window policy.
    std::map<std::string, std::deque<int>> shadow;
    for (int step = 0; step < 5000; ++step) {
        const auto& key = keys[rng.bounded(keys.size())];
        const int hops = static_cast<int>(rng.bounded(20));
        table.learn(learning_obs(hops, step, key.host, key.ip, key.bras));
        auto& log = shadow[key.host + "|" + key.ip + "|" + key.bras];
        log.push_back(hops);
        if (log.size() > HopTable::kSampleWindow) log.pop_front();
    }

    for (const auto& key : keys) {
        auto retained = table.retained_samples(key.host, key.ip, key.bras);
        const auto& log = shadow[key.host + "|" + key.ip + "|" + key.bras];
        CHECK(retained == std::vector<int>(log.begin(), log.end()));
        if (!retained.empty()) {
            auto hops = table.lookup_normal_hops(key.host, key.ip, key.bras);
            REQUIRE(hops.has_value());
            CHECK(hops->value() == oracle_mode(retained));
        }
    }
}

TEST_CASE("save/load round-trips exactly", "[hop_table]") {
    SECTION("empty table") {
        HopTable table;
        std::ostringstream out;
        table.save(out);
        std::istringstream in(out.str());
        CHECK(HopTable::load(in, "mem") == table);
    }

    SECTION("three entries") {
        HopTable table(1);
        table.learn(learning_obs(12, 5, "a", "198.51.100.1", "b1"));
        table.learn(learning_obs(9, 6, "b", "198.51.100.2", "b1"));
        table.learn(learning_obs(17, 7, "c", "198.51.100.3", "b2"));
        std::ostringstream out;
        table.save(out);
        std::istringstream in(out.str());
        auto loaded = HopTable::load(in, "mem");
        CHECK(loaded == table);
        CHECK(loaded.entries().size() == 3);

        // Re-saving the loaded table reproduces the bytes.
        std::ostringstream again;
        loaded.save(again);
        CHECK(again.str() == out.str());
    }

    SECTION("fuzzed tables") {
        DetRng rng(99);
        for (int round = 0; round < 20; ++round) {
            HopTable table(1);
            const auto n = rng.bounded(40);
            for (std::uint64_t i = 0; i < n; ++i) {
                table.learn(learning_obs(static_cast<int>(rng.bounded(30)),
                                         static_cast<std::int64_t>(rng.bounded(100000)),
                                         "h" + std::to_string(rng.bounded(5)),
                                         "198.51.100." + std::to_string(rng.bounded(5)),
                                         "b" + std::to_string(rng.bounded(3))));
            }
            std::ostringstream out;
            table.save(out);
            std::istringstream in(out.str());
            CHECK(HopTable::load(in, "mem") == table);
        }
    }
}

TEST_CASE("corrupt table files are rejected with a line number", "[hop_table]") {
    const std::string header = "host,server_ip,bras_id,normal_hops,sample_count,last_updated\n";

    SECTION("duplicate key") {
        std::istringstream in(header + "a,1.1.1.1,b1,10,3,0\na,1.1.1.1,b1,11,4,0\n");
        CHECK_THROWS_MATCHES(HopTable::load(in, "t.csv"), CorruptTableFileError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("line 3")));
    }
    SECTION("bad header") {
        std::istringstream in("host,server_ip\n");
        CHECK_THROWS_AS(HopTable::load(in, "t.csv"), CorruptTableFileError);
    }
    SECTION("wrong field count") {
        std::istringstream in(header + "a,1.1.1.1,b1,10,3\n");
        CHECK_THROWS_MATCHES(HopTable::load(in, "t.csv"), CorruptTableFileError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("line 2")));
    }
    SECTION("non-numeric hop count") {
        std::istringstream in(header + "a,1.1.1.1,b1,elf,3,0\n");
        CHECK_THROWS_AS(HopTable::load(in, "t.csv"), CorruptTableFileError);
    }
    SECTION("hop count out of range") {
        std::istringstream in(header + "a,1.1.1.1,b1,400,3,0\n");
        CHECK_THROWS_AS(HopTable::load(in, "t.csv"), CorruptTableFileError);
    }
    SECTION("zero sample count") {
        std::istringstream in(header + "a,1.1.1.1,b1,10,0,0\n");
        CHECK_THROWS_AS(HopTable::load(in, "t.csv"), CorruptTableFileError);
    }
    SECTION("empty file") {
        std::istringstream in("");
        CHECK_THROWS_AS(HopTable::load(in, "t.csv"), CorruptTableFileError);
    }
}

TEST_CASE("loading a missing file reports FileNotFound", "[hop_table]") {
    CHECK_THROWS_AS(HopTable::load(std::filesystem::path("/nonexistent/t.csv")),
                    FileNotFoundError);
}

TEST_CASE("file round-trip through the filesystem", "[hop_table]") {
    test::TempDir dir("hoptable");
    HopTable table(1);
    table.learn(learning_obs(13, 123));
    const auto path = dir.path() / "table.csv";
    table.save(path);
    CHECK(HopTable::load(path) == table);
}
