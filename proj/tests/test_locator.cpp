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

#include <set>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "hijackmon/locator.hpp"
#include "hijackmon/rng.hpp"
#include "test_util.hpp"

using namespace hijackmon;
using hijackmon::test::make_obs;

namespace {

HijackRecord record_in(const std::string& bras, std::int64_t ts = 0) {
    return HijackRecord{"site.example.test", "198.51.100.1", bras, "10.0.0.1", ts,
                        HijackKind::Redirect302};
}

AttackDistribution dist_of(std::initializer_list<std::pair<const char*, std::uint64_t>> counts) {
    AttackDistribution dist;
    for (const auto& [bras, n] : counts) {
        dist.counts[bras] = n;
        dist.total += n;
    }
    return dist;
}

}  // namespace

TEST_CASE("attack_distribution tallies records per BRAS", "[locator]") {
    CHECK(attack_distribution({}).total == 0);
    CHECK(attack_distribution({}).counts.empty());

    auto dist = attack_distribution({record_in("b1"), record_in("b1"), record_in("b3")});
    CHECK(dist.total == 3);
    CHECK(dist.counts.at("b1") == 2);
    CHECK(dist.counts.at("b3") == 1);

    std::vector<HijackRecord> bulk(100, record_in("b2"));
    auto single = attack_distribution(bulk);
    CHECK(single.counts.size() == 1);
    CHECK(single.counts.at("b2") == 100);
    CHECK(single.total == 100);
}

TEST_CASE("topology enforces the tree shape", "[locator]") {
    CHECK_NOTHROW(Topology({{"b1", "BR1", "CR1"}, {"b2", "BR1", "CR1"}}));
    CHECK_THROWS_AS(Topology({{"b1", "BR1", "CR1"}, {"b1", "BR2", "CR1"}}),
                    InvalidTopologyError);
    CHECK_THROWS_AS(Topology({{"b1", "BR1", "CR1"}, {"b2", "BR1", "CR2"}}),
                    InvalidTopologyError);
    CHECK_THROWS_AS(Topology({{"b1", "BR1", "CR1"}, {"BR1", "BR2", "CR1"}}),
                    InvalidTopologyError);
    CHECK_THROWS_AS(Topology({{"", "BR1", "CR1"}}), InvalidTopologyError);
}

TEST_CASE("converge lifts evidence level by level", "[locator]") {
    const Topology topology(
        {{"b1", "BR1", "CR1"}, {"b2", "BR1", "CR1"}, {"b3", "BR2", "CR1"}});

    SECTION("noise-filtered border-router convergence") {
        auto result = converge(dist_of({{"b1", 40}, {"b2", 38}, {"b3", 2}}), topology, 0.05);
        CHECK(result.level == LocationLevel::BorderRouter);
        REQUIRE(result.converged_node.has_value());
        CHECK(*result.converged_node == "BR1");
        CHECK(result.supporting_bras == std::vector<std::string>{"b1", "b2"});
        // 78 of 80 records sit under BR1; b3's 2 noise records do not.
        CHECK_THAT(result.confidence, Catch::Matchers::WithinAbs(0.975, 1e-12));
    }

    SECTION("single-domain evidence stays at the BRAS") {
        auto result = converge(dist_of({{"b1", 10}}), topology, 0.05);
        CHECK(result.level == LocationLevel::Bras);
        REQUIRE(result.converged_node.has_value());
        CHECK(*result.converged_node == "b1");
        CHECK_THAT(result.confidence, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }

    SECTION("evidence spread over two core routers is unresolved") {
        const Topology two_cores(
            {{"b1", "BR1", "CR1"}, {"b2", "BR2", "CR2"}});
        auto result = converge(dist_of({{"b1", 5}, {"b2", 5}}), two_cores, 0.05);
        CHECK(result.level == LocationLevel::Unresolved);
        CHECK_FALSE(result.converged_node.has_value());
        CHECK(result.autonomous_domain == std::vector<std::string>{"CR1", "CR2"});
        CHECK_THAT(result.confidence, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }

    SECTION("core-router convergence across two border routers") {
        auto result = converge(dist_of({{"b1", 30}, {"b3", 30}}), topology, 0.05);
        CHECK(result.level == LocationLevel::CoreRouter);
        REQUIRE(result.converged_node.has_value());
        CHECK(*result.converged_node == "CR1");
    }

    SECTION("unknown BRAS in the distribution") {
        CHECK_THROWS_AS(converge(dist_of({{"ghost", 5}}), topology, 0.05), UnknownBrasError);
    }

    SECTION("no evidence stays unresolved") {
        auto result = converge(AttackDistribution{}, topology, 0.05);
        CHECK(result.level == LocationLevel::Unresolved);
        CHECK_FALSE(result.converged_node.has_value());
        CHECK(result.confidence == 0.0);
    }
}

TEST_CASE("candidate sets only shrink as the level rises", "[locator]") {
    DetRng rng(4242);
    for (int round = 0; round < 100; ++round) {
        // Random tree: brases onto borders onto cores, round-robin.
        const int n_bras = static_cast<int>(2 + rng.bounded(20));
        const int n_br = static_cast<int>(1 + rng.bounded(6));
        const int n_cr = static_cast<int>(1 + rng.bounded(3));
        std::vector<TopologyRow> rows;
        for (int b = 0; b < n_bras; ++b) {
            rows.push_back({"bras" + std::to_string(b), "BR" + std::to_string(b % n_br),
                            "CR" + std::to_string(b % n_br % n_cr)});
        }
        Topology topology(rows);

        AttackDistribution dist;
        for (int b = 0; b < n_bras; ++b) {
            if (rng.bernoulli(0.6)) {
                dist.counts["bras" + std::to_string(b)] = 1 + rng.bounded(50);
            }
        }
        for (const auto& [bras, count] : dist.counts) dist.total += count;

        // Independent recomputation of the lift sizes.
        const double threshold = 0.05 * static_cast<double>(dist.total);
        std::set<std::string> active, borders, cores;
        for (const auto& [bras, count] : dist.counts) {
            if (static_cast<double>(count) >= threshold && count > 0) active.insert(bras);
        }
        for (const auto& bras : active) borders.insert(topology.border_router_of(bras));
        for (const auto& br : borders) cores.insert(topology.core_router_of_border(br));
        CHECK(borders.size() <= active.size());
        CHECK(cores.size() <= borders.size());

        if (dist.total == 0) continue;
        auto result = converge(dist, topology, 0.05);
        if (active.size() == 1) {
            CHECK(result.level == LocationLevel::Bras);
        } else if (borders.size() == 1) {
            CHECK(result.level == LocationLevel::BorderRouter);
        } else if (cores.size() == 1) {
            CHECK(result.level == LocationLevel::CoreRouter);
        } else {
            CHECK(result.level == LocationLevel::Unresolved);
        }
    }
}

TEST_CASE("redirect_share_by_bras computes per-domain 302 ratios", "[locator]") {
    std::vector<ResponseObservation> observations;
    auto add = [&](const std::string& bras, int status) {
        observations.push_back(
            make_obs("s" + std::to_string(observations.size()), 52, 1, 0, status,
                     "site.example.test", "198.51.100.1", bras));
    };
    add("b1", 200);
    add("b1", 200);
    add("b1", 302);
    add("b1", 200);
    add("b2", 200);
    add("b2", 301);  // 301 is not a 302

    auto shares = redirect_share_by_bras(observations);
    CHECK_THAT(shares.at("b1"), Catch::Matchers::WithinAbs(0.25, 1e-12));
    CHECK_THAT(shares.at("b2"), Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK(shares.find("b3") == shares.end());  // no responses, no denominator
    CHECK(redirect_share_by_bras({}).empty());
}

TEST_CASE("corroborate raises confidence only on elevated 302 shares", "[locator]") {
    LocationResult base;
    base.converged_node = "BR1";
    base.level = LocationLevel::BorderRouter;
    base.supporting_bras = {"b1", "b2"};
    base.confidence = 0.8;

    std::map<std::string, double> shares{{"b1", 0.5}, {"b2", 0.6}, {"b3", 0.01},
                                         {"b4", 0.02}, {"b5", 0.01}, {"b6", 0.02}};

    SECTION("every supporting BRAS elevated: multiplicative boost") {
        auto boosted = corroborate(base, shares, 2.0);
        CHECK_THAT(boosted.confidence, Catch::Matchers::WithinAbs(0.88, 1e-12));
        CHECK(boosted.converged_node == base.converged_node);
        CHECK(boosted.level == base.level);
    }

    SECTION("boost caps at 1.0") {
        base.confidence = 0.95;
        CHECK_THAT(corroborate(base, shares, 2.0).confidence,
                   Catch::Matchers::WithinAbs(1.0, 1e-12));
    }

    SECTION("a supporting BRAS at the median blocks the boost") {
        std::map<std::string, double> flat{{"b1", 0.5}, {"b2", 0.1}, {"b3", 0.1},
                                           {"b4", 0.1},  {"b5", 0.1}};
        base.supporting_bras = {"b1", "b2"};  // b2 sits at the median
        auto unchanged = corroborate(base, flat, 2.0);
        CHECK_THAT(unchanged.confidence, Catch::Matchers::WithinAbs(0.8, 1e-12));
    }

    SECTION("empty supporting set never boosts") {
        base.supporting_bras.clear();
        CHECK_THAT(corroborate(base, shares, 2.0).confidence,
                   Catch::Matchers::WithinAbs(0.8, 1e-12));
    }

    SECTION("supporting BRAS without share data never boosts") {
        base.supporting_bras = {"b1", "zz"};
        CHECK_THAT(corroborate(base, shares, 2.0).confidence,
                   Catch::Matchers::WithinAbs(0.8, 1e-12));
    }
}

TEST_CASE("topology CSV round-trips", "[locator]") {
    Topology topology({{"b1", "BR1", "CR1"}, {"b2", "BR1", "CR1"}, {"b3", "BR2", "CR1"}});
    std::ostringstream out;
    topology.save_csv(out);
    std::istringstream in(out.str());
    auto loaded = Topology::load_csv(in, "mem");
    CHECK(loaded.rows() == topology.rows());

    std::istringstream bad("nope\n");
    CHECK_THROWS_AS(Topology::load_csv(bad, "mem"), CorruptInputFileError);
}

TEST_CASE("location JSON shape", "[locator]") {
    LocationResult result;
    result.converged_node = "BR1";
    result.level = LocationLevel::BorderRouter;
    result.supporting_bras = {"b1", "b2"};
    result.confidence = 0.975;
    auto j = to_json(result);
    CHECK(j["converged_node"] == "BR1");
    CHECK(j["level"] == "BorderRouter");
    CHECK(j["confidence"] == 0.975);
    CHECK_FALSE(j.contains("autonomous_domain"));

    LocationResult unresolved;
    unresolved.autonomous_domain = {"CR1", "CR2"};
    auto ju = to_json(unresolved);
    CHECK(ju["converged_node"].is_null());
    CHECK(ju["level"] == "Unresolved");
    CHECK(ju["autonomous_domain"] == json::array({"CR1", "CR2"}));
}
