#include "mma/precedence.hpp"

#include <random>
#include <set>
#include <stdexcept>

#include <gtest/gtest.h>

namespace mma {
namespace {

SourceDescriptor source(std::string id, Visibility vis, bool ad_hoc = false) {
  SourceDescriptor s;
  s.id = std::move(id);
  s.visibility = vis;
  s.timemap_endpoint = "http://" + s.id + ".test/timemap/";
  s.ad_hoc = ad_hoc;
  return s;
}

const auto kPub = Visibility::public_;
const auto kPriv = Visibility::private_;

using Tiers = std::vector<std::vector<std::string>>;

TEST(ProfileNames, RoundTrip) {
  EXPECT_EQ(all_profiles().size(), 5u);
  for (const auto p : all_profiles()) EXPECT_EQ(profile_from_string(to_string(p)), p);
  EXPECT_FALSE(profile_from_string("allAll"));
  EXPECT_FALSE(profile_from_string("privatefirst"));
}

class ProfileTest : public ::testing::Test {
 protected:
  std::vector<SourceDescriptor> sources_ = {source("Pr1", kPriv), source("Pu1", kPub),
                                            source("Pr2", kPriv), source("Pu2", kPub),
                                            source("Pu3", kPub)};
  OriginalUri uri_{"http://example.com/"};
};

TEST_F(ProfileTest, NoArchivesHasNoTiers) {
  const auto plan = compile_plan(PrecedenceProfile::noArchives, {}, sources_, uri_);
  EXPECT_TRUE(plan.tiers.empty());
  EXPECT_EQ(plan.short_circuit, ShortCircuit::never);
}

TEST_F(ProfileTest, PublicOnly) {
  const auto plan = compile_plan(PrecedenceProfile::publicOnly, {}, sources_, uri_);
  EXPECT_EQ(plan.tiers, (Tiers{{"Pu1", "Pu2", "Pu3"}}));
  EXPECT_EQ(plan.short_circuit, ShortCircuit::never);
}

TEST_F(ProfileTest, PrivateOnly) {
  const auto plan = compile_plan(PrecedenceProfile::privateOnly, {}, sources_, uri_);
  EXPECT_EQ(plan.tiers, (Tiers{{"Pr1", "Pr2"}}));
}

TEST_F(ProfileTest, PrivateFirst) {
  const auto plan = compile_plan(PrecedenceProfile::privateFirst, {}, sources_, uri_);
  EXPECT_EQ(plan.tiers, (Tiers{{"Pr1", "Pr2"}, {"Pu1", "Pu2", "Pu3"}}));
  EXPECT_EQ(plan.short_circuit, ShortCircuit::stop_when_nonempty);
}

TEST_F(ProfileTest, PublicFirst) {
  const auto plan = compile_plan(PrecedenceProfile::publicFirst, {}, sources_, uri_);
  EXPECT_EQ(plan.tiers, (Tiers{{"Pu1", "Pu2", "Pu3"}, {"Pr1", "Pr2"}}));
  EXPECT_EQ(plan.short_circuit, ShortCircuit::stop_when_nonempty);
}

TEST_F(ProfileTest, NoProfileIsOneTierOfEverything) {
  const auto plan = compile_plan(std::nullopt, {}, sources_, uri_);
  EXPECT_EQ(plan.tiers, (Tiers{{"Pr1", "Pu1", "Pr2", "Pu2", "Pu3"}}));
  EXPECT_EQ(plan.short_circuit, ShortCircuit::never);
}

TEST(Profiles, SingleExample) {
  const std::vector<SourceDescriptor> sources = {source("Pr1", kPriv), source("Pu1", kPub),
                                                 source("Pu2", kPub)};
  const auto plan = compile_plan(PrecedenceProfile::privateFirst, {}, sources,
                                 OriginalUri("http://example.com/"));
  EXPECT_EQ(plan.tiers, (Tiers{{"Pr1"}, {"Pu1", "Pu2"}}));
}

TEST(Profiles, EmptyPartitionIsAdvisory) {
  const std::vector<SourceDescriptor> pub_only = {source("Pu1", kPub)};
  const OriginalUri uri("http://example.com/");

  auto plan = compile_plan(PrecedenceProfile::privateOnly, {}, pub_only, uri);
  EXPECT_TRUE(plan.tiers.empty());
  EXPECT_TRUE(plan.empty_partition);

  plan = compile_plan(PrecedenceProfile::privateFirst, {}, pub_only, uri);
  EXPECT_EQ(plan.tiers, (Tiers{{}, {"Pu1"}}));
  EXPECT_TRUE(plan.empty_partition);

  plan = compile_plan(PrecedenceProfile::publicFirst, {}, {}, uri);
  EXPECT_TRUE(plan.tiers.empty());
  EXPECT_TRUE(plan.empty_partition);

  plan = compile_plan(PrecedenceProfile::publicOnly, {}, pub_only, uri);
  EXPECT_FALSE(plan.empty_partition);
}

// Alice's configuration: A, B, C personal archives plus I.
class SelectionTest : public ::testing::Test {
 protected:
  std::vector<SourceDescriptor> sources_ = {source("A", kPub), source("B", kPub),
                                            source("C", kPub), source("I", kPub)};
  std::vector<FilterRule> rules_ = {{"facebook.com", {"A", "B", "C"}},
                                    {"alicesembarassingphotos.net/vacation.html", {"A", "C"}}};
};

TEST_F(SelectionTest, FacebookNarrowsToPersonalArchives) {
  for (const char* uri : {"http://facebook.com/", "https://www.facebook.com/alice",
                          "http://FACEBOOK.com:80/x?y=1"}) {
    const auto plan = compile_plan(std::nullopt, rules_, sources_, OriginalUri(uri));
    EXPECT_EQ(plan.tiers, (Tiers{{"A", "B", "C"}})) << uri;
    EXPECT_EQ(plan.matched_rule, 0u);
  }
}

TEST_F(SelectionTest, HostAndPathRule) {
  auto plan = compile_plan(std::nullopt, rules_, sources_,
                           OriginalUri("http://alicesembarassingphotos.net/vacation.html"));
  EXPECT_EQ(plan.tiers, (Tiers{{"A", "C"}}));
  plan = compile_plan(std::nullopt, rules_, sources_,
                      OriginalUri("http://alicesembarassingphotos.net/other.html"));
  EXPECT_EQ(plan.tiers, (Tiers{{"A", "B", "C", "I"}}));
  EXPECT_FALSE(plan.matched_rule);
}

TEST_F(SelectionTest, SuffixNeedsLabelBoundary) {
  const auto plan =
      compile_plan(std::nullopt, rules_, sources_, OriginalUri("http://notfacebook.com/"));
  EXPECT_FALSE(plan.matched_rule);
}

TEST_F(SelectionTest, ExactUriMatcher) {
  const std::vector<FilterRule> rules = {{"HTTP://Example.com:80", {"I"}}};
  auto plan = compile_plan(std::nullopt, rules, sources_, OriginalUri("http://example.com/"));
  EXPECT_EQ(plan.tiers, (Tiers{{"I"}}));
  plan = compile_plan(std::nullopt, rules, sources_, OriginalUri("http://example.com/a"));
  EXPECT_EQ(plan.tiers.front().size(), 4u);
}

TEST_F(SelectionTest, FirstMatchWins) {
  std::vector<FilterRule> rules = rules_;
  rules.insert(rules.begin(), FilterRule{"www.facebook.com", {"I"}});
  auto plan = compile_plan(std::nullopt, rules, sources_, OriginalUri("http://www.facebook.com/"));
  EXPECT_EQ(plan.tiers, (Tiers{{"I"}}));
  plan = compile_plan(std::nullopt, rules, sources_, OriginalUri("http://m.facebook.com/"));
  EXPECT_EQ(plan.tiers, (Tiers{{"A", "B", "C"}}));
}

TEST_F(SelectionTest, AdHocSourcesBypassRules) {
  auto sources = sources_;
  sources.push_back(source("X", kPub, true));
  const auto plan = compile_plan(std::nullopt, rules_, sources, OriginalUri("http://facebook.com/"));
  EXPECT_EQ(plan.tiers, (Tiers{{"A", "B", "C", "X"}}));
}

TEST(ShortCircuit, Examples) {
  QueryPlan tiered{{{"Pr1"}, {"Pu1"}}, ShortCircuit::stop_when_nonempty};
  EXPECT_FALSE(evaluate_short_circuit(tiered, 0, 3));
  EXPECT_TRUE(evaluate_short_circuit(tiered, 0, 0));
  QueryPlan flat{{{"Pu1"}}, ShortCircuit::never};
  EXPECT_TRUE(evaluate_short_circuit(flat, 0, 100));
  EXPECT_THROW(evaluate_short_circuit(flat, 1, 0), std::out_of_range);
}

// Partition soundness, disjointness, determinism and rule precedence over
// random configurations.
TEST(PlanProperties, RandomConfigurations) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> hosts = {"a.org", "b.org", "www.a.org", "c.net"};
  for (int iter = 0; iter < 2000; ++iter) {
    std::vector<SourceDescriptor> sources;
    const int n = static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      sources.push_back(source("S" + std::to_string(i), rng() % 2 ? kPub : kPriv, rng() % 5 == 0));
    }
    std::vector<FilterRule> rules;
    for (int r = 0, nr = static_cast<int>(rng() % 3); r < nr; ++r) {
      FilterRule rule{hosts[rng() % hosts.size()], {}};
      for (const auto& s : sources) {
        if (rng() % 2) rule.source_ids.push_back(s.id);
      }
      rules.push_back(rule);
    }
    const OriginalUri uri("http://" + hosts[rng() % hosts.size()] + "/");
    std::optional<PrecedenceProfile> profile;
    if (rng() % 6) profile = all_profiles()[rng() % 5];

    const auto plan = compile_plan(profile, rules, sources, uri);
    EXPECT_EQ(plan, compile_plan(profile, rules, sources, uri));

    std::set<std::string> seen;
    for (std::size_t t = 0; t < plan.tiers.size(); ++t) {
      for (const auto& id : plan.tiers[t]) {
        ASSERT_TRUE(seen.insert(id).second) << "source in two tiers: " << id;
        const auto& s = *std::find_if(sources.begin(), sources.end(),
                                      [&](const auto& d) { return d.id == id; });
        if (profile == PrecedenceProfile::publicOnly) EXPECT_FALSE(s.is_private());
        if (profile == PrecedenceProfile::privateOnly) EXPECT_TRUE(s.is_private());
        if (profile == PrecedenceProfile::privateFirst) EXPECT_EQ(s.is_private(), t == 0);
        if (profile == PrecedenceProfile::publicFirst) EXPECT_EQ(s.is_private(), t == 1);
      }
    }
    if (profile == PrecedenceProfile::noArchives) EXPECT_TRUE(plan.tiers.empty());

    // Prepending a matching rule pins the configured candidates to its ids.
    FilterRule pin{uri.host(), {}};
    for (const auto& s : sources) {
      if (!s.ad_hoc && rng() % 2) pin.source_ids.push_back(s.id);
    }
    auto pinned_rules = rules;
    pinned_rules.insert(pinned_rules.begin(), pin);
    const auto pinned = compile_plan(std::nullopt, pinned_rules, sources, uri);
    std::set<std::string> expected(pin.source_ids.begin(), pin.source_ids.end());
    for (const auto& s : sources) {
      if (s.ad_hoc) expected.insert(s.id);
    }
    std::set<std::string> got;
    for (const auto& tier : pinned.tiers) got.insert(tier.begin(), tier.end());
    EXPECT_EQ(got, expected);
  }
}

}  // namespace
}  // namespace mma
