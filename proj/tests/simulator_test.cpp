#include "mma/simulator.hpp"

#include <future>
#include <thread>

#include <gtest/gtest.h>

#include "hierarchy_fixture.hpp"
#include "mma/codec.hpp"
#include "mma/errors.hpp"
#include "mma/link_header.hpp"

namespace mma::sim {
namespace {

using namespace std::chrono_literals;

const std::string kUriR = "http://example.com/";

FetchResponse get(const std::string& url, http::Headers headers = {},
                  std::chrono::milliseconds timeout = 5000ms) {
  FetchRequest req;
  req.url = url;
  req.headers = std::move(headers);
  req.timeout = timeout;
  return default_source_client()->fetch(req);
}

FetchResponse post(const std::string& url, const JsonValue& body) {
  FetchRequest req;
  req.method = "POST";
  req.url = url;
  req.headers.set("Content-Type", "application/json");
  req.body = body.dump();
  return default_source_client()->fetch(req);
}

SimArchiveSpec spec(std::string id, std::vector<std::string> keys) {
  SimArchiveSpec s;
  s.id = std::move(id);
  for (const auto& k : keys) s.holdings[kUriR].push_back({MementoDatetime::from_key(k)});
  return s;
}

TEST(SimArchive, ServesHoldingsWithRels) {
  SimArchive a(spec("A1", {"20010101000000", "20020101000000"}), "127.0.0.1");
  const auto res = get(a.timemap_endpoint() + kUriR);
  ASSERT_EQ(res.status, 200);
  const auto tm = parse_cdxj(res.body).timemap;
  ASSERT_EQ(tm.mementos.size(), 2u);
  EXPECT_EQ(tm.mementos[0].rel, "first memento");
  EXPECT_EQ(tm.mementos[1].rel, "last memento");
  EXPECT_EQ(tm.mementos[0].uri_m, a.base_url() + "/20010101000000/" + kUriR);
  EXPECT_EQ(tm.original->value(), kUriR);
}

TEST(SimArchive, AllFormatsAgree) {
  SimArchive a(spec("A1", {"20010101000000", "20020101000000"}), "127.0.0.1");
  const auto cdxj = parse_cdxj(get(a.timemap_endpoint() + kUriR).body).timemap;
  const auto link = parse_link(get(a.base_url() + "/timemap/link/" + kUriR).body).timemap;
  const auto json = parse_json(get(a.base_url() + "/timemap/json/" + kUriR).body).timemap;
  EXPECT_EQ(cdxj.mementos, link.mementos);
  EXPECT_EQ(cdxj.mementos, json.mementos);
  EXPECT_EQ(get(a.base_url() + "/timemap/warc/" + kUriR).status, 404);
}

TEST(SimArchive, EmptyHoldingsAreMetaOnly) {
  SimArchive a(spec("A1", {}), "127.0.0.1");
  const auto res = get(a.timemap_endpoint() + "http://nothing.example/");
  ASSERT_EQ(res.status, 200);
  const auto parsed = parse_cdxj(res.body);
  EXPECT_TRUE(parsed.timemap.mementos.empty());
  EXPECT_TRUE(parsed.timemap.original.has_value());
}

TEST(SimArchive, LatencyIsRespected) {
  auto s = spec("A1", {"20010101000000"});
  s.latency = 200ms;
  SimArchive a(std::move(s), "127.0.0.1");
  for (int i = 0; i < 3; ++i) {
    const auto start = std::chrono::steady_clock::now();
    ASSERT_EQ(get(a.timemap_endpoint() + kUriR).status, 200);
    const auto took = std::chrono::steady_clock::now() - start;
    EXPECT_GE(took, 200ms);
    EXPECT_LT(took, 250ms);
  }
}

TEST(SimArchive, ScriptedStatusFailure) {
  auto s = spec("A1", {"20010101000000"});
  s.failure = {Failure::Kind::status, 451};
  SimArchive a(std::move(s), "127.0.0.1");
  EXPECT_EQ(get(a.timemap_endpoint() + kUriR).status, 451);
}

TEST(SimArchive, TimeoutModeNeverAnswersWithinBudget) {
  auto s = spec("A1", {"20010101000000"});
  s.failure = {Failure::Kind::timeout, 0};
  const auto start = std::chrono::steady_clock::now();
  {
    SimArchive a(std::move(s), "127.0.0.1");
    const auto res = get(a.timemap_endpoint() + kUriR, {}, 300ms);
    EXPECT_EQ(res.failure, FetchResponse::Failure::timeout);
  }
  // Shutdown releases the held request instead of waiting it out.
  EXPECT_LT(std::chrono::steady_clock::now() - start, 3s);
}

TEST(SimArchive, LogsAreLosslessUnderConcurrency) {
  SimArchive a(spec("A1", {"20010101000000"}), "127.0.0.1");
  std::vector<std::future<int>> calls;
  for (int i = 0; i < 24; ++i) {
    calls.push_back(std::async(std::launch::async, [&, i] {
      return get(a.timemap_endpoint() + "http://example.com/" + std::to_string(i)).status;
    }));
  }
  for (auto& c : calls) EXPECT_EQ(c.get(), 200);
  const auto log = a.request_log();
  ASSERT_EQ(log.size(), 24u);
  for (std::size_t i = 1; i < log.size(); ++i) EXPECT_LE(log[i - 1].at, log[i].at);
  a.reset_log();
  EXPECT_TRUE(a.request_log().empty());
}

TEST(SimArchive, DereferencesMementos) {
  auto s = spec("A1", {"20010101000000"});
  s.holdings[kUriR].push_back({MementoDatetime::from_key("20020101000000"), 302, "text/html"});
  SimArchive a(std::move(s), "127.0.0.1");
  const auto ok = get(a.base_url() + "/20010101000000/" + kUriR);
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(ok.headers.get("Memento-Datetime"), "Mon, 01 Jan 2001 00:00:00 GMT");
  EXPECT_EQ(ok.headers.get("Content-Type"), "text/html");
  const auto redirect = get(a.base_url() + "/20020101000000/" + kUriR);
  EXPECT_EQ(redirect.status, 302);
  EXPECT_EQ(redirect.headers.get("Location"), kUriR);
  EXPECT_EQ(get(a.base_url() + "/20030101000000/" + kUriR).status, 404);
}

TEST(SimArchive, PrivateSpecRequiresAuth) {
  auto s = spec("P", {});
  s.visibility = Visibility::private_;
  EXPECT_THROW(SimArchive(s, "127.0.0.1"), ConfigError);
}

// --- private archives behind a gateway --------------------------------------

JsonValue private_topology(Failure::Kind kind = Failure::Kind::none, int status = 0) {
  JsonValue failure = "none";
  if (kind == Failure::Kind::timeout) failure = "timeout";
  if (kind == Failure::Kind::status) failure = JsonValue{{"status", status}};
  return JsonValue::parse(R"({
    "gateways": [{"id": "gw", "ttl": 60,
                  "users": [{"subject": "alice", "credential": "pw", "sources": ["P"]}]}],
    "archives": [{"id": "P", "visibility": "private", "auth": "gw",
                  "holdings": {"http://example.com/": ["20150601120000"]}}]
  })")
      .patch(JsonValue::array({{{"op", "add"}, {"path", "/archives/0/failure"}, {"value", failure}}}));
}

std::string issue(Simulator& sim, const std::string& source = "P") {
  const auto res = post(sim.base_url("gw") + "/token",
                        {{"subject", "alice"}, {"credential", "pw"}, {"source_id", source}});
  EXPECT_EQ(res.status, 200) << res.body;
  return JsonValue::parse(res.body).at("token").get<std::string>();
}

TEST(PrivateArchive, ChallengesWithoutToken) {
  Simulator sim(private_topology());
  const auto res = get(sim.archive("P").timemap_endpoint() + kUriR);
  ASSERT_EQ(res.status, 401);
  EXPECT_EQ(res.headers.get("WWW-Authenticate"), "Bearer realm=\"P\"");
  const auto links = parse_link_values(*res.headers.get("Link"), false).links;
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0].target, sim.base_url("gw") + "/");
  EXPECT_EQ(res.body.find("20150601120000"), std::string::npos);
}

TEST(PrivateArchive, ServesWithValidTokenAndRedactsIt) {
  Simulator sim(private_topology());
  const auto token = issue(sim);
  const auto res = get(sim.archive("P").timemap_endpoint() + kUriR,
                       {{"Authorization", "Bearer " + token}});
  ASSERT_EQ(res.status, 200);
  EXPECT_EQ(parse_cdxj(res.body).timemap.mementos.size(), 1u);
  const auto log = sim.archive("P").request_log();
  ASSERT_EQ(log.size(), 1u);
  bool saw_auth = false;
  for (const auto& [name, value] : log[0].headers) {
    EXPECT_EQ(value.find(token), std::string::npos);
    if (http::iequals(name, "Authorization")) {
      saw_auth = true;
      EXPECT_EQ(value, "[redacted]");
    }
  }
  EXPECT_TRUE(saw_auth);
}

// Holdings never leave a private archive without a valid token, whatever the
// request or failure mode.
TEST(PrivateArchive, NeverLeaksWithoutValidToken) {
  const std::vector<std::pair<Failure::Kind, int>> modes = {
      {Failure::Kind::none, 0}, {Failure::Kind::status, 451}, {Failure::Kind::status, 503}};
  for (const auto& [kind, status] : modes) {
    Simulator sim(private_topology(kind, status));
    const auto other_token = [&] {
      // Valid token, but scoped to a source this archive is not.
      const auto res = post(sim.base_url("gw") + "/token",
                            {{"subject", "alice"}, {"credential", "pw"}, {"source_id", "Q"}});
      return res.status == 200 ? JsonValue::parse(res.body).at("token").get<std::string>()
                               : std::string("none");
    }();
    const auto base = sim.archive("P").base_url();
    for (const auto& path : {"/timemap/cdxj/", "/timemap/link/", "/timemap/json/",
                             "/20150601120000/"}) {
      for (const auto& auth : {std::string(), std::string("Bearer junk"),
                               std::string("Bearer ") + other_token, std::string("Basic x")}) {
        http::Headers headers;
        if (!auth.empty()) headers.set("Authorization", auth);
        const auto res = get(base + path + kUriR, headers);
        EXPECT_NE(res.status, 200) << path << " " << status;
        EXPECT_EQ(res.body.find("2015"), std::string::npos) << path;
      }
    }
  }
}

TEST(PrivateArchive, TimeoutModeLeaksNothing) {
  Simulator sim(private_topology(Failure::Kind::timeout));
  const auto res = get(sim.archive("P").timemap_endpoint() + kUriR, {}, 200ms);
  EXPECT_EQ(res.failure, FetchResponse::Failure::timeout);
  EXPECT_TRUE(res.body.empty());
}

// --- topologies --------------------------------------------------------------

namespace hier = testing::hierarchy;

std::vector<std::string> names_by_key(const TimeMap& tm) {
  std::vector<std::string> out;
  for (const auto& r : tm.mementos) {
    for (const auto& name : hier::kGlobalOrder) {
      if (hier::datetime_of(name) == r.datetime) out.push_back(name);
    }
  }
  return out;
}

TEST(Topology, HierarchyFileStartsThirteenMementities) {
  auto sim = Simulator::load(std::string(MMA_TOPOLOGY_DIR) + "/hierarchy.json");
  EXPECT_EQ(sim->mementity_count(), 13u);
  const auto fetch = [&](const std::string& id) {
    const auto res = get(sim->base_url(id) + "/timemap/cdxj/" + hier::kUriR);
    EXPECT_EQ(res.status, 200) << id;
    return parse_cdxj(res.body).timemap;
  };
  EXPECT_EQ(names_by_key(fetch("MMA_alpha")), hier::kExpectedAlpha);
  EXPECT_EQ(names_by_key(fetch("MMA_beta")), hier::kExpectedBeta);
  EXPECT_EQ(names_by_key(fetch("MMA_gamma")), hier::kExpectedGamma);
  // A1-A3 via MA1 twice, A5 via MA2 and gamma, A7/A8 via beta directly and
  // through gamma.
  for (int a = 1; a <= 8; ++a) {
    EXPECT_EQ(sim->archive("A" + std::to_string(a)).request_log().size(),
              a == 4 || a == 6 ? 1u : 2u);
  }
}

TEST(Topology, EmptyTopologyHasNoListeners) {
  Simulator sim(JsonValue::object());
  EXPECT_EQ(sim.mementity_count(), 0u);
}

TEST(Topology, DuplicateIdIsAnError) {
  const auto doc = JsonValue::parse(R"({"archives": [{"id": "A"}], "mmas": [{"id": "A"}]})");
  EXPECT_THROW(Simulator{doc}, ConfigError);
}

TEST(Topology, PortConflictIsAnError) {
  SimArchive holder(spec("H", {}), "127.0.0.1");
  JsonValue doc = {{"archives", {{{"id", "A"}, {"port", std::stoi(holder.base_url().substr(17))}}}}};
  EXPECT_THROW(Simulator{doc}, ConfigError);
}

TEST(Topology, UnknownSourceIsAnError) {
  const auto doc = JsonValue::parse(R"({"mmas": [{"id": "M", "sources": ["nope"]}]})");
  EXPECT_THROW(Simulator{doc}, ConfigError);
}

TEST(Topology, CyclicPairStartsAndRefuses) {
  const auto doc = JsonValue::parse(R"({
    "archives": [{"id": "A", "holdings": {"http://example.com/": ["20010101000000"]}}],
    "mmas": [{"id": "M1", "sources": ["A", "M2"]}, {"id": "M2", "sources": ["M1"]}]
  })");
  Simulator sim(doc);
  EXPECT_EQ(get(sim.base_url("M1") + "/timemap/cdxj/" + kUriR).status, 508);
}

TEST(Topology, ControlEndpoints) {
  Simulator sim(JsonValue::parse(R"({"archives": [{"id": "A"}]})"));
  const auto control = sim.start_control();
  get(sim.archive("A").timemap_endpoint() + kUriR, {{"Authorization", "Bearer secret"}});
  const auto log = get(control + "/_log/A");
  ASSERT_EQ(log.status, 200);
  const auto entries = JsonValue::parse(log.body);
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].at("method"), "GET");
  EXPECT_EQ(log.body.find("secret"), std::string::npos);
  EXPECT_EQ(get(control + "/_log/nope").status, 404);
  EXPECT_EQ(JsonValue::parse(get(control + "/_topology").body).at("A").at("kind"), "archive");
  FetchRequest reset;
  reset.method = "POST";
  reset.url = control + "/_reset";
  EXPECT_EQ(default_source_client()->fetch(reset).status, 204);
  EXPECT_TRUE(sim.archive("A").request_log().empty());
}

}  // namespace
}  // namespace mma::sim
