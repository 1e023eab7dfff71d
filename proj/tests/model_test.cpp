#include <gtest/gtest.h>

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mma/datetime.hpp"
#include "mma/errors.hpp"
#include "mma/model.hpp"
#include "mma/uri.hpp"

namespace mma {
namespace {

// Expected values produced by tests/oracles/uri_canonical_oracle.py.
const std::vector<std::pair<std::string, std::string>> kCanonicalCorpus = {
    {"HTTP://Facebook.COM:80", "http://facebook.com/"},
    {"http://facebook.com/", "http://facebook.com/"},
    {"http://www.facebook.com/a?b=1", "http://www.facebook.com/a?b=1"},
    {"https://Example.org:443/", "https://example.org/"},
    {"https://example.org:8443/x", "https://example.org:8443/x"},
    {"http://EXAMPLE.org:8080", "http://example.org:8080/"},
    {"http://example.org/Path/With/Case", "http://example.org/Path/With/Case"},
    {"http://example.org/a/b/", "http://example.org/a/b/"},
    {"http://example.org/a/b", "http://example.org/a/b"},
    {"HTTPS://WWW.Example.ORG/Index.HTML", "https://www.example.org/Index.HTML"},
    {"http://example.org?q=1", "http://example.org/?q=1"},
    {"http://example.org/?q=1&r=2", "http://example.org/?q=1&r=2"},
    {"http://example.org/#frag", "http://example.org/#frag"},
    {"http://example.org/p#Frag", "http://example.org/p#Frag"},
    {"http://example.org:80/p?x=Y#Z", "http://example.org/p?x=Y#Z"},
    {"https://example.org:80/", "https://example.org:80/"},
    {"http://example.org:443/", "http://example.org:443/"},
    {"http://user@Example.org/", "http://user@example.org/"},
    {"http://user:pw@Example.org:80/x", "http://user:pw@example.org/x"},
    {"http://127.0.0.1:80/", "http://127.0.0.1/"},
    {"http://127.0.0.1:1208/timemap/cdxj/http://facebook.com", "http://127.0.0.1:1208/timemap/cdxj/http://facebook.com"},
    {"http://localhost:1208/timegate/http://facebook.com", "http://localhost:1208/timegate/http://facebook.com"},
    {"http://web.archive.org/web/19981212013921/http://facebook.com/", "http://web.archive.org/web/19981212013921/http://facebook.com/"},
    {"http://archive.is/19981212013921/http://facebook.com/", "http://archive.is/19981212013921/http://facebook.com/"},
    {"HTTP://Web.Archive.Org/web/20170331013527/https://www.facebook.com/", "http://web.archive.org/web/20170331013527/https://www.facebook.com/"},
    {"http://alicesembarassingphotos.net/vacation.html", "http://alicesembarassingphotos.net/vacation.html"},
    {"http://AlicesEmbarassingPhotos.net/vacation.html", "http://alicesembarassingphotos.net/vacation.html"},
    {"http://carolsembarassingphotos.net", "http://carolsembarassingphotos.net/"},
    {"https://www.themaneater.com", "https://www.themaneater.com/"},
    {"http://www.themaneater.com/", "http://www.themaneater.com/"},
    {"http://myLocalWebArchive/myCollection/timemap/*/", "http://mylocalwebarchive/myCollection/timemap/*/"},
    {"http://example.org/%7Euser/", "http://example.org/%7Euser/"},
    {"http://example.org/a%2Fb", "http://example.org/a%2Fb"},
    {"http://example.org/~user", "http://example.org/~user"},
    {"http://EXAMPLE.org/a?B=C", "http://example.org/a?B=C"},
    {"http://sub.domain.example.co.uk:80/deep/path/file.php?id=7", "http://sub.domain.example.co.uk/deep/path/file.php?id=7"},
    {"https://sub.domain.example.co.uk:443", "https://sub.domain.example.co.uk/"},
    {"https://sub.domain.example.co.uk:444", "https://sub.domain.example.co.uk:444/"},
    {"http://example.org:0080/", "http://example.org/"},
    {"http://xn--bcher-kva.example/", "http://xn--bcher-kva.example/"},
    {"http://example.org/path;params", "http://example.org/path;params"},
    {"http://example.org/a/./b/../c", "http://example.org/a/./b/../c"},
    {"http://example.org//double//slash", "http://example.org//double//slash"},
    {"http://example.org/trailing/?", "http://example.org/trailing/?"},
    {"http://a.b-c.d_e.example/", "http://a.b-c.d_e.example/"},
    {"http://EXAMPLE.ORG:65535/max", "http://example.org:65535/max"},
    {"https://example.org/search?q=web+archive&lang=en", "https://example.org/search?q=web+archive&lang=en"},
    {"http://example.org/index.html?", "http://example.org/index.html?"},
    {"http://example.org:8000/?a=1#b", "http://example.org:8000/?a=1#b"},
    {"https://WWW.WEBARCHIVE.ORG.UK/wayback/archive/*/http://www.example.org", "https://www.webarchive.org.uk/wayback/archive/*/http://www.example.org"},
};

TEST(Canonicalize, MatchesIndependentOracleCorpus) {
  ASSERT_EQ(kCanonicalCorpus.size(), 50u);
  for (const auto& [raw, expected] : kCanonicalCorpus) {
    EXPECT_EQ(canonicalize(raw).value(), expected) << raw;
  }
}

TEST(Canonicalize, LowercasesAndDropsDefaultPort) {
  EXPECT_EQ(canonicalize("HTTP://Facebook.COM:80").value(), "http://facebook.com/");
  EXPECT_EQ(canonicalize("http://facebook.com/").value(), "http://facebook.com/");
  EXPECT_EQ(canonicalize("http://www.facebook.com/a?b=1").value(),
            "http://www.facebook.com/a?b=1");
}

TEST(Canonicalize, IsIdempotentOverCorpus) {
  for (const auto& [raw, expected] : kCanonicalCorpus) {
    const auto once = canonicalize(raw);
    EXPECT_EQ(canonicalize(once.value()).value(), once.value());
  }
}

TEST(Canonicalize, PreservesEqualityClasses) {
  for (const auto& [a, ca] : kCanonicalCorpus) {
    for (const auto& [b, cb] : kCanonicalCorpus) {
      if (canonical_form(a) == canonical_form(b)) {
        EXPECT_EQ(canonical_form(a), canonical_form(canonical_form(b)));
      }
    }
  }
}

TEST(Canonicalize, KeepsWwwDistinct) {
  EXPECT_NE(canonicalize("http://facebook.com").canonical(),
            canonicalize("http://www.facebook.com").canonical());
}

TEST(Canonicalize, RejectsMalformedWithOffset) {
  struct Case {
    const char* raw;
    std::size_t offset;
  };
  const Case cases[] = {
      {"ftp://example.org/", 0},
      {"http//example.org/", 4},
      {"http://exa mple.org/", 10},
      {"http://:80/", 7},
      {"http://example.org:8a/", 20},
      {"http://example.org:99999/", 19},
      {"example.org", 11},
      {"http://exa^mple.org/", 10},
  };
  for (const auto& c : cases) {
    try {
      canonicalize(c.raw);
      ADD_FAILURE() << "accepted " << c.raw;
    } catch (const UriError& e) {
      EXPECT_EQ(e.offset(), c.offset) << c.raw << ": " << e.what();
    }
  }
  EXPECT_THROW(canonicalize(""), UriError);
}

TEST(OriginalUri, KeepsRawValueAndCanonicalForm) {
  const OriginalUri uri("HTTP://Facebook.com");
  EXPECT_EQ(uri.value(), "HTTP://Facebook.com");
  EXPECT_EQ(uri.canonical(), "http://facebook.com/");
  EXPECT_EQ(uri.host(), "facebook.com");
  EXPECT_TRUE(uri.same_resource(OriginalUri("http://facebook.com:80/")));
}

// Zeller's congruence; 0 = Saturday.
int zeller(int y, int m, int d) {
  if (m < 3) {
    m += 12;
    y -= 1;
  }
  const int k = y % 100;
  const int j = y / 100;
  return (d + 13 * (m + 1) / 5 + k + k / 4 + j / 4 + 5 * j) % 7;
}

const char* zeller_name(int h) {
  static const char* names[] = {"Sat", "Sun", "Mon", "Tue", "Wed", "Thu", "Fri"};
  return names[h];
}

TEST(MementoDatetime, ConvertsPaperFixtureKeys) {
  EXPECT_EQ(key_to_rfc1123("19981212013921"), "Sat, 12 Dec 1998 01:39:21 GMT");
  EXPECT_EQ(key_to_rfc1123("20170331013527"), "Fri, 31 Mar 2017 01:35:27 GMT");
  EXPECT_EQ(key_to_rfc1123("20000101000000"), "Sat, 01 Jan 2000 00:00:00 GMT");
  EXPECT_STREQ(zeller_name(zeller(2000, 1, 1)), "Sat");
}

TEST(MementoDatetime, RejectsInvalidInput) {
  EXPECT_THROW(MementoDatetime::from_key("19981312013921"), ValidationError);
  EXPECT_THROW(MementoDatetime::from_key("19990229000000"), ValidationError);
  EXPECT_THROW(MementoDatetime::from_key("1998121201392x"), ValidationError);
  EXPECT_THROW(MementoDatetime::from_key("199812120139"), ValidationError);
  EXPECT_THROW(MementoDatetime::from_key("19981212013921.5"), ValidationError);
  EXPECT_THROW(MementoDatetime::from_key("19981212246000"), ValidationError);
  EXPECT_THROW(MementoDatetime::from_rfc1123("Sat, 12 Dec 1998 01:39:21.250 GMT"),
               ValidationError);
  EXPECT_THROW(MementoDatetime::from_rfc1123("Sun, 12 Dec 1998 01:39:21 GMT"),
               ValidationError);
  EXPECT_THROW(MementoDatetime::from_rfc1123("Sat, 12 Foo 1998 01:39:21 GMT"),
               ValidationError);
  EXPECT_NO_THROW(MementoDatetime::from_key("20000229000000"));
}

TEST(MementoDatetime, RoundTripsRandomInstantsAgainstWeekdayOracle) {
  std::mt19937_64 rng(1996);
  std::uniform_int_distribution<int> year(1996, 2030), month(1, 12), hour(0, 23), minsec(0, 59);
  for (int i = 0; i < 5000; ++i) {
    const int y = year(rng), m = month(rng);
    static const int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    const int max_day = kDays[m - 1] + (m == 2 && leap ? 1 : 0);
    const int d = std::uniform_int_distribution<int>(1, max_day)(rng);
    char key[16];
    std::snprintf(key, sizeof(key), "%04d%02d%02d%02d%02d%02d", y, m, d, hour(rng),
                  minsec(rng), minsec(rng));
    const auto dt = MementoDatetime::from_key(key);
    const auto rfc = dt.to_rfc1123();
    EXPECT_EQ(rfc.substr(0, 3), zeller_name(zeller(y, m, d))) << key;
    EXPECT_EQ(dt.to_key(), key);
    EXPECT_EQ(MementoDatetime::from_rfc1123(rfc), dt);
    EXPECT_EQ(MementoDatetime::from_rfc1123(rfc).to_key(), key);
  }
}

TEST(MementoDatetime, OrderAgreesAcrossRepresentations) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long long> secs(820454400LL, 1924991999LL);  // 1996..2030
  for (int i = 0; i < 2000; ++i) {
    const MementoDatetime a(MementoDatetime::Seconds(std::chrono::seconds(secs(rng))));
    const MementoDatetime b(MementoDatetime::Seconds(std::chrono::seconds(secs(rng))));
    EXPECT_EQ(a < b, a.to_key() < b.to_key());
    EXPECT_EQ(a < b, MementoDatetime::from_rfc1123(a.to_rfc1123()) <
                         MementoDatetime::from_rfc1123(b.to_rfc1123()));
  }
}

MementoRecord make_record(const std::string& uri, const std::string& key) {
  MementoRecord r;
  r.uri_m = uri;
  r.datetime = MementoDatetime::from_key(key);
  return r;
}

TEST(TimeMap, RelMarkersSatisfyExtremesRule) {
  std::mt19937 rng(3);
  for (int n = 0; n < 40; ++n) {
    TimeMap tm;
    for (int i = 0; i < n; ++i) {
      char key[16];
      std::snprintf(key, sizeof(key), "2001%02d0%d000000", 1 + static_cast<int>(rng() % 12),
                    1 + static_cast<int>(rng() % 9));
      tm.mementos.push_back(make_record("http://a.example/" + std::to_string(i), key));
    }
    normalize(tm);
    int firsts = 0, lasts = 0;
    for (std::size_t i = 0; i < tm.mementos.size(); ++i) {
      const auto& rel = tm.mementos[i].rel;
      const bool first = rel.find("first") != std::string::npos;
      const bool last = rel.find("last") != std::string::npos;
      firsts += first;
      lasts += last;
      if (first) EXPECT_EQ(i, 0u);
      if (last) EXPECT_EQ(i + 1, tm.mementos.size());
      if (i > 0) EXPECT_LE(tm.mementos[i - 1].datetime, tm.mementos[i].datetime);
    }
    EXPECT_EQ(firsts, n > 0 ? 1 : 0);
    EXPECT_EQ(lasts, n > 0 ? 1 : 0);
    if (n == 1) EXPECT_EQ(tm.mementos[0].rel, kRelFirstLast);
  }
}

TEST(MementoRecord, ValidationRejectsBadDamageAndRelativeUri) {
  auto r = make_record("http://a.example/1", "20010101000000");
  EXPECT_NO_THROW(validate_record(r));
  r.damage = 1.5;
  EXPECT_THROW(validate_record(r), ValidationError);
  r.damage = 0.0;
  r.uri_m = "/relative";
  EXPECT_THROW(validate_record(r), ValidationError);
  r.uri_m = "";
  EXPECT_THROW(validate_record(r), ValidationError);
}

TEST(SourceDescriptor, BuildsTimeMapUrl) {
  SourceDescriptor s{"A", SourceKind::archive, Visibility::public_,
                     "http://myLocalWebArchive/myCollection/timemap/*/", std::nullopt};
  EXPECT_EQ(s.timemap_url("http://www.themaneater.com"),
            "http://myLocalWebArchive/myCollection/timemap/*/http://www.themaneater.com");
  s.timemap_endpoint = "http://h/tm/{uri_r}?x=1";
  EXPECT_EQ(s.timemap_url("http://a/"), "http://h/tm/http://a/?x=1");
}

}  // namespace
}  // namespace mma
