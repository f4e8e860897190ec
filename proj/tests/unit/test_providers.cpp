#include <doctest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "malens/io.hpp"
#include "malens/providers.hpp"
#include "support.hpp"

using namespace malens;
using nlohmann::json;
using malens::testing::error_of;
using malens::testing::LogCapture;
using malens::testing::TempDir;

namespace {

/// Answers every request from a fixed function and counts the calls.
class CountingBackend final : public ProviderBackend {
 public:
  std::string name() const override { return "counting"; }
  json call(const ProviderRequest& request) override {
    ++calls;
    switch (request.capability) {
      case Capability::LangId: return request.texts[0] == "谄" ? "zh" : "en";
      case Capability::Translate: return "he died in osaka on tuesday";
      case Capability::WordAlign: return json::array({json::array({0, 0}), json::array({1, 1})});
      case Capability::Phonetize: return json::array({"v", "i", "v", "e"});
    }
    return nullptr;
  }
  std::atomic<int> calls{0};
};

Providers routed(std::shared_ptr<ProviderBackend> backend) {
  Providers p;
  p.route_all(backend);
  return p;
}

}  // namespace

TEST_CASE("canonical requests and digests") {
  const auto a = ProviderRequest::lang_id("  Tuesday ");
  const auto b = ProviderRequest::lang_id("Tuesday");
  CHECK(a.canonical() == b.canonical());
  CHECK(RecordStore::digest("p", a) == RecordStore::digest("p", b));
  CHECK(RecordStore::digest("p", a) != RecordStore::digest("q", a));
  CHECK(RecordStore::digest("p", a).size() == 64);
  const auto t = ProviderRequest::translate("il est mort", "fr", "en");
  CHECK(ProviderRequest::from_canonical(t.canonical()).canonical() == t.canonical());
  CHECK(RecordStore::digest("p", t) != RecordStore::digest("p", ProviderRequest::translate("il est mort", "fr", "de")));
  ProviderRequest broken;
  broken.capability = Capability::Translate;
  broken.texts = {"x"};
  CHECK(error_of([&] { broken.check(); }) == Errc::InvalidArgument);
  CHECK(parse_capability("g2p") == Capability::Phonetize);
}

TEST_CASE("record store layout") {
  TempDir dir;
  const RecordStore store(dir.path());
  const auto r = ProviderRequest::lang_id("Tuesday");
  CHECK_FALSE(store.get("p", r));
  store.put("p", r, "en");
  const std::string digest = RecordStore::digest("p", r);
  CHECK(store.record_path("p", r) == dir.path() / digest.substr(0, 2) / (digest + ".json"));
  CHECK(std::filesystem::exists(store.record_path("p", r)));
  CHECK(store.get("p", r) == json("en"));
  CHECK_FALSE(store.get("other", r));
}

TEST_CASE("fixture backend replays frozen responses") {
  TempDir dir;
  FixtureBackend fixtures(dir.path());
  fixtures.freeze(ProviderRequest::lang_id("Tuesday"), "en");
  fixtures.freeze(ProviderRequest::lang_id("谄"), "zh");
  const Providers p = routed(std::make_shared<FixtureBackend>(dir.path()));
  CHECK(p.identify_language("▁Tuesday") == "en");
  CHECK(p.identify_language("谄") == "zh");
  try {
    p.identify_language("Osaka");
    FAIL("expected ProviderUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ProviderUnavailable);
    CHECK(std::string(e.what()).find("Osaka") != std::string::npos);
  }
}

TEST_CASE("provider contracts") {
  auto backend = std::make_shared<CountingBackend>();
  const Providers p = routed(backend);
  CHECK(error_of([&] { p.identify_language(""); }) == Errc::EmptyInput);
  CHECK(error_of([&] { p.identify_language("▁"); }) == Errc::EmptyInput);
  CHECK(error_of([&] { p.translate("il est", "fr", "fr"); }) == Errc::InvalidArgument);
  CHECK(error_of([&] { p.translate("il est", "fr", "xx"); }) == Errc::UnsupportedLanguagePair);
  CHECK(error_of([&] { p.align_words("il est", ""); }) == Errc::InvalidArgument);
  CHECK(p.phonetize("", "fr").empty());
  CHECK(backend->calls == 0);
  CHECK(p.translate("il est mort à osaka mardi", "fr", "en") == "he died in osaka on tuesday");
  CHECK(p.align_words("a b", "c d") == std::vector<AlignmentPair>{{0, 0}, {1, 1}});
  CHECK(error_of([&] { p.align_words("a", "c d"); }) == Errc::ProviderUnavailable);
  Providers none;
  CHECK(error_of([&] { none.identify_language("x"); }) == Errc::ProviderUnavailable);
}

TEST_CASE("cache serves repeats and survives restarts") {
  TempDir dir;
  auto backend = std::make_shared<CountingBackend>();
  {
    auto cached = std::make_shared<CachedBackend>(backend, dir.path());
    const Providers p = routed(cached);
    CHECK(p.identify_language("Tuesday") == "en");
    CHECK(p.identify_language("Tuesday") == "en");
    CHECK(backend->calls == 1);
    CHECK(cached->backend_calls() == 1);
  }
  {
    const Providers p = routed(std::make_shared<CachedBackend>(backend, dir.path()));
    CHECK(p.identify_language("Tuesday") == "en");
    CHECK(backend->calls == 1);
  }
  const RecordStore store(dir.path());
  std::filesystem::remove(store.record_path("counting", ProviderRequest::lang_id("Tuesday")));
  const Providers p = routed(std::make_shared<CachedBackend>(backend, dir.path()));
  CHECK(p.identify_language("Tuesday") == "en");
  CHECK(backend->calls == 2);
}

TEST_CASE("cached and direct responses agree") {
  TempDir dir;
  auto backend = std::make_shared<CountingBackend>();
  const Providers direct = routed(backend);
  const Providers cached = routed(std::make_shared<CachedBackend>(backend, dir.path()));
  for (int round = 0; round < 2; ++round) {
    CHECK(cached.identify_language("谄") == direct.identify_language("谄"));
    CHECK(cached.translate("il est", "fr", "en") == direct.translate("il est", "fr", "en"));
    CHECK(cached.align_words("a b", "c d") == direct.align_words("a b", "c d"));
    CHECK(cached.phonetize("vivez", "fr") == direct.phonetize("vivez", "fr"));
  }
}

TEST_CASE("corrupt cache entry is recomputed and overwritten") {
  TempDir dir;
  auto backend = std::make_shared<CountingBackend>();
  const Providers p = routed(std::make_shared<CachedBackend>(backend, dir.path()));
  CHECK(p.identify_language("Tuesday") == "en");
  const auto path = RecordStore(dir.path()).record_path("counting", ProviderRequest::lang_id("Tuesday"));
  std::string bytes = io::read_text_file(path);
  const auto pos = bytes.find("\"en\"");
  REQUIRE(pos != std::string::npos);
  bytes[pos + 1] = 'x';
  io::write_file_atomic(path, bytes);

  LogCapture logs;
  CHECK(p.identify_language("Tuesday") == "en");
  CHECK(backend->calls == 2);
  CHECK(logs.contains("CacheCorrupt"));
  CHECK(io::read_text_file(path).find("\"en\"") != std::string::npos);
  CHECK(p.identify_language("Tuesday") == "en");
  CHECK(backend->calls == 2);
}

TEST_CASE("concurrent identical requests reach the backend once") {
  TempDir dir;
  auto backend = std::make_shared<CountingBackend>();
  const Providers p = routed(std::make_shared<CachedBackend>(backend, dir.path()));
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { p.identify_language("Tuesday"); });
  for (auto& t : threads) t.join();
  CHECK(backend->calls == 1);
}

TEST_CASE("table g2p") {
  const Providers p = [] {
    Providers p;
    p.route(Capability::Phonetize, std::make_shared<TableG2PBackend>(MALENS_G2P_DIR));
    return p;
  }();
  CHECK(p.phonetize("vivez", "fr") == std::vector<std::string>{"v", "i", "v", "e"});
  CHECK(p.phonetize("", "fr").empty());
  CHECK(error_of([&] { p.phonetize("vivez", "xx"); }) == Errc::UnsupportedLanguage);
  CHECK(error_of([&] { p.identify_language("vivez"); }) == Errc::ProviderUnavailable);
  TableG2PBackend table(MALENS_G2P_DIR);
  CHECK(table.supports("fr"));
  CHECK(table.supports("en"));
  CHECK_FALSE(table.supports("zh"));
  CHECK(p.phonetize("Vivez", "fr") == p.phonetize("vivez", "fr"));
}

TEST_CASE("command bridge") {
  RetryPolicy retry;
  retry.attempts = 2;
  retry.initial_backoff = std::chrono::milliseconds(1);
  auto bridge = std::make_shared<CommandBackend>("python3", std::vector<std::string>{MALENS_ECHO_BRIDGE}, retry);
  const Providers p = routed(bridge);
  CHECK(p.identify_language("谄") == "zh");
  CHECK(p.identify_language("▁him") == "en");
  CHECK(p.translate("il est", "fr", "en") == "[en] il est");
  CHECK(p.align_words("a b c", "d e") == std::vector<AlignmentPair>{{0, 0}, {1, 1}});
  CHECK(p.phonetize("vivez", "fr") == std::vector<std::string>{"v", "i", "v", "e", "z"});
  CHECK(error_of([&] { p.phonetize("vivez", "xx"); }) == Errc::UnsupportedLanguage);
  {
    LogCapture logs;
    CHECK(error_of([&] { p.identify_language("crash"); }) == Errc::ProviderUnavailable);
    CHECK(logs.contains("restarting"));
  }
  CHECK(p.identify_language("him") == "en");

  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&, i] { ok += p.identify_language("w" + std::to_string(i)) == "en"; });
  }
  for (auto& t : threads) t.join();
  CHECK(ok == 4);

  auto missing = std::make_shared<CommandBackend>("/nonexistent/bridge", std::vector<std::string>{}, retry);
  CHECK(error_of([&] { routed(missing).identify_language("x"); }) == Errc::ProviderUnavailable);
}

TEST_CASE("http backend") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string authorization;
  server.Post("/langid", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 503;
      return;
    }
    authorization = req.get_header_value("Authorization");
    const json body = json::parse(req.body);
    const std::string text = body.at("texts").at(0);
    if (text == "bad") {
      res.set_content(R"({"error":{"code":"EmptyInput","message":"nothing to identify"}})",
                      "application/json");
      return;
    }
    res.set_content(json{{"result", text == "谄" ? "zh" : "en"}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RetryPolicy retry;
  retry.attempts = 3;
  retry.initial_backoff = std::chrono::milliseconds(1);
  std::map<Capability, HttpEndpoint> endpoints;
  endpoints[Capability::LangId] = {"http://127.0.0.1:" + std::to_string(port) + "/langid", "secret"};
  const Providers p = routed(std::make_shared<HttpBackend>(endpoints, retry));
  {
    LogCapture logs;
    CHECK(p.identify_language("谄") == "zh");
    CHECK(logs.contains("retrying"));
  }
  CHECK(hits == 2);
  CHECK(authorization == "Bearer secret");
  CHECK(error_of([&] { p.identify_language("bad"); }) == Errc::EmptyInput);
  CHECK(error_of([&] { p.translate("a", "fr", "en"); }) == Errc::ProviderUnavailable);
  server.stop();
  thread.join();

  LogCapture quiet;
  CHECK(error_of([&] { p.identify_language("him"); }) == Errc::ProviderUnavailable);
}

TEST_CASE("endpoints from the environment") {
  ::setenv("MALENS_TRANSLATE_URL", "http://example.invalid/t", 1);
  ::setenv("MALENS_TRANSLATE_KEY", "k", 1);
  const auto endpoints = HttpBackend::endpoints_from_environment(
      {{Capability::LangId, {"http://example.invalid/l", ""}}});
  ::unsetenv("MALENS_TRANSLATE_URL");
  ::unsetenv("MALENS_TRANSLATE_KEY");
  CHECK(endpoints.at(Capability::Translate).url == "http://example.invalid/t");
  CHECK(endpoints.at(Capability::Translate).api_key == "k");
  CHECK(endpoints.at(Capability::LangId).url == "http://example.invalid/l");
  CHECK_FALSE(endpoints.contains(Capability::Phonetize));
}
