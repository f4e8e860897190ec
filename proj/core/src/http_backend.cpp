#include <algorithm>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "malens/error.hpp"
#include "malens/log.hpp"
#include "malens/providers.hpp"

namespace malens {

using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(Errc::ConfigError, "malformed provider URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::optional<Errc> error_code_from_name(const std::string& name) {
  for (auto code : {Errc::UnsupportedLanguagePair, Errc::UnsupportedLanguage, Errc::EmptyInput,
                    Errc::InvalidArgument}) {
    if (to_string(code) == name) return code;
  }
  return std::nullopt;
}

const char* env_prefix(Capability capability) {
  switch (capability) {
    case Capability::LangId: return "MALENS_LANGID";
    case Capability::Translate: return "MALENS_TRANSLATE";
    case Capability::WordAlign: return "MALENS_ALIGN";
    case Capability::Phonetize: return "MALENS_G2P";
  }
  return "MALENS";
}

}  // namespace

struct HttpBackend::Impl {
  std::map<Capability, HttpEndpoint> endpoints;
  RetryPolicy retry;
  std::counting_semaphore<1024> inflight;

  Impl(std::map<Capability, HttpEndpoint> e, RetryPolicy r, std::size_t max_inflight)
      : endpoints(std::move(e)),
        retry(r),
        inflight(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(max_inflight, 1, 1024))) {}
};

HttpBackend::HttpBackend(std::map<Capability, HttpEndpoint> endpoints, RetryPolicy retry,
                         std::size_t max_inflight)
    : impl_(std::make_unique<Impl>(std::move(endpoints), retry, max_inflight)) {}

HttpBackend::~HttpBackend() = default;

std::map<Capability, HttpEndpoint> HttpBackend::endpoints_from_environment(
    std::map<Capability, HttpEndpoint> endpoints) {
  for (auto c : {Capability::LangId, Capability::Translate, Capability::WordAlign,
                 Capability::Phonetize}) {
    const std::string prefix = env_prefix(c);
    if (const char* url = std::getenv((prefix + "_URL").c_str())) endpoints[c].url = url;
    if (const char* key = std::getenv((prefix + "_KEY").c_str())) endpoints[c].api_key = key;
  }
  for (auto it = endpoints.begin(); it != endpoints.end();) {
    it = it->second.url.empty() ? endpoints.erase(it) : std::next(it);
  }
  return endpoints;
}

json HttpBackend::call(const ProviderRequest& request) {
  request.check();
  const auto it = impl_->endpoints.find(request.capability);
  if (it == impl_->endpoints.end()) {
    fail(Errc::ProviderUnavailable,
         "no HTTP endpoint for " + std::string(to_string(request.capability)));
  }
  const ParsedUrl url = split_url(it->second.url);
  httplib::Headers headers;
  if (!it->second.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + it->second.api_key);
  }
  const std::string body = request.canonical().dump();

  std::string last_error;
  auto backoff = impl_->retry.initial_backoff;
  const int attempts = std::max(1, impl_->retry.attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    {
      impl_->inflight.acquire();
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{impl_->inflight};

      httplib::Client client(url.origin);
      client.set_connection_timeout(std::chrono::seconds(10));
      client.set_read_timeout(std::chrono::seconds(60));
      const auto res = client.Post(url.path, headers, body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
      } else if (res->status >= 500 || res->status == 429) {
        last_error = "HTTP " + std::to_string(res->status);
      } else {
        json reply;
        try {
          reply = json::parse(res->body);
        } catch (const json::exception&) {
          fail(Errc::ProviderUnavailable, it->second.url + " returned a non-JSON body");
        }
        if (reply.contains("error")) {
          const auto& err = reply["error"];
          const std::string code = err.value("code", "");
          const std::string message = err.value("message", code);
          fail(error_code_from_name(code).value_or(Errc::ProviderUnavailable), message);
        }
        if (res->status != 200 || !reply.contains("result")) {
          fail(Errc::ProviderUnavailable,
               it->second.url + " replied HTTP " + std::to_string(res->status));
        }
        return reply["result"];
      }
    }
    if (attempt < attempts) {
      log::warn(it->second.url + ": " + last_error + "; retrying in " +
                std::to_string(backoff.count()) + " ms");
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<std::int64_t>(static_cast<double>(backoff.count()) * impl_->retry.multiplier));
    }
  }
  fail(Errc::ProviderUnavailable, it->second.url + " failed after " + std::to_string(attempts) +
                                      " attempts: " + last_error);
}

}  // namespace malens
