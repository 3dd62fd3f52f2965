#include "fluoroforge/llm_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include <nlohmann/json.hpp>

#include "fluoroforge/error.hpp"
#include "fluoroforge/log.hpp"
#include "httplib.h"

namespace fluoroforge {

namespace {

std::string env(const char* name) {
    const char* v = std::getenv(name);
    return v ? v : "";
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n\"");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n\"");
    return s.substr(b, e - b + 1);
}

}  // namespace

LlmConfig LlmConfig::from_env() {
    LlmConfig c;
    c.url = env("FLUOROFORGE_LLM_URL");
    c.key = env("FLUOROFORGE_LLM_KEY");
    c.offline = env("FLUOROFORGE_OFFLINE") == "1";
    return c;
}

HttpLlmClient::HttpLlmClient(LlmConfig config)
    : config_(std::move(config)), slots_(std::clamp(config_.max_in_flight, 1, 256)) {
    const std::string scheme = "http://";
    if (config_.url.rfind(scheme, 0) != 0) throw ConfigError("LLM endpoint must be an http:// URL: " + config_.url);
    const auto slash = config_.url.find('/', scheme.size());
    host_ = config_.url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : config_.url.substr(slash);
}

std::vector<std::string> HttpLlmClient::request(const std::string& description, int count) {
    slots_.acquire();
    struct Release {
        std::counting_semaphore<256>& s;
        ~Release() { s.release(); }
    } release{slots_};

    httplib::Client client(host_);
    const auto secs = std::chrono::duration<double>(config_.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
    httplib::Headers headers;
    if (!config_.key.empty()) headers.emplace("Authorization", "Bearer " + config_.key);
    const nlohmann::json body{{"description", description}, {"count", count}};
    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw Error("LLM request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error("LLM endpoint returned HTTP " + std::to_string(res->status));
    return nlohmann::json::parse(res->body).at("variants").get<std::vector<std::string>>();
}

std::vector<std::string> clean_variants(const std::vector<std::string>& raw, int count) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& r : raw) {
        if (int(out.size()) >= count) break;
        auto t = trim(r);
        if (t.empty() || !seen.insert(t).second) continue;
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<std::string> fetch_llm_variants(const std::string& canonical, const LlmConfig& config, int count,
                                            LlmClient& client) {
    if (!config.enabled() || count <= 0) return {};
    try {
        return clean_variants(client.request(canonical, count), count);
    } catch (const std::exception& e) {
        log_warning("paraphrase endpoint unavailable for '" + canonical + "', using templates only: " + e.what());
        return {};
    }
}

}  // namespace fluoroforge
