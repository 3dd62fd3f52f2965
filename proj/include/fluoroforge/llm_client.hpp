#pragma once

#include <memory>
#include <semaphore>
#include <string>
#include <vector>

namespace fluoroforge {

struct LlmConfig {
    std::string url;  // http://host[:port]/path
    std::string key;
    bool offline = false;
    int max_in_flight = 4;
    double timeout_s = 20.0;

    // FLUOROFORGE_LLM_URL, FLUOROFORGE_LLM_KEY, FLUOROFORGE_OFFLINE=1.
    static LlmConfig from_env();
    bool enabled() const { return !offline && !url.empty(); }
};

// Paraphrase endpoint. Implementations may throw on transport failure.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::vector<std::string> request(const std::string& description, int count) = 0;
};

// POST {"description", "count"} -> {"variants": [...]}, with at most
// max_in_flight concurrent requests across all callers of this client.
class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(LlmConfig config);
    std::vector<std::string> request(const std::string& description, int count) override;

private:
    LlmConfig config_;
    std::string host_;
    std::string path_;
    std::counting_semaphore<256> slots_;
};

// Trimmed, deduplicated, non-empty, at most `count`. Never throws: failures
// and disabled configs yield an empty list; the client is not touched when
// the config is disabled.
std::vector<std::string> fetch_llm_variants(const std::string& canonical, const LlmConfig& config, int count,
                                            LlmClient& client);

std::vector<std::string> clean_variants(const std::vector<std::string>& raw, int count);

}  // namespace fluoroforge
