#pragma once

#include "portfolio/market_data.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace portfolio {

/// Environment variable that overrides every configured cache directory.
inline constexpr const char* kCacheDirEnv = "PORTFOLIO_CACHE_DIR";

/// One ticker's download request.
///
/// The URL template must reference the ticker and both dates. Recognized
/// placeholders: {ticker} (URL-encoded), {start} / {end} as ISO dates, and
/// {start_epoch} / {end_epoch} as Unix seconds (end is exclusive: the day
/// after end_date). Either form satisfies the date requirement.
struct FetchSpec {
    std::string ticker;
    std::string start_date;
    std::string end_date;
    std::string endpoint_url_template;
    std::filesystem::path cache_dir;
};

/// Throws ConfigError when a FetchSpec invariant does not hold.
void validate(const FetchSpec& spec);

std::string expand_url(const FetchSpec& spec);

struct HttpResponse {
    int status = 0;
    std::string body;
};

using HttpGet = std::function<HttpResponse(const std::string& url)>;

struct FetchOptions {
    HttpGet http;                                   // empty: cpp-httplib client
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};  // doubled after every failure
    std::function<void(std::chrono::milliseconds)> sleep;  // empty: std::this_thread::sleep_for
};

/// Blocking GET over cpp-httplib (http and https).
HttpGet default_http_get();

/// Parses `{"timestamps": [...], "close": [...]}`, or the vendor chart shape
/// `{"chart": {"result": [{"timestamp": [...], "indicators": {"quote": [{"close": [...]}]}}]}}`,
/// into a one-column panel. Timestamps map to UTC dates; null closes are
/// dropped; for repeated dates the last value wins. Throws DataError on
/// malformed payloads or an empty series.
PricePanel parse_chart_payload(std::string_view json, const std::string& ticker);

/// The cache directory actually used: $PORTFOLIO_CACHE_DIR when set, else
/// the configured one.
std::filesystem::path effective_cache_dir(const std::filesystem::path& configured);

std::filesystem::path cache_file(const FetchSpec& spec);

/// Serves from cache when present; otherwise downloads (retrying with
/// exponential backoff), keeps rows within [start_date, end_date], and
/// writes the cache file via a temporary file and an atomic rename.
PricePanel fetch_prices(const FetchSpec& spec, const FetchOptions& options = {});

/// Inner join of single-ticker panels on their common dates.
PricePanel join_panels(const std::vector<PricePanel>& panels);

/// Fetches every spec and joins the results.
PricePanel assemble_universe(const std::vector<FetchSpec>& specs, const FetchOptions& options = {});

}  // namespace portfolio
