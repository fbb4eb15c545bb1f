#include "portfolio/data_client.hpp"

#include "portfolio/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <unistd.h>

namespace portfolio {

namespace {

using nlohmann::json;

bool has_placeholder(const std::string& s, std::string_view p) { return s.find(p) != std::string::npos; }

std::string url_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
}

std::chrono::sys_days parse_day(const std::string& iso) {
    const int y = std::stoi(iso.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(iso.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(iso.substr(8, 2)));
    return std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

std::string format_day(std::chrono::sys_days day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string epoch_seconds(std::chrono::sys_days day) {
    return std::to_string(std::chrono::duration_cast<std::chrono::seconds>(day.time_since_epoch()).count());
}

std::string sanitize(std::string_view s) {
    std::string out;
    for (unsigned char c : s) out.push_back(std::isalnum(c) || c == '.' || c == '-' ? static_cast<char>(c) : '_');
    return out;
}

}  // namespace

void validate(const FetchSpec& spec) {
    if (spec.ticker.empty()) throw ConfigError("fetch: empty ticker");
    if (!is_iso_date(spec.start_date) || !is_iso_date(spec.end_date))
        throw ConfigError("fetch: start_date and end_date must be YYYY-MM-DD");
    if (!(spec.start_date < spec.end_date)) throw ConfigError("fetch: start_date must precede end_date");
    const auto& t = spec.endpoint_url_template;
    if (!has_placeholder(t, "{ticker}")) throw ConfigError("fetch: URL template lacks {ticker}");
    if (!has_placeholder(t, "{start}") && !has_placeholder(t, "{start_epoch}"))
        throw ConfigError("fetch: URL template lacks {start}");
    if (!has_placeholder(t, "{end}") && !has_placeholder(t, "{end_epoch}"))
        throw ConfigError("fetch: URL template lacks {end}");
}

std::string expand_url(const FetchSpec& spec) {
    validate(spec);
    std::string url = spec.endpoint_url_template;
    replace_all(url, "{ticker}", url_encode(spec.ticker));
    replace_all(url, "{start_epoch}", epoch_seconds(parse_day(spec.start_date)));
    replace_all(url, "{end_epoch}", epoch_seconds(parse_day(spec.end_date) + std::chrono::days{1}));
    replace_all(url, "{start}", spec.start_date);
    replace_all(url, "{end}", spec.end_date);
    return url;
}

HttpGet default_http_get() {
    return [](const std::string& url) -> HttpResponse {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw DataError("fetch: URL without scheme: " + url);
        const auto path_start = url.find('/', scheme_end + 3);
        const std::string base = url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
        httplib::Client client(base);
        client.set_follow_location(true);
        client.set_connection_timeout(10);
        client.set_read_timeout(30);
        client.set_default_headers({{"User-Agent", "Mozilla/5.0 (portfolio-toolkit)"}});
        auto res = client.Get(path);
        if (!res) return {0, "transport error: " + httplib::to_string(res.error())};
        return {res->status, res->body};
    };
}

PricePanel parse_chart_payload(std::string_view text, const std::string& ticker) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError("fetch " + ticker + ": malformed payload: " + e.what());
    }

    const json* stamps = nullptr;
    const json* closes = nullptr;
    if (doc.is_object() && doc.contains("timestamps") && doc.contains("close")) {
        stamps = &doc["timestamps"];
        closes = &doc["close"];
    } else {
        try {
            const auto& result = doc.at("chart").at("result").at(0);
            stamps = &result.at("timestamp");
            closes = &result.at("indicators").at("quote").at(0).at("close");
        } catch (const json::exception&) {
            throw DataError("fetch " + ticker + ": malformed payload: no timestamps/close arrays");
        }
    }
    if (!stamps->is_array() || !closes->is_array() || stamps->size() != closes->size())
        throw DataError("fetch " + ticker + ": malformed payload: timestamps and close differ in length");

    std::map<std::string, double> by_date;
    for (std::size_t k = 0; k < stamps->size(); ++k) {
        const auto& ts = (*stamps)[k];
        const auto& close = (*closes)[k];
        if (!ts.is_number_integer()) throw DataError("fetch " + ticker + ": malformed payload: bad timestamp");
        if (close.is_null()) continue;
        if (!close.is_number()) throw DataError("fetch " + ticker + ": malformed payload: bad close value");
        const std::chrono::sys_seconds t{std::chrono::seconds{ts.get<std::int64_t>()}};
        by_date[format_day(std::chrono::floor<std::chrono::days>(t))] = close.get<double>();
    }
    if (by_date.empty()) throw DataError("fetch " + ticker + ": empty series");

    std::vector<std::string> dates;
    std::vector<RawPriceRow> rows;
    for (const auto& [d, p] : by_date) {
        dates.push_back(d);
        rows.push_back({p});
    }
    return build_price_panel({ticker}, std::move(dates), rows);
}

std::filesystem::path effective_cache_dir(const std::filesystem::path& configured) {
    if (const char* env = std::getenv(kCacheDirEnv); env != nullptr && *env != '\0') return env;
    return configured;
}

std::filesystem::path cache_file(const FetchSpec& spec) {
    return effective_cache_dir(spec.cache_dir) /
           (sanitize(spec.ticker) + "_" + spec.start_date + "_" + spec.end_date + ".csv");
}

PricePanel fetch_prices(const FetchSpec& spec, const FetchOptions& options) {
    validate(spec);
    const auto path = cache_file(spec);
    if (std::filesystem::exists(path)) return load_price_csv(path, 1);

    const HttpGet http = options.http ? options.http : default_http_get();
    const auto sleep = options.sleep ? options.sleep
                                     : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    const std::string url = expand_url(spec);

    std::string failure;
    HttpResponse response;
    auto delay = options.initial_backoff;
    const int attempts = std::max(1, options.max_attempts);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        try {
            response = http(url);
            if (response.status == 200) break;
            failure = "HTTP status " + std::to_string(response.status);
        } catch (const std::exception& e) {
            failure = e.what();
        }
        response.status = 0;
        if (attempt < attempts) {
            sleep(delay);
            delay *= 2;
        }
    }
    if (response.status != 200)
        throw DataError("fetch " + spec.ticker + ": " + failure + " after " + std::to_string(attempts) + " attempts");

    const auto full = parse_chart_payload(response.body, spec.ticker);
    auto panel = full.slice(spec.start_date, spec.end_date);
    if (panel.rows() == 0) throw DataError("fetch " + spec.ticker + ": empty series in requested window");

    std::filesystem::create_directories(path.parent_path());
    static std::atomic<unsigned> counter{0};
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    write_price_csv(panel, tmp);
    std::filesystem::rename(tmp, path);
    return panel;
}

PricePanel join_panels(const std::vector<PricePanel>& panels) {
    if (panels.empty()) throw DataError("no tickers to assemble");
    std::set<std::string> common(panels.front().dates().begin(), panels.front().dates().end());
    for (std::size_t k = 1; k < panels.size(); ++k) {
        std::set<std::string> next;
        for (const auto& d : panels[k].dates())
            if (common.count(d)) next.insert(d);
        common = std::move(next);
    }
    if (common.empty()) throw DataError("tickers share no trading dates");

    std::vector<std::string> tickers;
    for (const auto& p : panels)
        for (const auto& t : p.tickers()) tickers.push_back(t);
    std::vector<std::string> dates(common.begin(), common.end());
    std::vector<RawPriceRow> rows(dates.size());
    for (const auto& p : panels) {
        std::size_t cursor = 0;
        for (Eigen::Index t = 0; t < p.rows(); ++t) {
            if (cursor < dates.size() && p.dates()[t] == dates[cursor]) {
                for (Eigen::Index i = 0; i < p.cols(); ++i) rows[cursor].push_back(p.prices()(t, i));
                ++cursor;
            }
        }
    }
    return build_price_panel(std::move(tickers), std::move(dates), rows);
}

PricePanel assemble_universe(const std::vector<FetchSpec>& specs, const FetchOptions& options) {
    if (specs.empty()) throw ConfigError("assemble_universe: no tickers");
    std::vector<PricePanel> panels;
    panels.reserve(specs.size());
    for (const auto& s : specs) panels.push_back(fetch_prices(s, options));
    return join_panels(panels);
}

}  // namespace portfolio
