#include "kct/vuln.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "kct/error.hpp"
#include "kct/hash.hpp"

namespace kct {

namespace {

nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

void write_atomically(const std::filesystem::path& target, const std::string& content) {
  auto tmp = target;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move cache entry into place: " + ec.message());
}

// "https://host:port/path" -> {"https://host:port", "/path"}
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ValidationError("endpoint must be an absolute URL: " + url);
  const auto path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, "/"};
  return {url.substr(0, path), url.substr(path)};
}

}  // namespace

double vbs(std::span<const VulnerabilityRecord> records) {
  double best = 0.0;
  for (const auto& r : records) best = std::max(best, r.cvss_base);
  return best / 10.0;
}

Clock system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

std::vector<VulnerabilityRecord> parse_nvd_response(const nlohmann::json& body, std::int64_t retrieved_at) {
  static constexpr std::pair<const char*, const char*> kPreference[] = {
      {"cvssMetricV31", "3.1"}, {"cvssMetricV30", "3.0"}, {"cvssMetricV40", "4.0"}, {"cvssMetricV2", "2.0"}};
  std::vector<VulnerabilityRecord> out;
  if (!body.is_object() || !body.contains("vulnerabilities")) throw ParseError("NVD response lacks 'vulnerabilities'");
  for (const auto& item : body.at("vulnerabilities")) {
    if (!item.contains("cve")) continue;
    const auto& cve = item.at("cve");
    VulnerabilityRecord r;
    r.cve_id = cve.value("id", std::string{});
    r.source_timestamp = retrieved_at;
    if (r.cve_id.empty()) throw ParseError("NVD vulnerability without an id");
    const auto metrics = cve.value("metrics", nlohmann::json::object());
    bool scored = false;
    for (auto [key, version] : kPreference) {
      if (!metrics.contains(key) || metrics.at(key).empty()) continue;
      const auto& list = metrics.at(key);
      auto pick = std::find_if(list.begin(), list.end(), [](const auto& m) { return m.value("type", "") == "Primary"; });
      const auto& m = pick != list.end() ? *pick : list.front();
      r.cvss_base = m.at("cvssData").at("baseScore").get<double>();
      r.cvss_version = version;
      scored = true;
      break;
    }
    if (!scored) continue;  // awaiting analysis; carries no score yet
    if (r.cvss_base < 0.0 || r.cvss_base > 10.0) throw ParseError("CVSS base score out of range for " + r.cve_id);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.cve_id < b.cve_id; });
  return out;
}

nlohmann::json to_json(const VulnerabilityRecord& r) {
  return {{"cve_id", r.cve_id}, {"cvss_base", r.cvss_base}, {"cvss_version", r.cvss_version},
          {"source_timestamp", r.source_timestamp}};
}

VulnerabilityRecord vulnerability_from_json(const nlohmann::json& j) {
  return {j.at("cve_id").get<std::string>(), j.at("cvss_base").get<double>(), j.value("cvss_version", ""),
          j.value("source_timestamp", std::int64_t{0})};
}

// --- offline ----------------------------------------------------------------

OfflineSource::OfflineSource(std::filesystem::path dir, Clock clock) : clock_(std::move(clock)) {
  if (!std::filesystem::is_directory(dir)) throw IoError("vulnerability fixture directory missing: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto doc = read_json_file(f);
    if (!doc.contains("cpe")) throw ParseError(f.string() + ": fixture lacks a 'cpe' key");
    index_.emplace(parse_cpe(doc.at("cpe").get<std::string>()).formatted(), f);
  }
}

VulnLookup OfflineSource::lookup(const CpeName& cpe) {
  VulnLookup out;
  auto it = index_.find(cpe.formatted());
  if (it == index_.end()) return out;
  out.known = true;
  out.records = parse_nvd_response(read_json_file(it->second), clock_());
  return out;
}

// --- online -----------------------------------------------------------------

NvdSource::NvdSource(NvdOptions options, Clock clock) : options_(std::move(options)), clock_(std::move(clock)) {}

VulnLookup NvdSource::lookup(const CpeName& cpe) {
  const auto [base, path] = split_url(options_.endpoint);
  httplib::Client client(base);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("apiKey", options_.api_key);

  VulnLookup out;
  out.known = true;
  nlohmann::json merged{{"vulnerabilities", nlohmann::json::array()}};
  int start = 0;
  for (;;) {
    httplib::Params params{{"cpeName", cpe.formatted()},
                           {"startIndex", std::to_string(start)},
                           {"resultsPerPage", std::to_string(options_.results_per_page)}};
    const std::string target = httplib::append_query_params(path, params);
    httplib::Result res;
    for (int attempt = 0;; ++attempt) {
      ++requests_;
      res = client.Get(target, headers);
      if (!res) throw NetworkError("NVD request failed: " + httplib::to_string(res.error()));
      const int s = res->status;
      const bool throttled = s == 403 || s == 429 || s == 503;
      if (!throttled) break;
      if (attempt + 1 >= options_.max_attempts)
        throw NetworkError("NVD rate limit persisted after " + std::to_string(options_.max_attempts) + " attempts");
      std::this_thread::sleep_for(options_.backoff * (1 << attempt));
    }
    if (res->status == 404) return VulnLookup{};
    if (res->status != 200) throw NetworkError("NVD returned HTTP " + std::to_string(res->status));
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("NVD response: ") + e.what());
    }
    for (const auto& v : body.value("vulnerabilities", nlohmann::json::array())) merged["vulnerabilities"].push_back(v);
    const int total = body.value("totalResults", 0);
    const int page = body.value("resultsPerPage", 0);
    start += page;
    if (page <= 0 || start >= total) break;
  }
  out.records = parse_nvd_response(merged, clock_());
  return out;
}

// --- cache ------------------------------------------------------------------

CachedSource::CachedSource(std::shared_ptr<VulnSource> inner, std::filesystem::path cache_dir,
                           std::chrono::seconds ttl, Clock clock)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)), ttl_(ttl), clock_(std::move(clock)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path CachedSource::entry_path(const std::string& key) const {
  return dir_ / (fnv1a64_hex(key) + ".json");
}

void CachedSource::invalidate(const CpeName& cpe) {
  std::error_code ec;
  std::filesystem::remove(entry_path(cpe.formatted()), ec);
}

VulnLookup CachedSource::lookup(const CpeName& cpe) {
  const std::string key = cpe.formatted();
  const auto path = entry_path(key);

  std::optional<VulnLookup> cached;
  std::int64_t retrieved_at = 0;
  {
    std::lock_guard lock(mu_);
    if (std::filesystem::exists(path)) {
      const auto doc = read_json_file(path);
      if (doc.value("cpe", "") == key) {
        VulnLookup l;
        l.known = doc.value("known", false);
        l.from_cache = true;
        for (const auto& r : doc.at("records")) l.records.push_back(vulnerability_from_json(r));
        retrieved_at = doc.value("retrieved_at", std::int64_t{0});
        cached = std::move(l);
      }
    }
  }
  if (cached && clock_() - retrieved_at < ttl_.count()) return *cached;

  VulnLookup fresh;
  try {
    fresh = inner_->lookup(cpe);
  } catch (const NetworkError&) {
    if (!cached) throw;
    cached->stale = true;
    return *cached;
  }

  nlohmann::json doc{{"cpe", key}, {"known", fresh.known}, {"retrieved_at", clock_()}};
  doc["records"] = nlohmann::json::array();
  for (const auto& r : fresh.records) doc["records"].push_back(to_json(r));
  {
    std::lock_guard lock(mu_);
    write_atomically(path, doc.dump(2));
  }
  return fresh;
}

VulnLookup fetch_vulnerabilities(const CpeName& cpe, VulnSource& source) { return source.lookup(cpe); }

std::map<std::string, VulnLookup> fetch_many(std::span<const CpeName> cpes, VulnSource& source,
                                             std::size_t max_in_flight) {
  std::vector<CpeName> unique;
  for (const auto& c : cpes)
    if (std::none_of(unique.begin(), unique.end(), [&](const auto& u) { return u == c; })) unique.push_back(c);

  std::vector<VulnLookup> results(unique.size());
  std::vector<std::exception_ptr> errors(unique.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < unique.size(); i = next++) {
      try {
        results[i] = source.lookup(unique[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(max_in_flight, unique.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::map<std::string, VulnLookup> out;
  for (std::size_t i = 0; i < unique.size(); ++i) out.emplace(unique[i].formatted(), std::move(results[i]));
  return out;
}

}  // namespace kct
