#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kct/cpe.hpp"

namespace kct {

struct VulnerabilityRecord {
  std::string cve_id;
  double cvss_base = 0.0;             // [0,10]
  std::string cvss_version;           // "3.1", "3.0", "4.0", "2.0"
  std::int64_t source_timestamp = 0;  // unix seconds at retrieval

  bool operator==(const VulnerabilityRecord&) const = default;
};

/// Result of one lookup. `known` is false when the source has no entry for
/// the CPE at all, which reports as "unassessed" rather than a clean zero.
struct VulnLookup {
  std::vector<VulnerabilityRecord> records;
  bool known = false;
  bool from_cache = false;
  bool stale = false;  // served from an expired cache entry because the source failed
};

/// max CVSS base score / 10; 0 for an empty list.
double vbs(std::span<const VulnerabilityRecord> records);

using Clock = std::function<std::int64_t()>;
Clock system_clock();

/// Extracts records from an NVD CVE API 2.0 response body (the
/// `vulnerabilities[].cve` subset). CVSS v3.x is preferred over v4.0 and v2.
std::vector<VulnerabilityRecord> parse_nvd_response(const nlohmann::json& body, std::int64_t retrieved_at);

class VulnSource {
 public:
  virtual ~VulnSource() = default;
  /// Throws NetworkError when the source cannot be reached.
  virtual VulnLookup lookup(const CpeName& cpe) = 0;
};

/// Directory of per-CPE JSON documents shaped like NVD responses, each with
/// an extra top-level "cpe" key naming the product it describes.
class OfflineSource : public VulnSource {
 public:
  explicit OfflineSource(std::filesystem::path dir, Clock clock = system_clock());
  VulnLookup lookup(const CpeName& cpe) override;

 private:
  std::map<std::string, std::filesystem::path> index_;  // formatted cpe -> file
  Clock clock_;
};

struct NvdOptions {
  std::string endpoint = "https://services.nvd.nist.gov/rest/json/cves/2.0";
  std::string api_key;  // sent as the apiKey header when non-empty
  int max_attempts = 4;
  std::chrono::milliseconds backoff{6000};
  std::chrono::seconds timeout{30};
  int results_per_page = 2000;
};

/// NVD CVE API 2.0 query by cpeName, with bounded retry on rate limiting
/// (HTTP 403, 429, 503).
class NvdSource : public VulnSource {
 public:
  explicit NvdSource(NvdOptions options, Clock clock = system_clock());
  VulnLookup lookup(const CpeName& cpe) override;
  std::uint64_t request_count() const { return requests_.load(); }

 private:
  NvdOptions options_;
  Clock clock_;
  std::atomic<std::uint64_t> requests_{0};
};

/// File-backed cache in front of another source, keyed by the normalised
/// CPE. Fresh entries short-circuit the source; expired entries are served
/// when the source is unreachable.
class CachedSource : public VulnSource {
 public:
  CachedSource(std::shared_ptr<VulnSource> inner, std::filesystem::path cache_dir,
               std::chrono::seconds ttl = std::chrono::hours(24), Clock clock = system_clock());
  VulnLookup lookup(const CpeName& cpe) override;
  /// Skips the freshness check for this CPE on the next lookup.
  void invalidate(const CpeName& cpe);

 private:
  std::filesystem::path entry_path(const std::string& key) const;

  std::shared_ptr<VulnSource> inner_;
  std::filesystem::path dir_;
  std::chrono::seconds ttl_;
  Clock clock_;
  std::mutex mu_;
};

VulnLookup fetch_vulnerabilities(const CpeName& cpe, VulnSource& source);

/// Looks up several CPEs with at most `max_in_flight` concurrent requests.
/// Keys of the result are CpeName::formatted().
std::map<std::string, VulnLookup> fetch_many(std::span<const CpeName> cpes, VulnSource& source,
                                             std::size_t max_in_flight = 4);

nlohmann::json to_json(const VulnerabilityRecord& r);
VulnerabilityRecord vulnerability_from_json(const nlohmann::json& j);

}  // namespace kct
