#include "kct/discovery.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "kct/error.hpp"
#include "kct/hash.hpp"

namespace kct {

namespace pt = boost::property_tree;

namespace {

constexpr std::pair<EventKind, std::string_view> kKinds[] = {
    {EventKind::discovery, "discovery"},
    {EventKind::removal, "removal"},
    {EventKind::modification, "modification"},
    {EventKind::notification, "notification"},
};

std::string attr(const pt::ptree& node, const char* name, std::string fallback = {}) {
  return node.get<std::string>(std::string("<xmlattr>.") + name, fallback);
}

std::int64_t to_i64(const std::string& s, std::int64_t fallback = 0) {
  if (s.empty()) return fallback;
  try {
    return std::stoll(s);
  } catch (const std::exception&) {
    return fallback;
  }
}

bool valid_cpe(const std::string& raw) {
  try {
    parse_cpe(raw);
    return true;
  } catch (const ParseError&) {
    return false;
  }
}

// Product CPE: first application CPE in port order, then any service CPE,
// then the OS CPE.
void choose_cpe(AssetRecord& r) {
  r.cpe.reset();
  for (const auto& p : r.open_ports)
    if (!p.cpe.empty() && parse_cpe(p.cpe).part == "a") {
      r.cpe = p.cpe;
      break;
    }
  if (!r.cpe)
    for (const auto& p : r.open_ports)
      if (!p.cpe.empty()) {
        r.cpe = p.cpe;
        break;
      }
  if (!r.cpe && !r.os_cpe.empty()) r.cpe = r.os_cpe;
  const bool has_services = std::any_of(r.open_ports.begin(), r.open_ports.end(),
                                        [](const auto& p) { return !p.service.empty(); });
  r.needs_manual_cpe = !r.cpe && has_services;
}

pt::ptree read_xml_text(std::string_view xml) {
  std::istringstream in{std::string(xml)};
  pt::ptree tree;
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("malformed scan XML: ") + e.what());
  }
  return tree;
}

void merge_payload(AssetRecord& r, const nlohmann::json& payload, bool* cpe_relevant_change) {
  if (!payload.is_object()) throw ValidationError("event payload must be an object");
  if (payload.contains("addresses"))
    for (const auto& a : payload.at("addresses")) r.addresses.insert(a.get<std::string>());
  if (payload.contains("hostnames"))
    for (const auto& h : payload.at("hostnames")) r.hostnames.insert(h.get<std::string>());
  const auto old_cpe = r.cpe;
  const auto old_ports = r.open_ports;
  if (payload.contains("ports")) {
    r.open_ports.clear();
    for (const auto& p : payload.at("ports"))
      r.open_ports.insert({p.at("port").get<std::uint16_t>(), p.value("protocol", "tcp"), p.value("service", ""),
                           p.value("version", ""), p.value("cpe", "")});
  }
  if (payload.contains("os_cpe")) r.os_cpe = payload.at("os_cpe").get<std::string>();
  choose_cpe(r);
  if (payload.contains("cpe") && !payload.at("cpe").is_null()) {
    const auto raw = payload.at("cpe").get<std::string>();
    parse_cpe(raw);
    r.cpe = raw;
    r.needs_manual_cpe = false;
  } else if (!payload.contains("ports") && !payload.contains("os_cpe")) {
    r.cpe = old_cpe;
  }
  if (cpe_relevant_change) {
    auto versions = [](const std::set<PortService>& ports) {
      std::vector<std::tuple<std::uint16_t, std::string, std::string, std::string>> v;
      for (const auto& p : ports) v.emplace_back(p.port, p.protocol, p.service, p.version);
      return v;
    };
    *cpe_relevant_change = r.cpe != old_cpe || versions(r.open_ports) != versions(old_ports);
  }
}

}  // namespace

std::string_view to_string(EventKind kind) {
  for (auto [k, s] : kKinds)
    if (k == kind) return s;
  return "unknown";
}

EventKind event_kind_from_string(std::string_view s) {
  for (auto [k, name] : kKinds)
    if (name == s) return k;
  throw ParseError("unknown event kind '" + std::string(s) + "'");
}

std::string AssetRecord::fingerprint() const {
  std::string key;
  for (const auto& p : open_ports) key += std::to_string(p.port) + "/" + p.protocol + "/" + p.service + ";";
  return fnv1a64_hex(key);
}

bool Inventory::operator==(const Inventory& o) const {
  if (assets != o.assets || events_applied != o.events_applied) return false;
  if (pending_notifications.size() != o.pending_notifications.size()) return false;
  for (std::size_t i = 0; i < pending_notifications.size(); ++i)
    if (to_json(pending_notifications[i]) != to_json(o.pending_notifications[i])) return false;
  return true;
}

std::vector<AssetRecord> parse_scan(std::string_view xml) {
  const auto tree = read_xml_text(xml);
  if (tree.empty()) throw ParseError("empty scan document");
  const auto& [root_name, root] = tree.front();
  if (root_name != "nmaprun")
    throw ParseError("unsupported scanner schema: root element <" + root_name + ">, expected <nmaprun>");
  const std::int64_t run_start = to_i64(attr(root, "start"));

  std::vector<AssetRecord> out;
  for (const auto& [name, host] : root) {
    if (name != "host") continue;
    const auto status = host.get_child_optional("status");
    if (status && attr(*status, "state", "up") != "up") continue;

    AssetRecord r;
    std::string first_v4, first_v6;
    for (const auto& [n, a] : host) {
      if (n != "address") continue;
      const auto type = attr(a, "addrtype", "ipv4");
      const auto addr = attr(a, "addr");
      if (type == "ipv4") {
        r.addresses.insert(addr);
        if (first_v4.empty()) first_v4 = addr;
      } else if (type == "ipv6") {
        r.addresses.insert(addr);
        if (first_v6.empty()) first_v6 = addr;
      }
    }
    r.asset_id = !first_v4.empty() ? first_v4 : first_v6;
    if (r.asset_id.empty()) throw ParseError("scan host without an IP address");

    if (auto names = host.get_child_optional("hostnames"))
      for (const auto& [n, h] : *names)
        if (n == "hostname") r.hostnames.insert(attr(h, "name"));

    if (auto ports = host.get_child_optional("ports"))
      for (const auto& [n, p] : *ports) {
        if (n != "port") continue;
        if (attr(p.get_child("state", {}), "state") != "open") continue;
        PortService ps;
        ps.port = static_cast<std::uint16_t>(to_i64(attr(p, "portid")));
        ps.protocol = attr(p, "protocol", "tcp");
        if (auto svc = p.get_child_optional("service")) {
          ps.service = attr(*svc, "name");
          ps.version = attr(*svc, "version");
          const auto cpe = svc->get<std::string>("cpe", "");
          if (valid_cpe(cpe)) ps.cpe = cpe;
        }
        r.open_ports.insert(std::move(ps));
      }

    if (auto os = host.get_child_optional("os"))
      for (const auto& [n, match] : *os) {
        if (n != "osmatch" || !r.os_cpe.empty()) continue;
        for (const auto& [cn, cls] : match)
          if (cn == "osclass") {
            const auto cpe = cls.get<std::string>("cpe", "");
            if (valid_cpe(cpe)) {
              r.os_cpe = cpe;
              break;
            }
          }
      }

    r.first_seen = to_i64(attr(host, "starttime"), run_start);
    r.last_seen = std::max(r.first_seen, to_i64(attr(host, "endtime"), r.first_seen));
    choose_cpe(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<AssetRecord> parse_scan_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scan " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scan(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string write_scan(const std::vector<AssetRecord>& records) {
  pt::ptree run;
  run.put("<xmlattr>.scanner", "nmap");
  run.put("<xmlattr>.xmloutputversion", "1.05");
  for (const auto& r : records) {
    pt::ptree host;
    host.put("<xmlattr>.starttime", r.first_seen);
    host.put("<xmlattr>.endtime", r.last_seen);
    host.put("status.<xmlattr>.state", "up");
    // primary address first
    auto put_addr = [&](const std::string& a) {
      pt::ptree node;
      node.put("<xmlattr>.addr", a);
      node.put("<xmlattr>.addrtype", a.find(':') == std::string::npos ? "ipv4" : "ipv6");
      host.add_child("address", node);
    };
    put_addr(r.asset_id);
    for (const auto& a : r.addresses)
      if (a != r.asset_id) put_addr(a);
    pt::ptree names;
    for (const auto& h : r.hostnames) names.add("hostname.<xmlattr>.name", h);
    host.add_child("hostnames", names);
    pt::ptree ports;
    for (const auto& p : r.open_ports) {
      pt::ptree port;
      port.put("<xmlattr>.protocol", p.protocol);
      port.put("<xmlattr>.portid", p.port);
      port.put("state.<xmlattr>.state", "open");
      if (!p.service.empty() || !p.cpe.empty()) {
        pt::ptree svc;
        svc.put("<xmlattr>.name", p.service);
        if (!p.version.empty()) svc.put("<xmlattr>.version", p.version);
        if (!p.cpe.empty()) svc.put("cpe", p.cpe);
        port.add_child("service", svc);
      }
      ports.add_child("port", port);
    }
    host.add_child("ports", ports);
    if (!r.os_cpe.empty()) host.put("os.osmatch.osclass.cpe", r.os_cpe);
    run.add_child("host", host);
  }
  pt::ptree doc;
  doc.add_child("nmaprun", run);
  std::ostringstream out;
  pt::write_xml(out, doc, pt::xml_writer_make_settings<std::string>(' ', 2));
  return out.str();
}

// --- events -----------------------------------------------------------------

DiscoveryEvent event_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("event must be a JSON object");
  DiscoveryEvent e;
  try {
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    e.asset_id = j.at("asset_id").get<std::string>();
    e.timestamp = j.value("timestamp", std::int64_t{0});
    e.payload = j.value("payload", nlohmann::json::object());
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("event: ") + ex.what());
  }
  if (e.asset_id.empty()) throw ParseError("event without asset_id");
  return e;
}

nlohmann::json to_json(const DiscoveryEvent& e) {
  return {{"kind", to_string(e.kind)}, {"asset_id", e.asset_id}, {"timestamp", e.timestamp}, {"payload", e.payload}};
}

std::vector<DiscoveryEvent> parse_event_stream(std::string_view text) {
  std::vector<DiscoveryEvent> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('\n', start), text.size());
    ++line_no;
    const auto line = text.substr(start, end - start);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back(event_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("event line " + std::to_string(line_no) + ": " + e.what());
      } catch (const ParseError& e) {
        throw ParseError("event line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    start = end + 1;
  }
  return out;
}

Inventory apply_event(Inventory inv, const DiscoveryEvent& ev) {
  auto it = inv.assets.find(ev.asset_id);
  switch (ev.kind) {
    case EventKind::discovery: {
      if (it == inv.assets.end()) {
        AssetRecord r;
        r.asset_id = ev.asset_id;
        r.first_seen = r.last_seen = ev.timestamp;
        merge_payload(r, ev.payload, nullptr);
        r.history.push_back({EventKind::discovery, ev.timestamp, "discovered"});
        // attach notifications that arrived before the asset did
        auto& pending = inv.pending_notifications;
        for (auto p = pending.begin(); p != pending.end();) {
          if (p->asset_id == ev.asset_id) {
            r.annotations.push_back(p->payload.value("message", p->payload.dump()));
            p = pending.erase(p);
          } else {
            ++p;
          }
        }
        inv.assets.emplace(ev.asset_id, std::move(r));
      } else {
        auto& r = it->second;
        bool changed = false;
        merge_payload(r, ev.payload, &changed);
        r.needs_cpe_resolution = r.needs_cpe_resolution || changed;
        const bool was_removed = r.state == AssetState::removed;
        r.state = AssetState::active;
        r.last_seen = std::max(r.last_seen, ev.timestamp);
        r.history.push_back({EventKind::discovery, ev.timestamp, was_removed ? "rediscovered" : "seen again"});
      }
      break;
    }
    case EventKind::removal: {
      if (it == inv.assets.end()) throw NotFoundError("removal of unknown asset " + ev.asset_id);
      auto& r = it->second;
      r.state = AssetState::removed;
      r.last_seen = std::max(r.last_seen, ev.timestamp);
      r.history.push_back({EventKind::removal, ev.timestamp, ev.payload.value("reason", "")});
      break;
    }
    case EventKind::modification: {
      if (it == inv.assets.end()) throw NotFoundError("modification of unknown asset " + ev.asset_id);
      auto& r = it->second;
      bool changed = false;
      merge_payload(r, ev.payload, &changed);
      r.needs_cpe_resolution = r.needs_cpe_resolution || changed;
      r.last_seen = std::max(r.last_seen, ev.timestamp);
      r.history.push_back({EventKind::modification, ev.timestamp, changed ? "cpe re-resolution required" : ""});
      break;
    }
    case EventKind::notification: {
      if (it == inv.assets.end()) {
        inv.pending_notifications.push_back(ev);
      } else {
        it->second.annotations.push_back(ev.payload.value("message", ev.payload.dump()));
      }
      break;
    }
  }
  ++inv.events_applied;
  return inv;
}

std::vector<DiscoveryEvent> events_from_scan(const Inventory& inventory, const std::vector<AssetRecord>& scan,
                                             std::int64_t timestamp, std::vector<std::string>* warnings) {
  std::vector<DiscoveryEvent> out;
  for (const auto& r : scan) {
    nlohmann::json payload = to_json(r);
    payload.erase("asset_id");
    payload.erase("state");
    payload.erase("history");
    payload.erase("annotations");
    const std::int64_t ts = std::max(timestamp, r.last_seen);
    auto it = inventory.assets.find(r.asset_id);
    if (it != inventory.assets.end() && it->second.state == AssetState::active &&
        it->second.fingerprint() != r.fingerprint()) {
      if (warnings)
        warnings->push_back("asset " + r.asset_id + " changed fingerprint; keeping the most recent scan");
      out.push_back({EventKind::modification, r.asset_id, std::move(payload), ts});
    } else {
      out.push_back({EventKind::discovery, r.asset_id, std::move(payload), ts});
    }
  }
  return out;
}

// --- JSON -------------------------------------------------------------------

nlohmann::json to_json(const AssetRecord& r) {
  nlohmann::json ports = nlohmann::json::array();
  for (const auto& p : r.open_ports)
    ports.push_back({{"port", p.port}, {"protocol", p.protocol}, {"service", p.service}, {"version", p.version},
                     {"cpe", p.cpe}});
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : r.history)
    history.push_back({{"kind", to_string(h.kind)}, {"timestamp", h.timestamp}, {"detail", h.detail}});
  nlohmann::json j{{"asset_id", r.asset_id},
                   {"addresses", r.addresses},
                   {"hostnames", r.hostnames},
                   {"ports", ports},
                   {"os_cpe", r.os_cpe},
                   {"first_seen", r.first_seen},
                   {"last_seen", r.last_seen},
                   {"state", r.state == AssetState::active ? "active" : "removed"},
                   {"needs_manual_cpe", r.needs_manual_cpe},
                   {"needs_cpe_resolution", r.needs_cpe_resolution},
                   {"history", history},
                   {"annotations", r.annotations}};
  j["cpe"] = r.cpe ? nlohmann::json(*r.cpe) : nlohmann::json(nullptr);
  return j;
}

AssetRecord asset_record_from_json(const nlohmann::json& j) {
  AssetRecord r;
  r.asset_id = j.at("asset_id").get<std::string>();
  r.addresses = j.value("addresses", std::set<std::string>{});
  r.hostnames = j.value("hostnames", std::set<std::string>{});
  for (const auto& p : j.value("ports", nlohmann::json::array()))
    r.open_ports.insert({p.at("port").get<std::uint16_t>(), p.value("protocol", "tcp"), p.value("service", ""),
                         p.value("version", ""), p.value("cpe", "")});
  r.os_cpe = j.value("os_cpe", "");
  if (j.contains("cpe") && !j.at("cpe").is_null()) r.cpe = j.at("cpe").get<std::string>();
  r.first_seen = j.value("first_seen", std::int64_t{0});
  r.last_seen = j.value("last_seen", std::int64_t{0});
  r.state = j.value("state", "active") == "removed" ? AssetState::removed : AssetState::active;
  r.needs_manual_cpe = j.value("needs_manual_cpe", false);
  r.needs_cpe_resolution = j.value("needs_cpe_resolution", false);
  for (const auto& h : j.value("history", nlohmann::json::array()))
    r.history.push_back({event_kind_from_string(h.at("kind").get<std::string>()), h.value("timestamp", std::int64_t{0}),
                         h.value("detail", "")});
  r.annotations = j.value("annotations", std::vector<std::string>{});
  return r;
}

nlohmann::json to_json(const Inventory& inv) {
  nlohmann::json assets = nlohmann::json::array();
  for (const auto& [id, r] : inv.assets) assets.push_back(to_json(r));
  nlohmann::json pending = nlohmann::json::array();
  for (const auto& e : inv.pending_notifications) pending.push_back(to_json(e));
  return {{"assets", assets}, {"pending_notifications", pending}, {"events_applied", inv.events_applied}};
}

Inventory inventory_from_json(const nlohmann::json& j) {
  Inventory inv;
  for (const auto& a : j.value("assets", nlohmann::json::array())) {
    auto r = asset_record_from_json(a);
    inv.assets.emplace(r.asset_id, std::move(r));
  }
  for (const auto& e : j.value("pending_notifications", nlohmann::json::array()))
    inv.pending_notifications.push_back(event_from_json(e));
  inv.events_applied = j.value("events_applied", std::uint64_t{0});
  return inv;
}

}  // namespace kct
