#include "kct/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "kct/error.hpp"

namespace kct {

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

template <typename Map>
std::optional<double> find_value(const Map& m, const NodeId& key) {
  auto it = m.find(key);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

std::optional<double> find_cell(const CellMap& m, const NodeId& task, const NodeId& asset) {
  auto row = m.find(task);
  if (row == m.end()) return std::nullopt;
  return find_value(row->second, asset);
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  void rule() { rules_.push_back(rows_.size()); }

  std::string str() const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_) {
      width.resize(std::max(width.size(), r.size()), 0);
      for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    std::ostringstream out;
    auto line = [&] { out << std::string(total, '-') << '\n'; };
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (std::find(rules_.begin(), rules_.end(), r) != rules_.end()) line();
      for (std::size_t i = 0; i < rows_[r].size(); ++i) {
        const auto& cell = rows_[r][i];
        const std::string pad(width[i] - cell.size(), ' ');
        out << (i == 0 ? cell + pad : pad + cell);
        if (i + 1 < rows_[r].size()) out << "  ";
      }
      out << '\n';
      if (r == 0) line();
    }
    return out.str();
  }

 private:
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> rules_;
};

std::string join(const std::set<NodeId>& ids) {
  std::string s = "{";
  for (const auto& id : ids) s += (s.size() > 1 ? ", " : "") + id;
  return s + "}";
}

}  // namespace

nlohmann::json to_json(const DiscrepancyNote& n) {
  return {{"quantity", n.quantity}, {"subject", n.subject}, {"expected", n.expected}, {"computed", n.computed},
          {"message", n.message}};
}

nlohmann::json board_to_json(const ScoreBoard& b) {
  nlohmann::json j;
  j["format"] = kBoardFormat;
  j["tasks"] = b.task_ids;
  j["assets"] = b.asset_ids;
  j["atas"] = b.atas;
  j["tsas"] = b.tsas;
  j["tbs"] = b.tbs;
  j["vbs"] = b.vbs;
  j["tacs"] = b.tacs;
  j["participants"] = b.participants;
  j["tth"] = b.tth;
  j["mth"] = b.mth;
  j["macs"] = b.macs;
  j["task_kcts"] = b.task_kcts;
  j["mission_kcts"] = b.mission_kcts;
  j["annotations"] = b.annotations;
  j["notes"] = nlohmann::json::array();
  for (const auto& n : b.notes) j["notes"].push_back(to_json(n));
  j["warnings"] = b.warnings;
  return j;
}

ScoreBoard board_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != kBoardFormat) throw ParseError("not a kct-scoreboard/1 document");
  ScoreBoard b;
  try {
    j.at("tasks").get_to(b.task_ids);
    j.at("assets").get_to(b.asset_ids);
    j.at("atas").get_to(b.atas);
    j.at("tsas").get_to(b.tsas);
    j.at("tbs").get_to(b.tbs);
    j.at("vbs").get_to(b.vbs);
    j.at("tacs").get_to(b.tacs);
    j.at("participants").get_to(b.participants);
    j.at("tth").get_to(b.tth);
    b.mth = j.at("mth").get<double>();
    j.at("macs").get_to(b.macs);
    j.at("task_kcts").get_to(b.task_kcts);
    j.at("mission_kcts").get_to(b.mission_kcts);
    if (j.contains("annotations")) j.at("annotations").get_to(b.annotations);
    for (const auto& n : j.value("notes", nlohmann::json::array()))
      b.notes.push_back({n.at("quantity"), n.at("subject"), n.at("expected"), n.at("computed"), n.at("message")});
    b.warnings = j.value("warnings", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scoreboard document: ") + e.what());
  }
  return b;
}

std::string serialize_board(const ScoreBoard& board) { return board_to_json(board).dump(2) + "\n"; }

std::string render_tables(const ScoreBoard& b) {
  std::ostringstream out;
  std::vector<std::string> header{"Asset"};
  header.insert(header.end(), b.task_ids.begin(), b.task_ids.end());

  auto matrix = [&](const char* title, const CellMap& cells, bool with_tth) {
    Table t(header);
    for (const auto& asset : b.asset_ids) {
      std::vector<std::string> r{asset};
      for (const auto& task : b.task_ids) {
        auto v = find_cell(cells, task, asset);
        r.push_back(v ? fixed3(*v) : "-");
      }
      t.row(std::move(r));
    }
    if (with_tth) {
      t.rule();
      std::vector<std::string> r{"TTH"};
      for (const auto& task : b.task_ids) {
        auto v = find_value(b.tth, task);
        r.push_back(v ? fixed3(*v) : "-");
      }
      t.row(std::move(r));
    }
    out << title << "\n" << t.str() << "\n";
  };

  matrix("Asset-Task Aggregated Scores (ATAS)", b.atas, false);

  {
    Table t({"Task", "TSAS"});
    for (const auto& task : b.task_ids) t.row({task, fixed3(find_value(b.tsas, task).value_or(0.0))});
    out << "Task Severity Aggregated Scores (TSAS)\n" << t.str() << "\n";
  }
  {
    Table t({"Asset", "TBS", "VBS", "Note"});
    for (const auto& a : b.asset_ids) {
      std::string note;
      if (auto it = b.annotations.find(a); it != b.annotations.end())
        for (const auto& s : it->second) note += (note.empty() ? "" : ", ") + s;
      t.row({a, fixed3(find_value(b.tbs, a).value_or(0.0)), fixed3(find_value(b.vbs, a).value_or(0.0)), note});
    }
    out << "Traffic and Vulnerability Base Scores\n" << t.str() << "\n";
  }

  matrix("Task Asset Criticality Scores (TACS)", b.tacs, true);

  {
    Table t({"Asset", "MACS", "KCT"});
    for (const auto& a : b.asset_ids) {
      auto v = find_value(b.macs, a);
      t.row({a, v ? fixed3(*v) : "-", b.mission_kcts.count(a) ? "yes" : "no"});
    }
    t.rule();
    t.row({"MTH", fixed3(b.mth), ""});
    out << "Mission Asset Criticality Scores (MACS)\n" << t.str() << "\n";
  }

  out << "Task KCTs\n";
  for (const auto& task : b.task_ids) {
    auto it = b.task_kcts.find(task);
    out << "  " << task << ": " << join(it == b.task_kcts.end() ? std::set<NodeId>{} : it->second) << "\n";
  }
  out << "Mission KCTs: " << join(b.mission_kcts) << "\n";

  if (!b.notes.empty()) {
    out << "\nDiscrepancies\n";
    for (const auto& n : b.notes) out << "  " << n.message << "\n";
  }
  if (!b.warnings.empty()) {
    out << "\nWarnings\n";
    for (const auto& w : b.warnings) out << "  " << w << "\n";
  }
  return out.str();
}

ExpectedValues expected_from_json(const nlohmann::json& j) {
  ExpectedValues e;
  try {
    if (j.contains("tacs")) j.at("tacs").get_to(e.tacs);
    if (j.contains("tth")) j.at("tth").get_to(e.tth);
    if (j.contains("mth")) e.mth = j.at("mth").get<double>();
    if (j.contains("macs")) j.at("macs").get_to(e.macs);
    if (j.contains("task_kcts")) j.at("task_kcts").get_to(e.task_kcts);
    if (j.contains("mission_kcts")) e.mission_kcts = j.at("mission_kcts").get<std::set<NodeId>>();
    e.tolerance = j.value("tolerance", e.tolerance);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("expected values: ") + ex.what());
  }
  return e;
}

}  // namespace kct
