#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "kct/engine.hpp"
#include "kct/mission.hpp"
#include "kct/report.hpp"

namespace fixture {

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(read_text(path)); }

inline std::map<kct::NodeId, double> read_metric(const std::string& path) {
  return read_json(path).get<std::map<kct::NodeId, double>>();
}

inline std::string case_path(const char* name) { return std::string(KCT_FIXTURE_DIR "/case_study/") + name; }

/// The case-study mission with its traffic and vulnerability fixtures.
struct CaseStudy {
  kct::MissionDefinition mission = kct::load_mission_file(case_path("mission.json")).definition();
  std::map<kct::NodeId, double> tbs = read_metric(case_path("tbs.json"));
  std::map<kct::NodeId, double> vbs = read_metric(case_path("vbs.json"));
  kct::ExpectedValues expected = kct::expected_from_json(read_json(case_path("expected.json")));

  kct::CycleInputs cycle_inputs(std::int64_t timestamp = 1700000000) const {
    kct::CycleInputs in;
    in.mission = mission;
    in.tbs_fixture = tbs;
    in.vbs_fixture = vbs;
    in.expected = expected;
    in.timestamp = timestamp;
    return in;
  }

  kct::EvaluationInputs evaluation_inputs() const {
    kct::EvaluationInputs in;
    in.mission = mission;
    in.tbs = tbs;
    in.vbs = vbs;
    in.expected = expected;
    return in;
  }
};

}  // namespace fixture
