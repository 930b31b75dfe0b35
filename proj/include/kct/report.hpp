#pragma once

#include <string>

#include <json.hpp>

#include "kct/score.hpp"

namespace kct {

inline constexpr std::string_view kBoardFormat = "kct-scoreboard/1";

/// Full-precision structured form of a board. Objects are keyed by id, so
/// the serialisation of equal boards is byte-identical.
nlohmann::json board_to_json(const ScoreBoard& board);
ScoreBoard board_from_json(const nlohmann::json& doc);

/// Canonical text of board_to_json, two-space indented.
std::string serialize_board(const ScoreBoard& board);

/// Aligned plain-text tables with three decimals: ATAS, TSAS, TACS with a
/// TTH footer, MACS against MTH, and the KCT sets. Asset rows, task columns.
std::string render_tables(const ScoreBoard& board);

nlohmann::json to_json(const DiscrepancyNote& note);

/// Reads {"tacs": {task: {asset: v}}, "tth": {...}, "mth": v, "macs": {...},
/// "task_kcts": {task: [...]}, "mission_kcts": [...], "tolerance": v}.
ExpectedValues expected_from_json(const nlohmann::json& doc);

}  // namespace kct
