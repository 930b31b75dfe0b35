#include "kct/cpe.hpp"

#include <array>
#include <cctype>
#include <vector>

#include "kct/error.hpp"

namespace kct {

namespace {

constexpr std::size_t kAttributes = 11;

template <typename Cpe>
auto slots(Cpe& c) {
  using Ptr = decltype(&c.part);
  return std::array<Ptr, kAttributes>{&c.part,     &c.vendor,     &c.product,   &c.version,   &c.update, &c.edition,
          &c.language, &c.sw_edition, &c.target_sw, &c.target_hw, &c.other};
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

[[noreturn]] void bad(std::string_view raw, const std::string& why) {
  throw ParseError("malformed CPE '" + std::string(raw) + "': " + why);
}

// Splits on unescaped ':' and removes the quoting backslashes.
std::vector<std::string> split_formatted(std::string_view body, std::string_view raw) {
  std::vector<std::string> out(1);
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '\\') {
      if (i + 1 == body.size()) bad(raw, "dangling escape");
      out.back() += body[++i];
    } else if (c == ':') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

void check_part(const CpeName& c, std::string_view raw) {
  if (c.part != "a" && c.part != "o" && c.part != "h" && c.part != "*") bad(raw, "part must be a, o, h or *");
}

CpeName parse_formatted(std::string_view raw) {
  auto fields = split_formatted(raw.substr(8), raw);
  if (fields.size() > kAttributes) bad(raw, "too many components");
  CpeName c;
  c.raw = std::string(raw);
  auto s = slots(c);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].empty()) bad(raw, "empty component");
    *s[i] = lower(fields[i]);
  }
  check_part(c, raw);
  return c;
}

CpeName parse_uri(std::string_view raw) {
  std::string_view body = raw.substr(5);
  std::vector<std::string> fields(1);
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char ch = body[i];
    if (ch == ':') {
      fields.emplace_back();
    } else if (ch == '%') {
      if (i + 2 >= body.size() || !std::isxdigit(static_cast<unsigned char>(body[i + 1])) ||
          !std::isxdigit(static_cast<unsigned char>(body[i + 2])))
        bad(raw, "bad percent escape");
      fields.back() += static_cast<char>(std::stoi(std::string(body.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      fields.back() += ch;
    }
  }
  if (fields.size() > 7) bad(raw, "too many components");
  CpeName c;
  c.raw = std::string(raw);
  auto s = slots(c);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    std::string v = lower(fields[i]);
    if (v.empty()) v = "*";
    if (i == 5 && v.size() > 1 && v[0] == '~') {
      // packed edition: ~edition~sw_edition~target_sw~target_hw~other
      std::vector<std::string> packed(1);
      for (char ch : v.substr(1)) {
        if (ch == '~')
          packed.emplace_back();
        else
          packed.back() += ch;
      }
      if (packed.size() != 5) bad(raw, "bad packed edition");
      std::string* dst[] = {&c.edition, &c.sw_edition, &c.target_sw, &c.target_hw, &c.other};
      for (std::size_t k = 0; k < 5; ++k) *dst[k] = packed[k].empty() ? "*" : packed[k];
      continue;
    }
    *s[i] = v;
  }
  check_part(c, raw);
  return c;
}

CpeName parse_wfn(std::string_view raw) {
  if (raw.size() < 6 || raw.back() != ']') bad(raw, "WFN must end with ']'");
  std::string_view body = raw.substr(5, raw.size() - 6);
  static constexpr std::string_view names[kAttributes] = {
      "part", "vendor", "product", "version", "update", "edition", "language", "sw_edition", "target_sw",
      "target_hw", "other"};
  CpeName c;
  c.raw = std::string(raw);
  auto s = slots(c);
  std::size_t i = 0;
  while (i < body.size()) {
    const auto eq = body.find('=', i);
    if (eq == std::string_view::npos) bad(raw, "attribute without '='");
    const std::string name = lower(std::string(body.substr(i, eq - i)));
    std::size_t j = eq + 1;
    std::string value;
    if (j < body.size() && body[j] == '"') {
      ++j;
      while (j < body.size() && body[j] != '"') {
        if (body[j] == '\\' && j + 1 < body.size()) ++j;
        value += body[j++];
      }
      if (j >= body.size()) bad(raw, "unterminated value");
      ++j;
    } else {
      const auto end = body.find(',', j);
      const std::string logical(body.substr(j, end == std::string_view::npos ? std::string_view::npos : end - j));
      if (logical == "ANY")
        value = "*";
      else if (logical == "NA")
        value = "-";
      else
        bad(raw, "unquoted value must be ANY or NA");
      j = end == std::string_view::npos ? body.size() : end;
    }
    bool matched = false;
    for (std::size_t k = 0; k < kAttributes; ++k)
      if (names[k] == name) {
        *s[k] = lower(value);
        matched = true;
      }
    if (!matched) bad(raw, "unknown attribute '" + name + "'");
    if (j < body.size()) {
      if (body[j] != ',') bad(raw, "expected ','");
      ++j;
    }
    i = j;
  }
  check_part(c, raw);
  return c;
}

std::string escape(const std::string& v) {
  if (v == "*" || v == "-") return v;
  std::string out;
  for (char ch : v) {
    const auto u = static_cast<unsigned char>(ch);
    if (!std::isalnum(u) && ch != '_' && ch != '.' && ch != '-' && ch != '*' && ch != '?') out += '\\';
    out += ch;
  }
  return out;
}

}  // namespace

std::string CpeName::formatted() const {
  std::string out = "cpe:2.3";
  for (const auto* s : slots(*this)) out += ":" + escape(*s);
  return out;
}

CpeName parse_cpe(std::string_view raw) {
  if (raw.rfind("cpe:2.3:", 0) == 0) return parse_formatted(raw);
  if (raw.rfind("cpe:/", 0) == 0) return parse_uri(raw);
  if (raw.rfind("wfn:[", 0) == 0) return parse_wfn(raw);
  bad(raw, "expected a cpe:2.3: string, a cpe:/ URI or a wfn:[...] name");
}

}  // namespace kct
