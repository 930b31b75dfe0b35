#pragma once

#include <string>
#include <string_view>

namespace kct {

/// Well-formed CPE name. Attribute values are lowercase and unescaped;
/// "*" is ANY and "-" is NA.
struct CpeName {
  std::string raw;
  std::string part = "*";
  std::string vendor = "*";
  std::string product = "*";
  std::string version = "*";
  std::string update = "*";
  std::string edition = "*";
  std::string language = "*";
  std::string sw_edition = "*";
  std::string target_sw = "*";
  std::string target_hw = "*";
  std::string other = "*";

  /// Normalised CPE 2.3 formatted string; used as the cache and lookup key.
  std::string formatted() const;

  bool operator==(const CpeName& o) const { return formatted() == o.formatted(); }
};

/// Accepts a CPE 2.3 formatted string ("cpe:2.3:a:vendor:product:..."), a
/// bound WFN ("wfn:[part=\"a\",vendor=\"x\"]") or a CPE 2.2 URI
/// ("cpe:/a:vendor:product", as emitted by port scanners). Throws ParseError.
CpeName parse_cpe(std::string_view raw);

}  // namespace kct
