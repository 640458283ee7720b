#pragma once

#include "acdcflow/grid.hpp"

#include <string>

namespace acdcflow::io {

// parse_ok == false: the document is malformed (syntax or field-level type
// errors); diagnostics.errors name the offending line/field. parse_ok == true
// with diagnostics errors: the document parsed but fails case validation.
struct LoadResult {
  grid::NetworkCase net;
  grid::Diagnostics diagnostics;
  bool parse_ok = false;

  bool usable() const { return parse_ok && diagnostics.ok(); }
};

LoadResult parse_case_text(const std::string& text, const std::string& origin);
LoadResult load_case_file(const std::string& path);

}  // namespace acdcflow::io
