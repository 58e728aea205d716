#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "implan/pomdp.hpp"

namespace implan {

struct InterchangeParseError : std::runtime_error {
  InterchangeParseError(int line, const std::string& what);
  int line_number;
};

/// Writes the classic POMDP interchange text format: header lines
/// (discount, values, states, actions, observations, start) followed by
/// sparse T:/O:/R: entries. Values print with 17 significant digits so a
/// round trip is exact. Failure/terminal state sets ride along in comment
/// extension lines.
void export_interchange(const DiscretePomdp& model, std::ostream& out);
std::string export_interchange(const DiscretePomdp& model);

/// Inverse of export_interchange. Throws InterchangeParseError with the
/// offending line number on malformed input.
DiscretePomdp import_interchange(std::istream& in);
DiscretePomdp import_interchange(const std::string& text);

}  // namespace implan
