#include "meetbrain/error.hpp"
#include "meetbrain/quadrant.hpp"

#include <string>

namespace meetbrain {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Template: return "template";
    case ErrorKind::Input: return "input";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Statistics: return "statistics";
    case ErrorKind::Timeline: return "timeline";
    case ErrorKind::Data: return "data";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::OutOfWindow: return "out_of_window";
    case ErrorKind::Consistency: return "consistency";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Planning: return "planning";
    case ErrorKind::DegenerateModel: return "degenerate_model";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::HAHV: return "HAHV";
    case Quadrant::HALV: return "HALV";
    case Quadrant::LAHV: return "LAHV";
    case Quadrant::LALV: return "LALV";
  }
  return "?";
}

std::optional<Quadrant> parse_quadrant(std::string_view s) {
  for (auto q : kAllQuadrants)
    if (to_string(q) == s) return q;
  return std::nullopt;
}

Quadrant quadrant_from_string(std::string_view s) {
  if (auto q = parse_quadrant(s)) return *q;
  throw Error(ErrorKind::Input, "unknown quadrant '" + std::string(s) + "'");
}

}  // namespace meetbrain
