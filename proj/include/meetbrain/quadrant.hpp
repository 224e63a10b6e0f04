#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace meetbrain {

// Valence-arousal quadrant. The first letter pair is arousal, the second
// valence: HALV is high arousal, low valence.
enum class Quadrant { HAHV, HALV, LAHV, LALV };

inline constexpr std::array<Quadrant, 4> kAllQuadrants{
    Quadrant::HAHV, Quadrant::HALV, Quadrant::LAHV, Quadrant::LALV};

constexpr bool high_arousal(Quadrant q) {
  return q == Quadrant::HAHV || q == Quadrant::HALV;
}
constexpr bool high_valence(Quadrant q) {
  return q == Quadrant::HAHV || q == Quadrant::LAHV;
}
constexpr Quadrant make_quadrant(bool arousal_high, bool valence_high) {
  if (arousal_high) return valence_high ? Quadrant::HAHV : Quadrant::HALV;
  return valence_high ? Quadrant::LAHV : Quadrant::LALV;
}
constexpr int index_of(Quadrant q) { return static_cast<int>(q); }

std::string_view to_string(Quadrant q);
std::optional<Quadrant> parse_quadrant(std::string_view s);
// Throws Error(Input) on an unknown name.
Quadrant quadrant_from_string(std::string_view s);

}  // namespace meetbrain
