#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "meetbrain/audio.hpp"
#include "meetbrain/quadrant.hpp"

namespace meetbrain::promptgen {

enum class Slot { ValenceAdjective, ArousalAdjective, Instrumentation, EmotionalTone, Context };
inline constexpr std::size_t kSlotCount = 5;
inline constexpr std::array<Slot, kSlotCount> kAllSlots{
    Slot::ValenceAdjective, Slot::ArousalAdjective, Slot::Instrumentation, Slot::EmotionalTone,
    Slot::Context};

// Key used in lexicon files, e.g. "valence_adjectives".
std::string_view slot_key(Slot s);
// Template marker, e.g. "{valence_adjective}".
std::string_view slot_placeholder(Slot s);

using SlotWords = std::array<std::vector<std::string>, kSlotCount>;

class PromptLexicon {
 public:
  PromptLexicon() = default;
  explicit PromptLexicon(std::map<Quadrant, SlotWords> words) : words_(std::move(words)) {}

  static PromptLexicon from_json(const nlohmann::json& j);
  static PromptLexicon load(const std::filesystem::path& path);
  // The lexicon shipped in data/lexicon.json, compiled in.
  static PromptLexicon builtin();

  nlohmann::json to_json() const;

  const std::vector<std::string>& words(Quadrant q, Slot s) const;
  bool has(Quadrant q) const { return words_.contains(q); }

  // Non-empty slots for q. Throws Error(Config) naming the slot and quadrant.
  void validate(Quadrant q) const;
  // Per-quadrant checks plus disjointness of valence (arousal) adjectives
  // across opposite valence (arousal) polarities.
  void validate() const;

 private:
  std::map<Quadrant, SlotWords> words_;
};

struct PromptSpec {
  Quadrant quadrant = Quadrant::HAHV;
  std::array<std::string, kSlotCount> slot_choices;
  std::string rendered;
  std::int64_t seed_index = 0;

  std::string id() const;
  nlohmann::json to_json() const;  // one manifest line
};

inline constexpr std::string_view kDefaultTemplate =
    "A {valence_adjective} and {arousal_adjective} piece with {instrumentation}, "
    "carrying a {emotional_tone} mood, fit for a {context}.";

// Throws Error(Template) unless every placeholder appears exactly once.
void validate_template(std::string_view tmpl);
std::string render_prompt(const PromptSpec& spec, std::string_view tmpl = kDefaultTemplate);

// Seeded sampling without replacement over the Cartesian product of the
// quadrant's slot lists; repeats only after the product is exhausted.
std::vector<PromptSpec> enumerate_prompts(const PromptLexicon& lexicon, Quadrant quadrant,
                                          std::size_t count, std::uint64_t seed,
                                          std::string_view tmpl = kDefaultTemplate);

// ---- generation backends -------------------------------------------------

class GenerationClient {
 public:
  virtual ~GenerationClient() = default;
  virtual AudioClip generate(const std::string& prompt, double duration_s) = 0;
};

std::string prompt_hash(std::string_view prompt);  // 16 hex digits, FNV-1a 64

// Resolves prompts to <dir>/<prompt_hash>.wav. Read-only use is thread-safe.
class StubGenerationClient final : public GenerationClient {
 public:
  explicit StubGenerationClient(std::filesystem::path dir) : dir_(std::move(dir)) {}
  AudioClip generate(const std::string& prompt, double duration_s) override;
  void register_clip(const std::string& prompt, const AudioClip& clip) const;
  std::filesystem::path path_for(const std::string& prompt) const;

 private:
  std::filesystem::path dir_;
};

// POSTs {"prompt", "duration_s"} as JSON to <base_url><path>; expects WAV bytes.
class HttpGenerationClient final : public GenerationClient {
 public:
  HttpGenerationClient(std::string base_url, std::string path = "/generate",
                       double timeout_s = 600.0)
      : base_url_(std::move(base_url)), path_(std::move(path)), timeout_s_(timeout_s) {}
  AudioClip generate(const std::string& prompt, double duration_s) override;

 private:
  std::string base_url_;
  std::string path_;
  double timeout_s_;
};

// Validates duration, dispatches, and trims audio longer than duration_s.
AudioClip request_generation(const std::string& prompt, double duration_s, GenerationClient& client);

std::vector<AudioClip> request_generation_batch(const std::vector<std::string>& prompts,
                                                double duration_s, GenerationClient& client,
                                                unsigned jobs);

}  // namespace meetbrain::promptgen
