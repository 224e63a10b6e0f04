#include "meetbrain/promptgen.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>

#include "meetbrain/error.hpp"
#include "meetbrain/parallel.hpp"
#include "meetbrain_lexicon_data.hpp"

namespace meetbrain::promptgen {

std::string_view slot_key(Slot s) {
  switch (s) {
    case Slot::ValenceAdjective: return "valence_adjectives";
    case Slot::ArousalAdjective: return "arousal_adjectives";
    case Slot::Instrumentation: return "instrumentation_styles";
    case Slot::EmotionalTone: return "emotional_tones";
    case Slot::Context: return "contexts";
  }
  return "";
}

std::string_view slot_placeholder(Slot s) {
  switch (s) {
    case Slot::ValenceAdjective: return "{valence_adjective}";
    case Slot::ArousalAdjective: return "{arousal_adjective}";
    case Slot::Instrumentation: return "{instrumentation}";
    case Slot::EmotionalTone: return "{emotional_tone}";
    case Slot::Context: return "{context}";
  }
  return "";
}

PromptLexicon PromptLexicon::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "lexicon must be a JSON object keyed by quadrant");
  std::map<Quadrant, SlotWords> words;
  for (auto& [key, slots] : j.items()) {
    const auto q = parse_quadrant(key);
    if (!q) throw Error(ErrorKind::Config, "lexicon has unknown quadrant key '" + key + "'");
    SlotWords sw;
    for (auto s : kAllSlots) {
      const std::string k(slot_key(s));
      if (slots.contains(k)) sw[static_cast<std::size_t>(s)] = slots.at(k).get<std::vector<std::string>>();
    }
    words.emplace(*q, std::move(sw));
  }
  return PromptLexicon(std::move(words));
}

PromptLexicon PromptLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open lexicon " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, "malformed lexicon " + path.string() + ": " + e.what());
  }
}

PromptLexicon PromptLexicon::builtin() { return from_json(nlohmann::json::parse(kBuiltinLexiconJson)); }

nlohmann::json PromptLexicon::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (auto& [q, sw] : words_)
    for (auto s : kAllSlots) j[std::string(to_string(q))][std::string(slot_key(s))] = sw[static_cast<std::size_t>(s)];
  return j;
}

const std::vector<std::string>& PromptLexicon::words(Quadrant q, Slot s) const {
  auto it = words_.find(q);
  if (it == words_.end())
    throw Error(ErrorKind::Config, "lexicon has no entry for quadrant " + std::string(to_string(q)));
  return it->second[static_cast<std::size_t>(s)];
}

void PromptLexicon::validate(Quadrant q) const {
  for (auto s : kAllSlots)
    if (words(q, s).empty())
      throw Error(ErrorKind::Config, "empty slot '" + std::string(slot_key(s)) + "' for quadrant " +
                                         std::string(to_string(q)));
}

void PromptLexicon::validate() const {
  for (auto& [q, _] : words_) validate(q);
  auto check_disjoint = [&](Slot slot, bool (*polarity)(Quadrant)) {
    std::set<std::string> hi, lo;
    for (auto& [q, sw] : words_)
      for (auto& w : sw[static_cast<std::size_t>(slot)]) (polarity(q) ? hi : lo).insert(w);
    for (auto& w : hi)
      if (lo.contains(w))
        throw Error(ErrorKind::Config, "word '" + w + "' appears in " + std::string(slot_key(slot)) +
                                           " of both polarities");
  };
  check_disjoint(Slot::ValenceAdjective, [](Quadrant q) { return high_valence(q); });
  check_disjoint(Slot::ArousalAdjective, [](Quadrant q) { return high_arousal(q); });
}

std::string PromptSpec::id() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04lld", std::string(to_string(quadrant)).c_str(),
                static_cast<long long>(seed_index));
  return buf;
}

nlohmann::json PromptSpec::to_json() const {
  nlohmann::json slots = nlohmann::json::object();
  for (auto s : kAllSlots) slots[std::string(slot_key(s))] = slot_choices[static_cast<std::size_t>(s)];
  return {{"id", id()},
          {"quadrant", to_string(quadrant)},
          {"rendered", rendered},
          {"slot_choices", slots},
          {"seed_index", seed_index}};
}

void validate_template(std::string_view tmpl) {
  for (auto s : kAllSlots) {
    const auto ph = slot_placeholder(s);
    const auto first = tmpl.find(ph);
    if (first == std::string_view::npos)
      throw Error(ErrorKind::Template, "template is missing placeholder " + std::string(ph));
    if (tmpl.find(ph, first + 1) != std::string_view::npos)
      throw Error(ErrorKind::Template, "template repeats placeholder " + std::string(ph));
  }
}

std::string render_prompt(const PromptSpec& spec, std::string_view tmpl) {
  validate_template(tmpl);
  // Single left-to-right pass so slot words containing braces are left alone.
  std::string out;
  out.reserve(tmpl.size() + 64);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    bool replaced = false;
    if (tmpl[pos] == '{') {
      for (auto s : kAllSlots) {
        const auto ph = slot_placeholder(s);
        if (tmpl.substr(pos, ph.size()) == ph) {
          out += spec.slot_choices[static_cast<std::size_t>(s)];
          pos += ph.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[pos++];
  }
  return out;
}

namespace {

// splitmix64, used both to derive per-quadrant streams and as the generator.
struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  // Uniform in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do v = next();
    while (v >= limit);
    return v % n;
  }
};

}  // namespace

std::vector<PromptSpec> enumerate_prompts(const PromptLexicon& lexicon, Quadrant quadrant,
                                          std::size_t count, std::uint64_t seed,
                                          std::string_view tmpl) {
  if (count == 0) throw Error(ErrorKind::Input, "prompt count must be at least 1");
  lexicon.validate(quadrant);
  validate_template(tmpl);

  std::array<std::uint64_t, kSlotCount> radix{};
  std::uint64_t product = 1;
  for (auto s : kAllSlots) {
    radix[static_cast<std::size_t>(s)] = lexicon.words(quadrant, s).size();
    product *= radix[static_cast<std::size_t>(s)];
  }

  SplitMix64 rng{seed ^ (0xA5A5A5A5ull * (static_cast<std::uint64_t>(index_of(quadrant)) + 1))};
  // Sparse Fisher-Yates over [0, product): only touched positions are stored.
  std::unordered_map<std::uint64_t, std::uint64_t> swapped;
  auto at = [&](std::uint64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };

  std::vector<PromptSpec> out;
  out.reserve(count);
  std::uint64_t cursor = 0;
  for (std::size_t n = 0; n < count; ++n) {
    if (cursor == product) {  // exhausted: start a fresh permutation
      swapped.clear();
      cursor = 0;
    }
    const std::uint64_t j = cursor + rng.below(product - cursor);
    const std::uint64_t pick = at(j);
    swapped[j] = at(cursor);
    swapped[cursor] = pick;
    ++cursor;

    PromptSpec spec;
    spec.quadrant = quadrant;
    spec.seed_index = static_cast<std::int64_t>(n);
    std::uint64_t rem = pick;
    for (auto s : kAllSlots) {
      const auto k = static_cast<std::size_t>(s);
      spec.slot_choices[k] = lexicon.words(quadrant, s)[rem % radix[k]];
      rem /= radix[k];
    }
    spec.rendered = render_prompt(spec, tmpl);
    out.push_back(std::move(spec));
  }
  return out;
}

std::string prompt_hash(std::string_view prompt) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : prompt) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path StubGenerationClient::path_for(const std::string& prompt) const {
  return dir_ / (prompt_hash(prompt) + ".wav");
}

AudioClip StubGenerationClient::generate(const std::string& prompt, double) {
  const auto path = path_for(prompt);
  if (!std::filesystem::exists(path))
    throw Error(ErrorKind::NotFound, "no registered clip for prompt (hash " + prompt_hash(prompt) + ")");
  return read_wav(path);
}

void StubGenerationClient::register_clip(const std::string& prompt, const AudioClip& clip) const {
  std::filesystem::create_directories(dir_);
  write_wav(path_for(prompt), clip, WavEncoding::Float32);
}

AudioClip HttpGenerationClient::generate(const std::string& prompt, double duration_s) {
  httplib::Client cli(base_url_);
  const auto secs = static_cast<time_t>(timeout_s_);
  cli.set_read_timeout(secs, 0);
  cli.set_write_timeout(secs, 0);
  cli.set_connection_timeout(10, 0);
  const nlohmann::json body = {{"prompt", prompt}, {"duration_s", duration_s}};
  auto res = cli.Post(path_, body.dump(), "application/json");
  if (!res)
    throw Error(ErrorKind::Transport,
                "generation backend unavailable: " + httplib::to_string(res.error()), true);
  if (res->status == 404) throw Error(ErrorKind::NotFound, "generation backend returned 404");
  if (res->status >= 500)
    throw Error(ErrorKind::Transport, "generation backend error " + std::to_string(res->status), true);
  if (res->status != 200)
    throw Error(ErrorKind::Transport, "generation backend rejected request: " + std::to_string(res->status));
  const auto* p = reinterpret_cast<const std::uint8_t*>(res->body.data());
  return decode_wav({p, res->body.size()});
}

AudioClip request_generation(const std::string& prompt, double duration_s, GenerationClient& client) {
  if (!(duration_s > 0)) throw Error(ErrorKind::Input, "duration must be positive");
  AudioClip clip = client.generate(prompt, duration_s);
  const auto want = static_cast<std::size_t>(std::llround(duration_s * clip.sample_rate));
  if (clip.samples.size() > want) clip.samples.resize(want);
  return clip;
}

std::vector<AudioClip> request_generation_batch(const std::vector<std::string>& prompts,
                                                double duration_s, GenerationClient& client,
                                                unsigned jobs) {
  std::vector<AudioClip> out(prompts.size());
  parallel_for(prompts.size(), jobs,
               [&](std::size_t i) { out[i] = request_generation(prompts[i], duration_s, client); });
  return out;
}

}  // namespace meetbrain::promptgen
