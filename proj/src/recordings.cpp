#include "meetbrain/recordings.hpp"

#include <algorithm>

#include "meetbrain/csv.hpp"
#include "meetbrain/error.hpp"

namespace meetbrain::recordings {

using namespace sigproc;

namespace {

void check_header(const csv::NumericTable& t, const std::string& expected, const char* what) {
  std::string got;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (i) got += ',';
    got += t.header[i];
  }
  if (got != expected) throw Error(ErrorKind::Schema, std::string(what) + " header mismatch: expected '" + expected + "'");
}

void check_monotone(const std::vector<double>& ts, const char* what) {
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (!(ts[i] > ts[i - 1]))
      throw Error(ErrorKind::Data, std::string(what) + " timestamps not increasing at row " + std::to_string(i + 1));
}

template <class Fn>
std::string format_rows(const std::string& header, std::size_t n, std::size_t cols, Fn value) {
  std::string out = header;
  out += '\n';
  out.reserve(n * cols * 12);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out += ',';
      csv::append_number(out, value(i, c));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string eeg_header() { return "timestamp_ms,fp1_uv,fp2_uv"; }

std::string format_eeg(const EegRecording& rec) {
  rec.validate();
  return format_rows(eeg_header(), rec.size(), 3, [&](std::size_t i, std::size_t c) {
    return c == 0 ? rec.timestamps_ms[i] : rec.channels[c - 1][i];
  });
}

EegRecording parse_eeg(std::string_view text) {
  auto t = csv::parse_numeric(text, 3);
  check_header(t, eeg_header(), "EEG");
  EegRecording rec;
  rec.timestamps_ms = std::move(t.columns[0]);
  rec.channels[0] = std::move(t.columns[1]);
  rec.channels[1] = std::move(t.columns[2]);
  check_monotone(rec.timestamps_ms, "EEG");
  return rec;
}

EegRecording load_eeg(const std::filesystem::path& path) { return parse_eeg(csv::read_file(path)); }
void save_eeg(const std::filesystem::path& path, const EegRecording& rec) { csv::write_file(path, format_eeg(rec)); }

std::string fnirs_header() {
  std::string h = "timestamp_ms";
  for (std::size_t c = 0; c < kFnirsChannels; ++c)
    for (int nm : kWavelengthNm) h += ",ch" + std::to_string(c + 1) + "_" + std::to_string(nm);
  return h;
}

std::string format_fnirs(const FnirsRecording& rec) {
  return format_rows(fnirs_header(), rec.size(), 1 + kFnirsChannels * kWavelengths, [&](std::size_t i, std::size_t c) {
    if (c == 0) return rec.timestamps_ms[i];
    return rec.intensity[(c - 1) / 2][(c - 1) % 2][i];
  });
}

FnirsRecording parse_fnirs(std::string_view text) {
  auto t = csv::parse_numeric(text, 1 + kFnirsChannels * kWavelengths);
  check_header(t, fnirs_header(), "fNIRS");
  FnirsRecording rec;
  rec.timestamps_ms = std::move(t.columns[0]);
  for (std::size_t c = 0; c < kFnirsChannels; ++c)
    for (std::size_t w = 0; w < kWavelengths; ++w) rec.intensity[c][w] = std::move(t.columns[1 + 2 * c + w]);
  check_monotone(rec.timestamps_ms, "fNIRS");
  return rec;
}

FnirsRecording load_fnirs(const std::filesystem::path& path) { return parse_fnirs(csv::read_file(path)); }
void save_fnirs(const std::filesystem::path& path, const FnirsRecording& rec) {
  csv::write_file(path, format_fnirs(rec));
}

EventTimeline load_events(const std::filesystem::path& path) {
  auto tl = EventTimeline::from_jsonl(csv::read_file(path));
  tl.validate();
  return tl;
}

void save_events(const std::filesystem::path& path, const EventTimeline& timeline) {
  csv::write_file(path, timeline.to_jsonl());
}

namespace {

std::string hemo_header() {
  std::string h = "timestamp_ms";
  for (std::size_t c = 0; c < kFnirsChannels; ++c)
    for (const char* k : {"hbo", "hbr", "hbt"}) h += ",ch" + std::to_string(c + 1) + "_" + k;
  return h;
}

std::string ppg_header() {
  std::string h = "timestamp_ms";
  for (std::size_t c = 0; c < kFnirsChannels; ++c) h += ",ch" + std::to_string(c + 1);
  return h;
}

}  // namespace

std::string format_hemo(const HemodynamicSeries& s) {
  return format_rows(hemo_header(), s.size(), 1 + 3 * kFnirsChannels, [&](std::size_t i, std::size_t c) {
    if (c == 0) return s.timestamps_ms[i];
    const auto ch = (c - 1) / 3;
    switch ((c - 1) % 3) {
      case 0: return s.hbo[ch][i];
      case 1: return s.hbr[ch][i];
      default: return s.hbt[ch][i];
    }
  });
}

HemodynamicSeries parse_hemo(std::string_view text) {
  auto t = csv::parse_numeric(text, 1 + 3 * kFnirsChannels);
  check_header(t, hemo_header(), "hemodynamics");
  HemodynamicSeries s;
  s.timestamps_ms = std::move(t.columns[0]);
  for (std::size_t c = 0; c < kFnirsChannels; ++c) {
    s.hbo[c] = std::move(t.columns[1 + 3 * c]);
    s.hbr[c] = std::move(t.columns[2 + 3 * c]);
    s.hbt[c] = std::move(t.columns[3 + 3 * c]);
  }
  return s;
}

std::string format_ppg(const PpgSeries& s) {
  return format_rows(ppg_header(), s.size(), 1 + kFnirsChannels, [&](std::size_t i, std::size_t c) {
    return c == 0 ? s.timestamps_ms[i] : s.channels[c - 1][i];
  });
}

PpgSeries parse_ppg(std::string_view text) {
  auto t = csv::parse_numeric(text, 1 + kFnirsChannels);
  check_header(t, ppg_header(), "PPG");
  PpgSeries s;
  s.timestamps_ms = std::move(t.columns[0]);
  for (std::size_t c = 0; c < kFnirsChannels; ++c) s.channels[c] = std::move(t.columns[1 + c]);
  return s;
}

std::string format_epoch(const EegEpoch& e) {
  return format_rows("sample,fp1_uv,fp2_uv", e.data[0].size(), 3, [&](std::size_t i, std::size_t c) {
    return c == 0 ? static_cast<double>(i) : e.data[c - 1][i];
  });
}

EegEpoch parse_epoch(std::string_view text, const std::string& trial_id, double onset_ms) {
  auto t = csv::parse_numeric(text, 3);
  check_header(t, "sample,fp1_uv,fp2_uv", "epoch");
  EegEpoch e;
  e.trial_id = trial_id;
  e.onset_ms = onset_ms;
  e.data[0] = std::move(t.columns[1]);
  e.data[1] = std::move(t.columns[2]);
  return e;
}

}  // namespace meetbrain::recordings
