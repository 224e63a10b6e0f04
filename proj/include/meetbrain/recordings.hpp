#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "meetbrain/sigproc.hpp"

namespace meetbrain::recordings {

// EEG: timestamp_ms,fp1_uv,fp2_uv
std::string eeg_header();
std::string format_eeg(const sigproc::EegRecording& rec);
sigproc::EegRecording parse_eeg(std::string_view text);
sigproc::EegRecording load_eeg(const std::filesystem::path& path);
void save_eeg(const std::filesystem::path& path, const sigproc::EegRecording& rec);

// fNIRS: timestamp_ms,ch1_735,ch1_850,...,ch8_735,ch8_850
std::string fnirs_header();
std::string format_fnirs(const sigproc::FnirsRecording& rec);
sigproc::FnirsRecording parse_fnirs(std::string_view text);
sigproc::FnirsRecording load_fnirs(const std::filesystem::path& path);
void save_fnirs(const std::filesystem::path& path, const sigproc::FnirsRecording& rec);

sigproc::EventTimeline load_events(const std::filesystem::path& path);
void save_events(const std::filesystem::path& path, const sigproc::EventTimeline& timeline);

// Hemodynamics: timestamp_ms,ch1_hbo,ch1_hbr,ch1_hbt,...
std::string format_hemo(const sigproc::HemodynamicSeries& s);
sigproc::HemodynamicSeries parse_hemo(std::string_view text);

// PPG: timestamp_ms,ch1,...,ch8
std::string format_ppg(const sigproc::PpgSeries& s);
sigproc::PpgSeries parse_ppg(std::string_view text);

// Epoch: sample,fp1_uv,fp2_uv
std::string format_epoch(const sigproc::EegEpoch& e);
sigproc::EegEpoch parse_epoch(std::string_view text, const std::string& trial_id, double onset_ms);

}  // namespace meetbrain::recordings
