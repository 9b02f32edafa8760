// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0
//
// CSV export/ingest of continuous labeled recordings. One file per
// participant, columns: t,ch0..chN,label. Ingest validates a uniform
// sampling grid and segments label runs into windows.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffsim/signal.hpp"

namespace diffsim {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// One participant's continuous recording with a per-sample label track.
struct Recording {
    std::vector<double> t;
    std::vector<std::vector<double>> channels;  ///< [channel][sample]
    std::vector<std::string> labels;            ///< per-sample label name
};

inline void write_recording_csv(const std::filesystem::path& path, const Recording& rec) {
    if (rec.channels.empty()) throw std::invalid_argument("write_recording_csv: no channels");
    const std::size_t n = rec.t.size();
    if (rec.labels.size() != n) throw std::invalid_argument("write_recording_csv: label/time length mismatch");
    for (const auto& ch : rec.channels)
        if (ch.size() != n) throw std::invalid_argument("write_recording_csv: channel/time length mismatch");

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_recording_csv: cannot open " + path.string());
    out << "t";
    for (std::size_t c = 0; c < rec.channels.size(); ++c) out << ",ch" << c;
    out << ",label\n";
    for (std::size_t i = 0; i < n; ++i) {
        out << format_double(rec.t[i]);
        for (const auto& ch : rec.channels) out << ',' << format_double(ch[i]);
        out << ',' << rec.labels[i] << '\n';
    }
    if (!out) throw std::runtime_error("write_recording_csv: write failed for " + path.string());
}

/// Parses one recording CSV. Requires the t,ch0..chN,label header and a
/// uniform time step within tolerance (relative to the nominal step).
inline Recording read_recording_csv(const std::filesystem::path& path,
                                    double nominal_step_s = 0.02, double step_tolerance = 0.01) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_recording_csv: cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_recording_csv: empty file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 3 || header.front() != "t" || header.back() != "label")
        throw std::runtime_error("read_recording_csv: bad header in " + path.string());
    const std::size_t n_channels = header.size() - 2;
    for (std::size_t c = 0; c < n_channels; ++c)
        if (header[c + 1] != "ch" + std::to_string(c))
            throw std::runtime_error("read_recording_csv: bad header in " + path.string());

    Recording rec;
    rec.channels.resize(n_channels);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != header.size())
            throw std::runtime_error("read_recording_csv: line " + std::to_string(line_no) +
                                     " has " + std::to_string(cells.size()) + " fields, expected " +
                                     std::to_string(header.size()));
        try {
            rec.t.push_back(std::stod(cells[0]));
            for (std::size_t c = 0; c < n_channels; ++c)
                rec.channels[c].push_back(std::stod(cells[c + 1]));
        } catch (const std::exception&) {
            throw std::runtime_error("read_recording_csv: non-numeric value at line " +
                                     std::to_string(line_no));
        }
        rec.labels.push_back(cells.back());
    }
    if (rec.t.size() < 2) throw std::runtime_error("read_recording_csv: too few rows in " + path.string());

    for (std::size_t i = 1; i < rec.t.size(); ++i) {
        const double dt = rec.t[i] - rec.t[i - 1];
        if (std::fabs(dt - nominal_step_s) > step_tolerance * nominal_step_s)
            throw std::runtime_error("read_recording_csv: irregular time step at row " +
                                     std::to_string(i + 1) + " (dt=" + format_double(dt) + ")");
    }
    return rec;
}

/// Splits a recording at label changes and windows each run independently,
/// so no window straddles two activities. Runs shorter than one window are
/// dropped. Unknown labels (absent from label_names) are skipped.
inline std::vector<LabeledWindow> segment_recording(const Recording& rec,
                                                    const std::vector<std::string>& label_names,
                                                    const SlidingWindowConfig& win,
                                                    int participant, double sample_rate_hz) {
    win.validate();
    std::map<std::string, int> label_index;
    for (std::size_t i = 0; i < label_names.size(); ++i)
        label_index[label_names[i]] = static_cast<int>(i);

    std::vector<LabeledWindow> out;
    std::size_t run_start = 0;
    const std::size_t n = rec.labels.size();
    for (std::size_t i = 1; i <= n; ++i) {
        if (i < n && rec.labels[i] == rec.labels[run_start]) continue;
        const std::size_t run_len = i - run_start;
        auto it = label_index.find(rec.labels[run_start]);
        if (it != label_index.end() && run_len >= static_cast<std::size_t>(win.width)) {
            std::vector<std::vector<double>> chunk;
            chunk.reserve(rec.channels.size());
            for (const auto& ch : rec.channels)
                chunk.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(run_start),
                                   ch.begin() + static_cast<std::ptrdiff_t>(i));
            for (auto& tw : slide_windows(chunk, win, sample_rate_hz)) {
                LabeledWindow lw;
                lw.window = std::move(tw);
                lw.label = {rec.labels[run_start], it->second};
                lw.participant = {participant};
                out.push_back(std::move(lw));
            }
        }
        run_start = i;
    }
    return out;
}

/// Loads a directory of participant_<id>.csv files into one Dataset.
inline Dataset load_csv_dataset(const std::filesystem::path& dir,
                                const std::vector<std::string>& label_names,
                                const SlidingWindowConfig& win, double sample_rate_hz = 50.0,
                                double nominal_step_s = 0.02, double step_tolerance = 0.01) {
    Dataset ds;
    ds.label_names = label_names;
    ds.channels = 0;

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.starts_with("participant_") && name.ends_with(".csv"))
            files.push_back(entry.path());
    }
    if (files.empty()) throw std::runtime_error("load_csv_dataset: no participant_*.csv in " + dir.string());
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        const std::string stem = path.stem().string();
        int pid = 0;
        try {
            pid = std::stoi(stem.substr(std::string("participant_").size()));
        } catch (const std::exception&) {
            throw std::runtime_error("load_csv_dataset: cannot parse participant id from " +
                                     path.filename().string());
        }
        const Recording rec = read_recording_csv(path, nominal_step_s, step_tolerance);
        if (ds.channels == 0)
            ds.channels = static_cast<int>(rec.channels.size());
        else if (ds.channels != static_cast<int>(rec.channels.size()))
            throw std::runtime_error("load_csv_dataset: channel count mismatch in " +
                                     path.filename().string());
        for (auto& lw : segment_recording(rec, label_names, win, pid, sample_rate_hz))
            ds.windows.push_back(std::move(lw));
    }
    ds.validate();
    return ds;
}

/// Writes one participant's portion of a synthetic dataset back to CSV as a
/// continuous recording (class runs concatenated on a uniform grid).
inline void write_participant_csv(const std::filesystem::path& path,
                                  const std::vector<std::vector<std::vector<double>>>& class_signals,
                                  const std::vector<std::string>& class_names,
                                  double sample_rate_hz) {
    if (class_signals.size() != class_names.size())
        throw std::invalid_argument("write_participant_csv: class count mismatch");
    if (class_signals.empty()) throw std::invalid_argument("write_participant_csv: no classes");

    Recording rec;
    rec.channels.resize(class_signals.front().size());
    const double dt = 1.0 / sample_rate_hz;
    std::size_t sample = 0;
    for (std::size_t ci = 0; ci < class_signals.size(); ++ci) {
        const auto& sig = class_signals[ci];
        if (sig.size() != rec.channels.size())
            throw std::invalid_argument("write_participant_csv: channel count mismatch");
        const std::size_t n = sig.front().size();
        for (std::size_t i = 0; i < n; ++i) {
            rec.t.push_back(static_cast<double>(sample) * dt);
            for (std::size_t c = 0; c < sig.size(); ++c) rec.channels[c].push_back(sig[c][i]);
            rec.labels.push_back(class_names[ci]);
            ++sample;
        }
    }
    write_recording_csv(path, rec);
}

}  // namespace diffsim
