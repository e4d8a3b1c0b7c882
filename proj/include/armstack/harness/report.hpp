#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "armstack/trajectory.hpp"

namespace armstack::harness {

struct StepResult {
  int index = 0;
  std::string label;
  std::string arm;
  bool ok = false;
  std::string error;
  double t_start = 0;  // virtual s
  double t_end = 0;
  double peak_margin = 0;        // worst joint torque utilization seen
  double max_tracking_err = 0;   // rad, reference vs encoder
  std::string trajectory_file;   // inside the report dir, empty if none
};

/// Everything one mission or experiment run produced. Serialized as a
/// directory: report.csv (one row per step), meta (key=value lines), one
/// trajectory file per executed motion, plus any extra files. Wall-clock
/// duration is kept in memory only; the files stay byte-stable for a given
/// seed.
struct RunReport {
  std::string world;    // path or name as given
  std::string mission;
  std::uint64_t scenario = 0;  // world digest
  std::uint64_t seed = 0;
  std::string mode = "simulate";
  bool success = false;
  double virtual_duration = 0;  // s
  double wall_seconds = 0;      // not serialized
  std::vector<StepResult> steps;
  // file name (no directory) -> trajectory
  std::vector<std::pair<std::string, trajectory::Trajectory>> trajectories;
  std::map<std::string, std::string> extra;  // extra meta entries
  std::vector<std::pair<std::string, std::string>> files;  // name -> content
};

std::string report_csv(const RunReport& report);
std::string meta_text(const RunReport& report);

/// Creates `dir` if needed and writes report.csv, meta, and all attached
/// files. Existing files with the same names are overwritten.
void write_report(const RunReport& report, const std::string& dir);

/// Reads meta and report.csv back (trajectory files stay on disk).
RunReport read_report(const std::string& dir);

}  // namespace armstack::harness
