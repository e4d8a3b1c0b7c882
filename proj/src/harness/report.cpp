#include "armstack/harness/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace armstack::harness {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Keeps the CSV single-line and comma-free without quoting rules.
std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string report_csv(const RunReport& report) {
  std::string out =
      "step,label,arm,ok,error,t_start,t_end,peak_margin,"
      "max_tracking_err,trajectory_file\n";
  for (const StepResult& s : report.steps) {
    out += std::to_string(s.index) + "," + csv_safe(s.label) + "," +
           csv_safe(s.arm) + "," + (s.ok ? "1" : "0") + "," +
           csv_safe(s.error) + "," + num(s.t_start) + "," + num(s.t_end) +
           "," + num(s.peak_margin) + "," + num(s.max_tracking_err) + "," +
           csv_safe(s.trajectory_file) + "\n";
  }
  return out;
}

std::string meta_text(const RunReport& report) {
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(report.scenario));
  std::map<std::string, std::string> entries = report.extra;
  entries["world"] = report.world;
  entries["mission"] = report.mission;
  entries["scenario"] = hash;
  entries["seed"] = std::to_string(report.seed);
  entries["mode"] = report.mode;
  entries["success"] = report.success ? "1" : "0";
  entries["steps"] = std::to_string(report.steps.size());
  entries["virtual_duration"] = num(report.virtual_duration);
  std::string out;
  for (const auto& [k, v] : entries) out += k + "=" + v + "\n";
  return out;
}

void write_report(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_file(fs::path(dir) / "report.csv", report_csv(report));
  write_file(fs::path(dir) / "meta", meta_text(report));
  for (const auto& [name, traj] : report.trajectories)
    write_file(fs::path(dir) / name, trajectory::serialize(traj));
  for (const auto& [name, content] : report.files)
    write_file(fs::path(dir) / name, content);
}

RunReport read_report(const std::string& dir) {
  namespace fs = std::filesystem;
  RunReport report;

  const std::string meta = read_file(fs::path(dir) / "meta");
  std::istringstream lines(meta);
  std::string line;
  while (std::getline(lines, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "world") {
      report.world = value;
    } else if (key == "mission") {
      report.mission = value;
    } else if (key == "scenario") {
      report.scenario = std::stoull(value, nullptr, 16);
    } else if (key == "seed") {
      report.seed = std::stoull(value);
    } else if (key == "mode") {
      report.mode = value;
    } else if (key == "success") {
      report.success = value == "1";
    } else if (key == "virtual_duration") {
      report.virtual_duration = std::stod(value);
    } else if (key != "steps") {
      report.extra[key] = value;
    }
  }

  std::istringstream rows(read_file(fs::path(dir) / "report.csv"));
  bool header = true;
  while (std::getline(rows, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 10)
      throw std::runtime_error(dir + "/report.csv: malformed row: " + line);
    StepResult s;
    s.index = std::stoi(f[0]);
    s.label = f[1];
    s.arm = f[2];
    s.ok = f[3] == "1";
    s.error = f[4];
    s.t_start = std::stod(f[5]);
    s.t_end = std::stod(f[6]);
    s.peak_margin = std::stod(f[7]);
    s.max_tracking_err = std::stod(f[8]);
    s.trajectory_file = f[9];
    report.steps.push_back(std::move(s));
  }
  return report;
}

}  // namespace armstack::harness
