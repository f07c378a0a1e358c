#include "taskweave/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "taskweave/util.hpp"

namespace taskweave::report {

using nlohmann::json;

void write_gantt_csv(const std::vector<rt::GanttEntry>& gantt,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "instance,node,kernel,pe,start_ns,end_ns\n";
  for (const rt::GanttEntry& g : gantt)
    out << g.instance << ',' << g.node << ',' << g.kernel << ',' << g.pe << ','
        << g.start_ns << ',' << g.end_ns << '\n';
}

std::vector<rt::GanttEntry> read_gantt_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "instance,node,kernel,pe,start_ns,end_ns")
    throw IoError(path + ": missing gantt header");
  std::vector<rt::GanttEntry> gantt;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (int i = 0; i < 5; ++i) {
      std::size_t c = line.find(',', pos);
      if (c == std::string::npos) throw IoError(path + ": malformed row: " + line);
      f.push_back(line.substr(pos, c - pos));
      pos = c + 1;
    }
    f.push_back(line.substr(pos));
    rt::GanttEntry g;
    g.instance = static_cast<std::uint32_t>(std::stoul(f[0]));
    g.node = static_cast<std::uint32_t>(std::stoul(f[1]));
    g.kernel = f[2];
    g.pe = std::stoi(f[3]);
    g.start_ns = std::stoull(f[4]);
    g.end_ns = std::stoull(f[5]);
    gantt.push_back(std::move(g));
  }
  return gantt;
}

void save_run_record(const RunRecord& rec, const std::string& path) {
  json j;
  j["mode"] = rec.mode;
  j["policy"] = rec.policy;
  j["makespan_ns"] = rec.stats.makespan_ns;
  j["serial_tasks_ns"] = rec.stats.serial_tasks_ns;
  j["parallel_tasks_ns"] = rec.stats.parallel_tasks_ns;
  j["serial_app_ns"] = rec.stats.serial_app_ns;
  json spans = json::array();
  for (const auto& [inst, s] : rec.stats.app_spans)
    spans.push_back({{"instance", inst},
                     {"arrival_ns", s.arrival_ns},
                     {"first_start_ns", s.first_start_ns},
                     {"last_end_ns", s.last_end_ns},
                     {"completion_ns", s.completion_ns}});
  j["app_spans"] = std::move(spans);
  json busy = json::array();
  for (const auto& [pe, ns] : rec.stats.pe_busy_ns) {
    double util = rec.stats.makespan_ns
                      ? double(ns) / double(rec.stats.makespan_ns)
                      : 0.0;
    busy.push_back({{"pe", pe}, {"busy_ns", ns}, {"utilization", util}});
  }
  j["pe_busy"] = std::move(busy);
  json phases = json::array();
  for (const rt::PhaseSpan& p : rec.stats.phases)
    phases.push_back({{"instance", p.instance},
                      {"section", p.section},
                      {"start_ns", p.start_ns},
                      {"end_ns", p.end_ns},
                      {"tasks", p.tasks}});
  j["phases"] = std::move(phases);
  json hashes = json::object();
  for (const auto& [inst, h] : rec.output_hashes)
    hashes[std::to_string(inst)] = to_hex(h);
  j["output_hashes"] = std::move(hashes);

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

RunRecord load_run_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  RunRecord rec;
  rec.mode = j.at("mode").get<std::string>();
  rec.policy = j.at("policy").get<std::string>();
  rec.stats.makespan_ns = j.at("makespan_ns").get<std::uint64_t>();
  rec.stats.serial_tasks_ns = j.at("serial_tasks_ns").get<std::uint64_t>();
  rec.stats.parallel_tasks_ns = j.at("parallel_tasks_ns").get<std::uint64_t>();
  rec.stats.serial_app_ns = j.value("serial_app_ns", rec.stats.serial_tasks_ns);
  for (const json& s : j.at("app_spans")) {
    rt::AppSpan a;
    a.arrival_ns = s.at("arrival_ns").get<std::uint64_t>();
    a.first_start_ns = s.at("first_start_ns").get<std::uint64_t>();
    a.last_end_ns = s.at("last_end_ns").get<std::uint64_t>();
    a.completion_ns = s.at("completion_ns").get<std::uint64_t>();
    rec.stats.app_spans[s.at("instance").get<std::uint32_t>()] = a;
  }
  for (const json& b : j.at("pe_busy"))
    rec.stats.pe_busy_ns[b.at("pe").get<int>()] =
        b.at("busy_ns").get<std::uint64_t>();
  for (const json& p : j.at("phases")) {
    rt::PhaseSpan ph;
    ph.instance = p.at("instance").get<std::uint32_t>();
    ph.section = p.at("section").get<std::size_t>();
    ph.start_ns = p.at("start_ns").get<std::uint64_t>();
    ph.end_ns = p.at("end_ns").get<std::uint64_t>();
    ph.tasks = p.at("tasks").get<std::size_t>();
    rec.stats.phases.push_back(ph);
  }
  if (j.contains("output_hashes"))
    for (auto it = j["output_hashes"].begin(); it != j["output_hashes"].end(); ++it)
      rec.output_hashes[static_cast<std::uint32_t>(std::stoul(it.key()))] =
          std::stoull(it.value().get<std::string>(), nullptr, 16);
  return rec;
}

Reduction compute_reduction(const rt::EngineStats& s) {
  Reduction r;
  if (s.serial_app_ns)
    r.whole_app_pct = 100.0 * (double(s.serial_app_ns) - double(s.makespan_ns)) /
                      double(s.serial_app_ns);
  if (s.serial_tasks_ns)
    r.tasks_only_pct = 100.0 *
                       (double(s.serial_tasks_ns) - double(s.parallel_tasks_ns)) /
                       double(s.serial_tasks_ns);
  return r;
}

std::string ascii_gantt(const std::vector<rt::GanttEntry>& gantt,
                        std::size_t width) {
  if (gantt.empty()) return "(empty gantt)\n";
  std::uint64_t t0 = gantt.front().start_ns, t1 = 0;
  std::vector<int> pes;
  for (const rt::GanttEntry& g : gantt) {
    t0 = std::min(t0, g.start_ns);
    t1 = std::max(t1, g.end_ns);
    if (std::find(pes.begin(), pes.end(), g.pe) == pes.end()) pes.push_back(g.pe);
  }
  std::sort(pes.begin(), pes.end());
  if (width < 8) width = 8;
  const double span = double(t1 - t0 ? t1 - t0 : 1);
  std::ostringstream out;
  for (int pe : pes) {
    std::string lane(width, '.');
    for (const rt::GanttEntry& g : gantt) {
      if (g.pe != pe) continue;
      auto col = [&](std::uint64_t t) {
        return std::min(width - 1,
                        std::size_t(double(t - t0) / span * double(width)));
      };
      char c = char('0' + g.instance % 10);
      for (std::size_t i = col(g.start_ns); i <= col(g.end_ns > g.start_ns
                                                         ? g.end_ns - 1
                                                         : g.start_ns);
           ++i)
        lane[i] = c;
    }
    out << "pe " << std::setw(3) << pe << " |" << lane << "|\n";
  }
  out << "        " << t0 << " ns .. " << t1 << " ns\n";
  return out.str();
}

std::string svg_gantt(const std::vector<rt::GanttEntry>& gantt) {
  static const char* kPalette[10] = {
      "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
      "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd"};
  const int lane_h = 28, lane_gap = 6, left = 70, top = 24;
  const double plot_w = 960.0;

  std::uint64_t t0 = gantt.empty() ? 0 : gantt.front().start_ns, t1 = 1;
  std::vector<int> pes;
  for (const rt::GanttEntry& g : gantt) {
    t0 = std::min(t0, g.start_ns);
    t1 = std::max(t1, g.end_ns);
    if (std::find(pes.begin(), pes.end(), g.pe) == pes.end()) pes.push_back(g.pe);
  }
  std::sort(pes.begin(), pes.end());
  const double span = double(t1 > t0 ? t1 - t0 : 1);
  const int h = top + int(pes.size()) * (lane_h + lane_gap) + 40;
  const int w = left + int(plot_w) + 20;

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
    << "\" height=\"" << h << "\" font-family=\"monospace\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < pes.size(); ++i) {
    int y = top + int(i) * (lane_h + lane_gap);
    s << "<text x=\"4\" y=\"" << y + lane_h / 2 + 4 << "\">pe " << pes[i]
      << "</text>\n";
    s << "<rect x=\"" << left << "\" y=\"" << y << "\" width=\"" << plot_w
      << "\" height=\"" << lane_h << "\" fill=\"#f2f2f2\"/>\n";
  }
  for (const rt::GanttEntry& g : gantt) {
    std::size_t lane =
        std::size_t(std::find(pes.begin(), pes.end(), g.pe) - pes.begin());
    double x = left + double(g.start_ns - t0) / span * plot_w;
    double gw = double(g.end_ns - g.start_ns) / span * plot_w;
    if (gw < 1.0) gw = 1.0;
    int y = top + int(lane) * (lane_h + lane_gap);
    s << "<rect x=\"" << x << "\" y=\"" << y + 2 << "\" width=\"" << gw
      << "\" height=\"" << lane_h - 4 << "\" fill=\"" << kPalette[g.instance % 10]
      << "\" stroke=\"#333\" stroke-width=\"0.5\"><title>inst " << g.instance
      << " node " << g.node << ' ' << g.kernel << " [" << g.start_ns << ", "
      << g.end_ns << "] ns</title></rect>\n";
  }
  int axis_y = top + int(pes.size()) * (lane_h + lane_gap) + 12;
  for (int i = 0; i <= 4; ++i) {
    double x = left + plot_w * i / 4.0;
    std::uint64_t t = t0 + std::uint64_t(span * i / 4.0);
    s << "<text x=\"" << x << "\" y=\"" << axis_y
      << "\" text-anchor=\"middle\">" << t << "</text>\n";
  }
  s << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << axis_y + 16
    << "\" text-anchor=\"middle\">time (ns)</text>\n";
  s << "</svg>\n";
  return s.str();
}

namespace {

std::string fmt_ns(std::uint64_t ns) {
  std::ostringstream s;
  s << ns;
  return s.str();
}

std::string fmt_pct(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", p);
  return buf;
}

}  // namespace

std::string makespan_table(const std::vector<RunRecord>& runs) {
  std::uint64_t best = 0;
  for (const RunRecord& r : runs)
    best = best ? std::min(best, r.stats.makespan_ns) : r.stats.makespan_ns;
  std::ostringstream out;
  out << std::left << std::setw(8) << "policy" << std::setw(10) << "mode"
      << std::right << std::setw(16) << "makespan_ns" << std::setw(12)
      << "vs best" << '\n';
  for (const RunRecord& r : runs) {
    double ratio =
        best ? double(r.stats.makespan_ns) / double(best) : 1.0;
    char rbuf[32];
    std::snprintf(rbuf, sizeof rbuf, "%.2fx", ratio);
    out << std::left << std::setw(8) << r.policy << std::setw(10) << r.mode
        << std::right << std::setw(16) << fmt_ns(r.stats.makespan_ns)
        << std::setw(12) << rbuf << '\n';
  }
  return out.str();
}

std::string reduction_table(const std::vector<RunRecord>& runs) {
  std::ostringstream out;
  out << std::left << std::setw(8) << "policy" << std::setw(10) << "mode"
      << std::right << std::setw(14) << "whole-app" << std::setw(14)
      << "tasks-only" << '\n';
  for (const RunRecord& r : runs) {
    Reduction red = compute_reduction(r.stats);
    out << std::left << std::setw(8) << r.policy << std::setw(10) << r.mode
        << std::right << std::setw(14) << fmt_pct(red.whole_app_pct)
        << std::setw(14) << fmt_pct(red.tasks_only_pct) << '\n';
  }
  return out.str();
}

std::string render_report(const std::vector<RunRecord>& runs) {
  std::ostringstream out;
  for (const RunRecord& r : runs) {
    Reduction red = compute_reduction(r.stats);
    out << "== " << r.policy << " (" << r.mode << ") ==\n"
        << "  makespan:          " << r.stats.makespan_ns << " ns\n"
        << "  serial reference:  " << r.stats.serial_app_ns << " ns whole-app, "
        << r.stats.serial_tasks_ns << " ns tasks-only\n"
        << "  parallel tasks:    " << r.stats.parallel_tasks_ns << " ns\n"
        << "  reduction:         " << fmt_pct(red.whole_app_pct)
        << " whole-app, " << fmt_pct(red.tasks_only_pct) << " tasks-only\n"
        << "  instances:         " << r.stats.app_spans.size() << ", phases: "
        << r.stats.phases.size() << '\n';
    std::size_t shown = 0;
    for (const rt::PhaseSpan& p : r.stats.phases) {
      if (shown++ == 12) {
        out << "    ...\n";
        break;
      }
      out << "    inst " << p.instance << " section " << p.section << ": "
          << p.tasks << "-way [" << p.start_ns << ", " << p.end_ns << "] ns\n";
    }
    if (!r.output_hashes.empty()) {
      out << "  output hashes:    ";
      for (const auto& [inst, hash] : r.output_hashes)
        out << ' ' << inst << ':' << to_hex(hash);
      out << '\n';
    }
  }
  if (runs.size() > 1)
    out << "\nmakespan comparison\n"
        << makespan_table(runs) << "\nreduction comparison\n"
        << reduction_table(runs);
  return out.str();
}

}  // namespace taskweave::report
