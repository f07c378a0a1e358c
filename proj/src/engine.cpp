#include "taskweave/engine.hpp"
#include "taskweave/util.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <tuple>

namespace taskweave::rt {

std::string to_string(Policy p) {
  switch (p) {
    case Policy::Met: return "met";
    case Policy::Rr: return "rr";
    case Policy::Eft: return "eft";
  }
  return "eft";
}

Policy policy_from_string(const std::string& s) {
  if (s == "met") return Policy::Met;
  if (s == "rr") return Policy::Rr;
  if (s == "eft") return Policy::Eft;
  throw EngineError("unknown policy: " + s);
}

std::uint64_t modeled_duration(const Platform& plat, const Pe& pe,
                               const tir::KernelSpec& kernel) {
  const auto t = pe.exec_time(kernel);
  if (!t)
    throw EngineError("PE " + std::to_string(pe.id) +
                      " has no exec-time entry for " +
                      kernel.time_signature());
  std::uint64_t dur = pe.dispatch_overhead_ns + *t;
  if (pe.kind == PeKind::Accelerator) dur += plat.transfer_overhead_ns;
  return dur;
}

namespace {

bool schedulable(const Pe& pe, const tir::KernelSpec& k) {
  return pe.supports(k) && pe.exec_time(k).has_value();
}

std::size_t pe_pos(const Platform& plat, int id) {
  for (std::size_t i = 0; i < plat.pes.size(); ++i)
    if (plat.pes[i].id == id) return i;
  throw EngineError("no PE with id " + std::to_string(id));
}

}  // namespace

// Exec time only — a serial host pays no dispatch or transfer.
std::uint64_t serial_host_time(const Platform& plat,
                               const tir::KernelSpec& k) {
  for (const Pe& pe : plat.pes)
    if (pe.kind == PeKind::CpuCore && pe.exec_time(k)) return *pe.exec_time(k);
  for (const Pe& pe : plat.pes)
    if (pe.exec_time(k)) return *pe.exec_time(k);
  return 0;
}

Decision decide(Policy policy, const Platform& plat,
                const tir::KernelSpec& kernel,
                const std::vector<std::uint64_t>& busy_until,
                std::uint64_t now, SchedulerState& st) {
  const auto& pes = plat.pes;
  if (busy_until.size() != pes.size())
    throw EngineError("busy_until size does not match PE count");
  int chosen = -1;
  switch (policy) {
    case Policy::Met: {
      std::uint64_t best = ~0ull;
      for (std::size_t i = 0; i < pes.size(); ++i) {
        if (!schedulable(pes[i], kernel)) continue;
        const std::uint64_t t = *pes[i].exec_time(kernel);
        if (t < best) {
          best = t;
          chosen = static_cast<int>(i);
        }
      }
      break;
    }
    case Policy::Rr: {
      for (std::size_t k = 0; k < pes.size(); ++k) {
        const std::size_t i = (st.rr_cursor + k) % pes.size();
        if (schedulable(pes[i], kernel)) {
          chosen = static_cast<int>(i);
          st.rr_cursor = (i + 1) % pes.size();
          break;
        }
      }
      break;
    }
    case Policy::Eft: {
      std::uint64_t best = ~0ull;
      for (std::size_t i = 0; i < pes.size(); ++i) {
        if (!schedulable(pes[i], kernel)) continue;
        const std::uint64_t fin = std::max(busy_until[i], now) +
                                  modeled_duration(plat, pes[i], kernel);
        if (fin < best) {
          best = fin;
          chosen = static_cast<int>(i);
        }
      }
      break;
    }
  }
  if (chosen < 0)
    throw EngineError("no PE supports kernel " + kernel.time_signature());
  const Pe& pe = pes[static_cast<std::size_t>(chosen)];
  Decision d;
  d.pe = pe.id;
  d.start_ns = std::max(busy_until[static_cast<std::size_t>(chosen)], now);
  d.end_ns = d.start_ns + modeled_duration(plat, pe, kernel);
  return d;
}

namespace {

enum class EvKind : int { Finish = 0, Arrival = 1, Ready = 2, Start = 3 };

struct Event {
  std::uint64_t time = 0;
  EvKind kind = EvKind::Finish;
  std::uint32_t instance = 0;
  dep::NodeIndex node = 0;

  bool operator<(const Event& o) const {
    return std::tie(time, kind, instance, node) <
           std::tie(o.time, o.kind, o.instance, o.node);
  }
};

struct Committed {
  std::size_t pe_pos = 0;
  std::uint64_t start = 0;
  std::uint64_t end = 0;
};

struct InstState {
  Job job;
  std::size_t section = 0;     // currently executing section
  std::size_t remaining = 0;   // unfinished tasks of the open parallel section
  std::uint64_t clock = 0;     // instance-local virtual time
  std::uint64_t completion = 0;
  bool done = false;
  std::map<dep::NodeIndex, const sched::TaskDesc*> task_of;
  std::map<dep::NodeIndex, std::uint32_t> section_of;
  std::map<dep::NodeIndex, Committed> committed;
};

}  // namespace

EngineResult run_virtual(const std::vector<Job>& jobs, const Platform& plat,
                         const EngineConfig& cfg, const EngineHooks& hooks) {
  validate_platform(plat);

  std::map<std::uint32_t, InstState> insts;
  std::multiset<Event> events;
  for (const Job& job : jobs) {
    if (job.program == nullptr) throw EngineError("job without a program");
    if (insts.count(job.instance))
      throw EngineError("duplicate instance id " +
                        std::to_string(job.instance));
    InstState& s = insts[job.instance];
    s.job = job;
    s.clock = job.arrival_ns;
    for (std::uint32_t si = 0; si < job.program->sections.size(); ++si) {
      for (const sched::TaskDesc& t : job.program->sections[si].tasks) {
        s.task_of[t.node] = &t;
        s.section_of[t.node] = si;
      }
    }
    events.insert({job.arrival_ns, EvKind::Arrival, job.instance, 0});
  }

  std::vector<std::uint64_t> busy(plat.pes.size(), 0);
  SchedulerState st;
  std::deque<std::pair<std::uint32_t, dep::NodeIndex>> fifo;
  std::vector<GanttEntry> gantt;
  std::map<std::pair<std::uint32_t, std::uint32_t>, PhaseSpan> phases;
  std::uint64_t serial_tasks = 0;
  std::uint64_t type1_tasks = 0;

  // Runs serial sections and opens the next parallel one; called at arrival
  // and at each barrier release.
  auto advance = [&](InstState& s) {
    const auto& sections = s.job.program->sections;
    while (s.section < sections.size()) {
      const sched::Section& sec = sections[s.section];
      if (sec.kind == sched::RegionKind::Type1) {
        for (const sched::TaskDesc& t : sec.tasks) {
          if (hooks.on_serial) hooks.on_serial(s.job, t);
          s.clock += cfg.type1_cost_ns;
          ++type1_tasks;
        }
        ++s.section;
        continue;
      }
      if (sec.tasks.empty()) {  // defensive; regions are non-empty
        ++s.section;
        continue;
      }
      s.remaining = sec.tasks.size();
      for (const sched::TaskDesc& t : sec.tasks)
        events.insert({s.clock, EvKind::Ready, s.job.instance, t.node});
      return;
    }
    s.done = true;
    s.completion = s.clock;
  };

  while (!events.empty()) {
    const Event ev = *events.begin();
    events.erase(events.begin());
    InstState& s = insts.at(ev.instance);
    switch (ev.kind) {
      case EvKind::Arrival:
        advance(s);
        break;
      case EvKind::Ready: {
        fifo.emplace_back(ev.instance, ev.node);
        while (!fifo.empty()) {
          const auto [inst, node] = fifo.front();
          fifo.pop_front();
          InstState& owner = insts.at(inst);
          const sched::TaskDesc& task = *owner.task_of.at(node);
          const Decision d =
              decide(cfg.policy, plat, task.kernel, busy, ev.time, st);
          const std::size_t pos = pe_pos(plat, d.pe);
          busy[pos] = d.end_ns;
          owner.committed[node] = {pos, d.start_ns, d.end_ns};
          const std::uint32_t section = owner.section_of.at(node);
          gantt.push_back({inst, node, section, task.kernel.time_signature(),
                           d.pe, d.start_ns, d.end_ns});
          serial_tasks += serial_host_time(plat, task.kernel);
          PhaseSpan& ph = phases[{inst, section}];
          if (ph.tasks == 0) {
            ph = {inst, section, d.start_ns, d.end_ns, 1};
          } else {
            ph.start_ns = std::min(ph.start_ns, d.start_ns);
            ph.end_ns = std::max(ph.end_ns, d.end_ns);
            ++ph.tasks;
          }
          events.insert({d.start_ns, EvKind::Start, inst, node});
          events.insert({d.end_ns, EvKind::Finish, inst, node});
        }
        break;
      }
      case EvKind::Start:
        if (hooks.on_start) {
          const Committed& c = s.committed.at(ev.node);
          hooks.on_start(s.job, *s.task_of.at(ev.node),
                         plat.pes[c.pe_pos].id, c.start);
        }
        break;
      case EvKind::Finish: {
        if (hooks.before_finish)
          hooks.before_finish(s.job, *s.task_of.at(ev.node));
        if (s.remaining == 0)
          throw EngineError("finish with no open parallel section");
        if (--s.remaining == 0) {
          s.clock = ev.time;
          ++s.section;
          advance(s);
        }
        break;
      }
    }
  }

  EngineResult r;
  r.stats.serial_tasks_ns = serial_tasks;
  r.stats.serial_app_ns = serial_tasks + type1_tasks * cfg.type1_cost_ns;
  for (auto& [inst, s] : insts) {
    if (!s.done)
      throw EngineError("instance " + std::to_string(inst) +
                        " never completed");
    AppSpan span;
    span.arrival_ns = s.job.arrival_ns;
    span.completion_ns = s.completion;
    span.first_start_ns = s.completion;
    span.last_end_ns = s.job.arrival_ns;
    for (const auto& [node, c] : s.committed) {
      span.first_start_ns = std::min(span.first_start_ns, c.start);
      span.last_end_ns = std::max(span.last_end_ns, c.end);
      r.stats.pe_busy_ns[plat.pes[c.pe_pos].id] += c.end - c.start;
    }
    if (s.committed.empty()) {
      span.first_start_ns = s.job.arrival_ns;
      span.last_end_ns = s.completion;
    }
    r.stats.app_spans[inst] = span;
    r.stats.makespan_ns = std::max(r.stats.makespan_ns, s.completion);
  }
  for (auto& [key, ph] : phases) {
    r.stats.parallel_tasks_ns += ph.end_ns - ph.start_ns;
    r.stats.phases.push_back(ph);
  }
  r.gantt = std::move(gantt);
  std::sort(r.gantt.begin(), r.gantt.end(),
            [](const GanttEntry& a, const GanttEntry& b) {
              return std::tie(a.pe, a.start_ns, a.instance, a.node) <
                     std::tie(b.pe, b.start_ns, b.instance, b.node);
            });
  return r;
}

EngineResult simulate(const std::vector<Job>& jobs, const Platform& plat,
                      const EngineConfig& cfg) {
  return run_virtual(jobs, plat, cfg, {});
}

}  // namespace taskweave::rt
