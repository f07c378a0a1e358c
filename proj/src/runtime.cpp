#include "taskweave/runtime.hpp"
#include "taskweave/util.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <set>
#include <thread>
#include <tuple>

#include <json.hpp>

namespace taskweave::rt {

using nlohmann::json;

CounterBarrier::CounterBarrier(std::size_t target) : target_(target) {
  if (target_ == 0) throw RuntimeError("barrier target must be positive");
}

void CounterBarrier::increment() {
  std::lock_guard<std::mutex> lk(mu_);
  if (count_ >= target_)
    throw RuntimeError("barrier increment past target " +
                       std::to_string(target_));
  if (++count_ == target_) cv_.notify_all();
}

void CounterBarrier::wait() {
  std::unique_lock<std::mutex> lk(mu_);
  cv_.wait(lk, [&] { return count_ == target_; });
}

std::size_t CounterBarrier::count() const {
  std::lock_guard<std::mutex> lk(mu_);
  return count_;
}

namespace {

std::size_t pe_pos(const Platform& plat, int id) {
  for (std::size_t i = 0; i < plat.pes.size(); ++i)
    if (plat.pes[i].id == id) return i;
  throw RuntimeError("no PE with id " + std::to_string(id));
}

struct Work {
  const sched::TaskDesc* task = nullptr;
  tir::Arena* arena = nullptr;
  std::uint32_t instance = 0;
  std::uint32_t section = 0;
  CounterBarrier* barrier = nullptr;  // wall mode: incremented on completion
  std::promise<void>* done = nullptr;  // model mode: fulfilled on completion
};

/// Serial executor for one PE: items run in push order, so Gantt entries on
/// one PE never overlap. Kernel errors park in a shared slot (first wins)
/// and completion is still signalled, so hosts cannot deadlock.
class PeWorker {
 public:
  PeWorker(int pe_id, std::uint64_t jitter_ns, std::uint64_t seed,
           std::function<std::uint64_t()> now_fn,
           std::vector<GanttEntry>* gantt, std::mutex* gantt_mu,
           std::exception_ptr* err, std::mutex* err_mu)
      : pe_id_(pe_id),
        jitter_(jitter_ns),
        rng_(seed),
        now_(std::move(now_fn)),
        gantt_(gantt),
        gantt_mu_(gantt_mu),
        err_(err),
        err_mu_(err_mu),
        th_([this] { loop(); }) {}

  ~PeWorker() { stop_and_join(); }

  void push(Work w) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      q_.push_back(w);
    }
    cv_.notify_one();
  }

  // Drains the queue, then exits.
  void stop_and_join() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_one();
    if (th_.joinable()) th_.join();
  }

 private:
  void loop() {
    for (;;) {
      Work w;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return stop_ || !q_.empty(); });
        if (q_.empty()) return;
        w = q_.front();
        q_.pop_front();
      }
      if (jitter_ > 0) {
        rng_ = splitmix64(rng_);
        std::this_thread::sleep_for(std::chrono::nanoseconds(rng_ % jitter_));
      }
      const std::uint64_t s = now_ ? now_() : 0;
      try {
        sched::exec_task_desc(*w.task, *w.arena, nullptr);
      } catch (...) {
        std::lock_guard<std::mutex> el(*err_mu_);
        if (!*err_) *err_ = std::current_exception();
      }
      std::uint64_t e = now_ ? now_() : 0;
      if (e <= s) e = s + 1;  // clock tie; keep end > start
      if (gantt_ != nullptr) {
        std::lock_guard<std::mutex> gl(*gantt_mu_);
        gantt_->push_back({w.instance, w.task->node, w.section,
                           w.task->kernel.time_signature(), pe_id_, s, e});
      }
      if (w.barrier != nullptr) w.barrier->increment();
      if (w.done != nullptr) w.done->set_value();
    }
  }

  const int pe_id_;
  const std::uint64_t jitter_;
  std::uint64_t rng_;
  const std::function<std::uint64_t()> now_;
  std::vector<GanttEntry>* const gantt_;
  std::mutex* const gantt_mu_;
  std::exception_ptr* const err_;
  std::mutex* const err_mu_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Work> q_;
  bool stop_ = false;
  std::thread th_;  // last member: starts after everything else is live
};

void check_jobs(const std::vector<JobSubmission>& jobs) {
  std::uint64_t prev = 0;
  std::set<std::uint32_t> seen;
  for (const auto& j : jobs) {
    if (j.arrival_ns < prev)
      throw RuntimeError("job arrivals must be non-decreasing");
    prev = j.arrival_ns;
    if (!seen.insert(j.instance).second)
      throw RuntimeError("duplicate instance id " +
                         std::to_string(j.instance));
  }
}

/// Model-time: the discrete-event core makes every scheduling decision in
/// virtual time; hooks dispatch the real kernels to the PE workers and gate
/// each virtual Finish on real completion.
RunResult run_model(const std::vector<JobSubmission>& jobs,
                    const Platform& plat, const RunConfig& cfg) {
  RunResult out;
  std::map<std::uint32_t, std::unique_ptr<tir::Arena>> arenas;
  std::vector<Job> vjobs;
  for (const auto& j : jobs) {
    arenas.emplace(j.instance, std::make_unique<tir::Arena>(j.program.buffers));
    out.outputs[j.instance];
    vjobs.push_back({&j.program, j.arrival_ns, j.instance});
  }

  std::exception_ptr err;
  std::mutex err_mu;
  std::deque<std::promise<void>> promises;  // stable addresses
  std::map<std::pair<std::uint32_t, dep::NodeIndex>, std::future<void>> done;
  // declared after the promises: worker threads must join before those die
  std::vector<std::unique_ptr<PeWorker>> workers;
  workers.reserve(plat.pes.size());
  for (std::size_t i = 0; i < plat.pes.size(); ++i)
    workers.push_back(std::make_unique<PeWorker>(
        plat.pes[i].id, cfg.jitter_ns, cfg.seed + i, nullptr, nullptr,
        nullptr, &err, &err_mu));

  EngineHooks hooks;
  hooks.on_start = [&](const Job& job, const sched::TaskDesc& t, int pe,
                       std::uint64_t) {
    promises.emplace_back();
    done[{job.instance, t.node}] = promises.back().get_future();
    Work w;
    w.task = &t;
    w.arena = arenas.at(job.instance).get();
    w.instance = job.instance;
    w.done = &promises.back();
    workers[pe_pos(plat, pe)]->push(w);
  };
  hooks.before_finish = [&](const Job& job, const sched::TaskDesc& t) {
    done.at({job.instance, t.node}).wait();
  };
  hooks.on_serial = [&](const Job& job, const sched::TaskDesc& t) {
    sched::exec_task_desc(t, *arenas.at(job.instance),
                          &out.outputs.at(job.instance));
  };

  EngineConfig ecfg;
  ecfg.policy = cfg.policy;
  ecfg.type1_cost_ns = cfg.type1_cost_ns;
  EngineResult er = run_virtual(vjobs, plat, ecfg, hooks);
  for (auto& w : workers) w->stop_and_join();
  if (err) std::rethrow_exception(err);
  out.gantt = std::move(er.gantt);
  out.stats = std::move(er.stats);
  return out;
}

/// Wall-clock: hosts run serial sections and block on counter barriers;
/// submissions reach the scheduler as sections open, and decisions use
/// measured elapsed time with modeled busy estimates.
RunResult run_wall(const std::vector<JobSubmission>& jobs,
                   const Platform& plat, const RunConfig& cfg) {
  RunResult out;
  std::map<std::uint32_t, std::unique_ptr<tir::Arena>> arenas;
  std::map<std::uint32_t, std::uint64_t> completion;
  for (const auto& j : jobs) {
    arenas.emplace(j.instance, std::make_unique<tir::Arena>(j.program.buffers));
    out.outputs[j.instance];
    completion[j.instance] = 0;
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto now_ns = [t0]() -> std::uint64_t {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - t0)
            .count());
  };

  std::vector<GanttEntry> gantt;
  std::mutex gantt_mu;
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::unique_ptr<PeWorker>> workers;
  workers.reserve(plat.pes.size());
  for (std::size_t i = 0; i < plat.pes.size(); ++i)
    workers.push_back(std::make_unique<PeWorker>(
        plat.pes[i].id, cfg.jitter_ns, cfg.seed + i, now_ns, &gantt,
        &gantt_mu, &err, &err_mu));

  // The manager: ready tasks route through one lock that owns the busy
  // estimates and policy state, so decisions are serialized.
  std::mutex sched_mu;
  std::vector<std::uint64_t> busy(plat.pes.size(), 0);
  SchedulerState st;
  auto submit_section = [&](const sched::Section& sec, std::uint32_t inst,
                            std::uint32_t section_idx, tir::Arena* arena,
                            CounterBarrier* barrier) {
    std::lock_guard<std::mutex> lk(sched_mu);
    const std::uint64_t tnow = now_ns();
    for (const sched::TaskDesc& t : sec.tasks) {
      const Decision d = decide(cfg.policy, plat, t.kernel, busy, tnow, st);
      const std::size_t pos = pe_pos(plat, d.pe);
      busy[pos] = d.end_ns;
      Work w;
      w.task = &t;
      w.arena = arena;
      w.instance = inst;
      w.section = section_idx;
      w.barrier = barrier;
      workers[pos]->push(w);
    }
  };

  std::vector<std::thread> hosts;
  hosts.reserve(jobs.size());
  for (const auto& j : jobs) {
    hosts.emplace_back([&, &j = j] {
      try {
        std::this_thread::sleep_until(
            t0 + std::chrono::nanoseconds(j.arrival_ns));
        tir::Arena& arena = *arenas.at(j.instance);
        std::vector<std::uint8_t>& output = out.outputs.at(j.instance);
        for (std::uint32_t si = 0; si < j.program.sections.size(); ++si) {
          const sched::Section& sec = j.program.sections[si];
          if (sec.kind == sched::RegionKind::Type1) {
            for (const sched::TaskDesc& t : sec.tasks)
              sched::exec_task_desc(t, arena, &output);
            continue;
          }
          if (sec.tasks.empty()) continue;
          CounterBarrier barrier(sec.tasks.size());
          submit_section(sec, j.instance, si, &arena, &barrier);
          barrier.wait();
        }
        completion.at(j.instance) = now_ns();
      } catch (...) {
        std::lock_guard<std::mutex> el(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& h : hosts) h.join();
  for (auto& w : workers) w->stop_and_join();
  if (err) std::rethrow_exception(err);

  std::sort(gantt.begin(), gantt.end(),
            [](const GanttEntry& a, const GanttEntry& b) {
              return std::tie(a.pe, a.start_ns, a.instance, a.node) <
                     std::tie(b.pe, b.start_ns, b.instance, b.node);
            });
  EngineStats& stats = out.stats;
  std::map<std::pair<std::uint32_t, std::uint32_t>, PhaseSpan> phases;
  for (const auto& j : jobs) {
    AppSpan span;
    span.arrival_ns = j.arrival_ns;
    span.completion_ns = completion.at(j.instance);
    span.first_start_ns = span.completion_ns;
    span.last_end_ns = j.arrival_ns;
    stats.app_spans[j.instance] = span;
    stats.makespan_ns = std::max(stats.makespan_ns, span.completion_ns);
    for (const auto& sec : j.program.sections) {
      if (sec.kind != sched::RegionKind::Type2) continue;
      for (const auto& t : sec.tasks)
        stats.serial_tasks_ns += serial_host_time(plat, t.kernel);
    }
  }
  for (const GanttEntry& g : gantt) {
    stats.pe_busy_ns[g.pe] += g.end_ns - g.start_ns;
    AppSpan& span = stats.app_spans.at(g.instance);
    span.first_start_ns = std::min(span.first_start_ns, g.start_ns);
    span.last_end_ns = std::max(span.last_end_ns, g.end_ns);
    PhaseSpan& ph = phases[{g.instance, g.section}];
    if (ph.tasks == 0) {
      ph = {g.instance, g.section, g.start_ns, g.end_ns, 1};
    } else {
      ph.start_ns = std::min(ph.start_ns, g.start_ns);
      ph.end_ns = std::max(ph.end_ns, g.end_ns);
      ++ph.tasks;
    }
  }
  for (auto& [key, ph] : phases) {
    stats.parallel_tasks_ns += ph.end_ns - ph.start_ns;
    stats.phases.push_back(ph);
  }
  // Wall mode runs serial sections at real host speed, so the whole-app serial
  // reference carries no modeled Type-1 term.
  stats.serial_app_ns = stats.serial_tasks_ns;
  out.gantt = std::move(gantt);
  return out;
}

}  // namespace

RunResult run_workload(const std::vector<JobSubmission>& jobs,
                       const Platform& plat, const RunConfig& cfg) {
  validate_platform(plat);
  if (plat.cpu_count() == 0)
    throw RuntimeError("the concurrent runtime requires a CPU core");
  check_jobs(jobs);
  return cfg.model_time ? run_model(jobs, plat, cfg)
                        : run_wall(jobs, plat, cfg);
}

std::vector<std::uint8_t> replay_assignments(const sched::ParallelProgram& pp,
                                             const std::vector<GanttEntry>& gantt,
                                             std::uint32_t instance) {
  std::map<dep::NodeIndex, std::pair<std::uint64_t, int>> key;
  for (const GanttEntry& g : gantt)
    if (g.instance == instance) key[g.node] = {g.start_ns, g.pe};
  tir::Arena arena(pp.buffers);
  std::vector<std::uint8_t> output;
  for (const auto& sec : pp.sections) {
    if (sec.kind == sched::RegionKind::Type1) {
      for (const auto& t : sec.tasks) sched::exec_task_desc(t, arena, &output);
      continue;
    }
    std::vector<const sched::TaskDesc*> order;
    order.reserve(sec.tasks.size());
    for (const auto& t : sec.tasks) {
      if (!key.count(t.node))
        throw RuntimeError("gantt does not cover task node " +
                           std::to_string(t.node));
      order.push_back(&t);
    }
    std::sort(order.begin(), order.end(),
              [&](const sched::TaskDesc* a, const sched::TaskDesc* b) {
                return std::make_tuple(key[a->node].first, key[a->node].second,
                                       a->node) <
                       std::make_tuple(key[b->node].first, key[b->node].second,
                                       b->node);
              });
    for (const auto* t : order) sched::exec_task_desc(*t, arena, &output);
  }
  return output;
}

std::vector<JobSubmission> load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed workload file " + path + ": " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  std::vector<JobSubmission> jobs;
  std::uint64_t prev = 0;
  std::uint32_t inst = 0;
  for (const auto& e : j) {
    std::filesystem::path pp(e.at("program_path").get<std::string>());
    if (pp.is_relative()) pp = dir / pp;
    const std::uint64_t arrival = e.value("arrival_ns", 0ull);
    if (arrival < prev)
      throw RuntimeError("workload arrivals must be non-decreasing");
    prev = arrival;
    const std::uint32_t count = e.value("count", 1u);
    const auto prog = sched::load_parallel_program(pp.string());
    for (std::uint32_t c = 0; c < count; ++c)
      jobs.push_back({prog, arrival, inst++});
  }
  return jobs;
}

void save_workload(const std::vector<WorkloadEntry>& entries,
                   const std::string& path) {
  json j = json::array();
  for (const auto& e : entries)
    j.push_back({{"program_path", e.program_path},
                 {"arrival_ns", e.arrival_ns},
                 {"count", e.count}});
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace taskweave::rt
