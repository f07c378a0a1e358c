// taskweave: trace, analyze, schedule and execute task-IR programs.
//
// Subcommands mirror the pipeline stages; `pipeline` chains them. Exit code
// 0 on success, 1 on validation failure, 2 on I/O or parse errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "taskweave/bench.hpp"
#include "taskweave/depanalysis.hpp"
#include "taskweave/engine.hpp"
#include "taskweave/interp.hpp"
#include "taskweave/platform.hpp"
#include "taskweave/preprocess.hpp"
#include "taskweave/report.hpp"
#include "taskweave/runtime.hpp"
#include "taskweave/schedgen.hpp"
#include "taskweave/tir_json.hpp"
#include "taskweave/trace.hpp"
#include "taskweave/util.hpp"

namespace fs = std::filesystem;
using namespace taskweave;

namespace {

// Base name with the pipeline's composite extensions stripped.
std::string stem_of(const fs::path& p) {
  std::string name = p.filename().string();
  for (const char* suffix :
       {".flat.tir.json", ".tir.json", ".trace.jsonl", ".profile.json",
        ".dag.json", ".ppar.json", ".plat.json", ".wl.json", ".json",
        ".jsonl"}) {
    std::string s = suffix;
    if (name.size() > s.size() &&
        name.compare(name.size() - s.size(), s.size(), s) == 0)
      return name.substr(0, name.size() - s.size());
  }
  return name;
}

fs::path prep_out(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

std::vector<rt::Policy> parse_policies(const std::string& s) {
  std::vector<rt::Policy> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t c = s.find(',', pos);
    std::string tok =
        c == std::string::npos ? s.substr(pos) : s.substr(pos, c - pos);
    if (!tok.empty()) out.push_back(rt::policy_from_string(tok));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  if (out.empty()) throw rt::EngineError("no scheduler policy given");
  return out;
}

// --- stages ---------------------------------------------------------------

fs::path stage_bench_gen(const std::string& id, const fs::path& out) {
  tir::TirProgram p = tir::build_benchmark_by_id(id);
  fs::path path = out / (id + ".tir.json");
  tir::save_program(p, path.string());
  std::cout << "wrote " << path.string() << '\n';
  return path;
}

struct TraceArtifacts {
  fs::path trace;
  fs::path profile;
};

TraceArtifacts stage_trace(const fs::path& program, const fs::path& out) {
  tir::TirProgram p = tir::load_program(program.string());
  tracer::RunResult r = tracer::interpret_and_trace(p);
  tracer::Profile prof = tracer::profile_program(p);
  TraceArtifacts a;
  a.trace = out / (stem_of(program) + ".trace.jsonl");
  a.profile = out / (stem_of(program) + ".profile.json");
  tracer::write_trace(r.trace, a.trace.string());
  tracer::save_profile(prof, a.profile.string());
  std::cout << "wrote " << a.trace.string() << " (" << r.trace.events.size()
            << " events), " << a.profile.string() << '\n';
  return a;
}

fs::path stage_preprocess(const fs::path& program, const fs::path& profile,
                          const fs::path& out) {
  tir::TirProgram p = tir::load_program(program.string());
  tracer::Profile prof = profile.empty()
                             ? tracer::profile_program(p)
                             : tracer::load_profile(profile.string());
  tir::TirProgram flat = preprocess::flatten(p, prof);
  fs::path path = out / (stem_of(program) + ".flat.tir.json");
  tir::save_program(flat, path.string());
  std::cout << "wrote " << path.string() << " ("
            << flat.functions.at(flat.entry).body.size() << " statements)\n";
  return path;
}

fs::path stage_analyze(const fs::path& trace, const fs::path& out) {
  tracer::Trace t = tracer::read_trace_file(trace.string());
  dep::ControlDag cdag = dep::build_control_dag(t);
  std::vector<dep::NodeTuples> tuples = dep::build_tuple_sets(t, cdag);
  dep::DataDag ddag = dep::build_data_dag(cdag, tuples);
  fs::path path = out / (stem_of(trace) + ".dag.json");
  dep::save_dag(cdag, ddag, path.string());
  fs::path dot = out / (stem_of(trace) + ".dag.dot");
  std::ofstream df(dot);
  if (!df) throw IoError("cannot open " + dot.string() + " for writing");
  df << dep::to_dot(cdag, ddag);
  std::cout << "wrote " << path.string() << " (" << cdag.nodes.size()
            << " nodes, " << ddag.edges.size() << " data edges)\n";
  return path;
}

fs::path stage_schedule(const fs::path& flat, const fs::path& trace,
                        const fs::path& out) {
  tir::TirProgram fp = tir::load_program(flat.string());
  tracer::Trace t = tracer::read_trace_file(trace.string());
  dep::ControlDag cdag = dep::build_control_dag(t);
  std::vector<dep::NodeTuples> tuples = dep::build_tuple_sets(t, cdag);
  dep::DataDag ddag = dep::build_data_dag(cdag, tuples);
  sched::ScheduleDag sd =
      sched::generate_safe_schedule(
          cdag, sched::augment_output_order(cdag, ddag), tuples);
  sched::ParallelProgram pp = sched::emit_parallel_program(fp, sd);
  std::string stem = stem_of(flat);
  if (stem.size() > 5 && stem.compare(stem.size() - 5, 5, ".flat") == 0)
    stem.resize(stem.size() - 5);
  fs::path path = out / (stem + ".ppar.json");
  sched::save_parallel_program(pp, path.string());
  std::size_t par = 0;
  for (const sched::Section& s : pp.sections)
    if (s.kind == sched::RegionKind::Type2) ++par;
  std::cout << "wrote " << path.string() << " (" << pp.sections.size()
            << " sections, " << par << " parallel)\n";
  return path;
}

struct ExecOpts {
  std::string platform;
  std::string sched = "eft";
  std::string engine;  // "run" or "sim"
  bool model_time = false;
  std::uint64_t jitter_ns = 0;
  std::uint64_t seed = 0;
  std::uint64_t type1_cost_ns = 0;
  std::uint32_t count = 1;
  std::uint64_t spacing_ns = 0;
};

std::vector<rt::JobSubmission> make_jobs(const std::string& ppar_path,
                                         const std::string& workload_path,
                                         const ExecOpts& opts) {
  std::vector<rt::JobSubmission> jobs;
  if (!workload_path.empty()) {
    jobs = rt::load_workload(workload_path);
  } else {
    sched::ParallelProgram pp = sched::load_parallel_program(ppar_path);
    for (std::uint32_t i = 0; i < opts.count; ++i)
      jobs.push_back({pp, opts.spacing_ns * i, i});
  }
  return jobs;
}

// Executes one policy over the jobs and writes gantt/stats/svg. `suffix` is
// "" for single-policy runs, "_met" etc. when comparing.
report::RunRecord exec_policy(const std::vector<rt::JobSubmission>& jobs,
                              const rt::Platform& plat, rt::Policy policy,
                              const ExecOpts& opts, const fs::path& out,
                              const std::string& suffix) {
  report::RunRecord rec;
  rec.policy = rt::to_string(policy);
  std::vector<rt::GanttEntry> gantt;
  if (opts.engine == "sim") {
    rec.mode = "virtual";
    std::vector<rt::Job> sim_jobs;
    for (const rt::JobSubmission& j : jobs)
      sim_jobs.push_back({&j.program, j.arrival_ns, j.instance});
    rt::EngineConfig cfg;
    cfg.policy = policy;
    cfg.type1_cost_ns = opts.type1_cost_ns;
    rt::EngineResult res = rt::simulate(sim_jobs, plat, cfg);
    for (const rt::JobSubmission& j : jobs) {
      std::vector<std::uint8_t> bytes =
          rt::replay_assignments(j.program, res.gantt, j.instance);
      rec.output_hashes[j.instance] = fnv1a64(std::string_view(
          reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    }
    rec.stats = std::move(res.stats);
    gantt = std::move(res.gantt);
  } else {
    rec.mode = opts.model_time ? "modeltime" : "wallclock";
    rt::RunConfig cfg;
    cfg.policy = policy;
    cfg.model_time = opts.model_time;
    cfg.jitter_ns = opts.jitter_ns;
    cfg.seed = opts.seed;
    cfg.type1_cost_ns = opts.type1_cost_ns;
    rt::RunResult res = rt::run_workload(jobs, plat, cfg);
    for (const auto& [inst, bytes] : res.outputs)
      rec.output_hashes[inst] = fnv1a64(std::string_view(
          reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    rec.stats = std::move(res.stats);
    gantt = std::move(res.gantt);
  }
  fs::path gpath = out / ("gantt" + suffix + ".csv");
  fs::path spath = out / ("stats" + suffix + ".json");
  fs::path vpath = out / ("gantt" + suffix + ".svg");
  report::write_gantt_csv(gantt, gpath.string());
  report::save_run_record(rec, spath.string());
  std::ofstream svg(vpath);
  if (!svg) throw IoError("cannot open " + vpath.string() + " for writing");
  svg << report::svg_gantt(gantt);
  std::cout << "wrote " << gpath.string() << ", " << spath.string() << ", "
            << vpath.string() << '\n';
  if (log_enabled(LogLevel::Info)) std::cout << report::ascii_gantt(gantt);
  return rec;
}

std::vector<report::RunRecord> stage_exec(const std::string& ppar,
                                          const std::string& workload,
                                          const ExecOpts& opts,
                                          const fs::path& out) {
  rt::Platform plat = rt::load_platform(opts.platform);
  std::vector<rt::JobSubmission> jobs = make_jobs(ppar, workload, opts);
  std::vector<rt::Policy> policies = parse_policies(opts.sched);
  std::vector<report::RunRecord> recs;
  for (rt::Policy p : policies) {
    std::string suffix =
        policies.size() == 1 ? "" : "_" + rt::to_string(p);
    recs.push_back(exec_policy(jobs, plat, p, opts, out, suffix));
  }
  return recs;
}

fs::path stage_report(const std::vector<report::RunRecord>& recs,
                      const fs::path& out) {
  std::string text = report::render_report(recs);
  fs::path path = out / "report.txt";
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  std::cout << text;
  std::cout << "wrote " << path.string() << '\n';
  return path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"task-parallelism extraction and heterogeneous execution"};
  app.require_subcommand(1);

  std::string bench_id, out_dir = ".";
  std::string program, profile, trace, workload;
  ExecOpts opts;
  std::string compare;
  std::vector<std::string> stats_files;

  auto add_out = [&](CLI::App* c) {
    c->add_option("--out", out_dir, "output directory")
        ->capture_default_str();
  };
  auto add_exec = [&](CLI::App* c) {
    c->add_option("--platform", opts.platform, "platform .plat.json")
        ->required();
    c->add_option("--sched", opts.sched,
                  "scheduler policy: met, rr, eft (comma list compares)")
        ->capture_default_str();
    c->add_option("--engine", opts.engine,
                  "execution engine: run or sim (default: per command)")
        ->check(CLI::IsMember({"run", "sim"}));
    c->add_flag("--model-time", opts.model_time,
                "runtime uses the virtual clock for scheduling");
    c->add_option("--jitter", opts.jitter_ns, "max random worker delay, ns");
    c->add_option("--seed", opts.seed, "jitter seed");
    c->add_option("--type1-cost", opts.type1_cost_ns,
                  "modeled cost per serial task, ns");
    c->add_option("--count", opts.count, "instances to submit");
    c->add_option("--spacing", opts.spacing_ns,
                  "arrival gap between instances, ns");
  };

  CLI::App* bench = app.add_subcommand("bench", "benchmark programs");
  CLI::App* bench_list = bench->add_subcommand("list", "list benchmark ids");
  CLI::App* bench_gen =
      bench->add_subcommand("gen", "generate a benchmark .tir.json");
  bench_gen->add_option("--bench", bench_id, "benchmark id")->required();
  add_out(bench_gen);
  bench->require_subcommand(1);

  CLI::App* c_trace =
      app.add_subcommand("trace", "interpret a program, record trace+profile");
  c_trace->add_option("--program", program, "program .tir.json")->required();
  add_out(c_trace);

  CLI::App* c_pre = app.add_subcommand(
      "preprocess", "flatten loops and devirtualize calls");
  c_pre->add_option("--program", program, "program .tir.json")->required();
  c_pre->add_option("--profile", profile,
                    "profile .profile.json (default: profile in-process)");
  add_out(c_pre);

  CLI::App* c_an =
      app.add_subcommand("analyze", "build control/data DAGs from a trace");
  c_an->add_option("--trace", trace, "trace .trace.jsonl")->required();
  add_out(c_an);

  CLI::App* c_sched = app.add_subcommand(
      "schedule", "emit a fork-join parallel program");
  c_sched->add_option("--program", program, "flattened .flat.tir.json")
      ->required();
  c_sched->add_option("--trace", trace, "trace .trace.jsonl")->required();
  add_out(c_sched);

  CLI::App* c_run =
      app.add_subcommand("run", "execute on the concurrent runtime");
  c_run->add_option("--program", program, "parallel program .ppar.json");
  c_run->add_option("--workload", workload, "workload .wl.json");
  add_exec(c_run);
  add_out(c_run);

  CLI::App* c_sim =
      app.add_subcommand("simulate", "execute on the virtual-time simulator");
  c_sim->add_option("--program", program, "parallel program .ppar.json");
  c_sim->add_option("--workload", workload, "workload .wl.json");
  add_exec(c_sim);
  add_out(c_sim);

  CLI::App* c_rep =
      app.add_subcommand("report", "render tables from saved stats");
  c_rep->add_option("--compare", compare,
                    "comma list of policies; reads stats_<p>.json from --out");
  c_rep->add_option("--stats", stats_files, "explicit stats.json files");
  add_out(c_rep);

  CLI::App* c_pipe = app.add_subcommand(
      "pipeline", "bench gen + trace + preprocess + analyze + schedule + "
                  "execute + report");
  c_pipe->add_option("--bench", bench_id, "benchmark id")->required();
  add_exec(c_pipe);
  add_out(c_pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    fs::path out = prep_out(out_dir);
    if (bench_list->parsed()) {
      for (const std::string& id : tir::benchmark_ids()) std::cout << id << '\n';
    } else if (bench_gen->parsed()) {
      stage_bench_gen(bench_id, out);
    } else if (c_trace->parsed()) {
      stage_trace(program, out);
    } else if (c_pre->parsed()) {
      stage_preprocess(program, profile, out);
    } else if (c_an->parsed()) {
      stage_analyze(trace, out);
    } else if (c_sched->parsed()) {
      stage_schedule(program, trace, out);
    } else if (c_run->parsed() || c_sim->parsed()) {
      if (program.empty() == workload.empty())
        throw rt::RuntimeError("give exactly one of --program / --workload");
      if (opts.engine.empty()) opts.engine = c_sim->parsed() ? "sim" : "run";
      stage_exec(program, workload, opts, out);
    } else if (c_rep->parsed()) {
      std::vector<report::RunRecord> recs;
      for (const std::string& f : stats_files)
        recs.push_back(report::load_run_record(f));
      if (!compare.empty()) {
        for (rt::Policy p : parse_policies(compare)) {
          fs::path f = out / ("stats_" + rt::to_string(p) + ".json");
          if (!fs::exists(f)) f = out / "stats.json";
          recs.push_back(report::load_run_record(f.string()));
        }
      }
      if (recs.empty()) throw IoError("report: no stats inputs given");
      stage_report(recs, out);
    } else if (c_pipe->parsed()) {
      if (opts.engine.empty()) opts.engine = "sim";
      fs::path tir_path = stage_bench_gen(bench_id, out);
      TraceArtifacts tr = stage_trace(tir_path, out);
      fs::path flat = stage_preprocess(tir_path, tr.profile, out);
      stage_analyze(tr.trace, out);
      fs::path ppar = stage_schedule(flat, tr.trace, out);
      std::vector<report::RunRecord> recs =
          stage_exec(ppar.string(), "", opts, out);
      stage_report(recs, out);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
