#include "cli.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "memroi/analysis.hpp"
#include "memroi/diagnostics.hpp"
#include "memroi/gen.hpp"
#include "memroi/instrument.hpp"
#include "memroi/monitor.hpp"
#include "memroi/pipeline.hpp"
#include "memroi/postprocess.hpp"
#include "memroi/transport.hpp"
#include "memroi/vm.hpp"

namespace memroi {

namespace {

constexpr const char* kVersion = "memroi 0.1.0";

struct Diags {
  bool json = false;
  std::string command;
  std::vector<Diagnostic> items;

  void add(const std::vector<Diagnostic>& ds) {
    for (const auto& d : ds) {
      items.push_back(d);
      if (!json) std::cerr << to_string(d) << "\n";
    }
  }

  void finish(bool ok) const {
    if (!json) return;
    nlohmann::json j;
    j["command"] = command;
    j["ok"] = ok;
    j["diagnostics"] = nlohmann::json::array();
    for (const auto& d : items) {
      const char* sev = d.severity == Severity::Error ? "error" : d.severity == Severity::Warning ? "warning" : "note";
      j["diagnostics"].push_back({{"severity", sev}, {"message", d.message}, {"line", d.line}, {"column", d.column}});
    }
    std::cerr << j.dump() << "\n";
  }
};

void require_distinct(const std::vector<std::pair<std::string, std::string>>& paths) {
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (std::size_t j = i + 1; j < paths.size(); ++j)
      if (!paths[i].second.empty() && paths[i].second == paths[j].second)
        throw Error("--" + paths[i].first + " and --" + paths[j].first + " name the same file " + paths[i].second);
}

std::vector<std::int64_t> parse_inputs(const std::string& s) {
  std::vector<std::int64_t> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error("bad --input value '" + tok + "'");
    }
  }
  return out;
}

struct RunFlags {
  std::string cost = "default";
  std::string threads;
  std::string input;
  bool hw = false;
  std::uint64_t step_limit = 1'000'000'000;

  void add_to(CLI::App* app) {
    app->add_option("--cost", cost, "cost model: default, or key=value overrides separated by commas");
    app->add_option("--threads", threads, "thread spec, e.g. main:1,2;main:3");
    app->add_option("--input", input, "comma-separated arguments for the entry function (single thread)");
    app->add_flag("--hw-counters", hw, "simulate hardware-counter reads at ROI boundaries");
    app->add_option("--step-limit", step_limit, "abort after this many steps");
  }

  RunOptions options() const {
    RunOptions o;
    o.cost = parse_cost_model(cost);
    if (hw) o.cost.hw_counters = true;
    if (!threads.empty() && !input.empty()) throw Error("--threads and --input are mutually exclusive");
    if (!threads.empty()) o.threads = parse_thread_specs(threads);
    if (!input.empty()) o.threads = {ThreadSpec{"", parse_inputs(input)}};
    o.step_limit = step_limit;
    return o;
  }
};

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"memroi: ROI memory-behavior profiler for EIR programs"};
  app.set_version_flag("--version", kVersion);
  Diags diags;
  app.add_flag("--json-diagnostics", diags.json, "print diagnostics as one JSON object on stderr");
  app.require_subcommand(1);

  // instrument
  auto* inst = app.add_subcommand("instrument", "insert counters and write the static mix");
  std::string in_path, out_path, mix_path;
  std::uint64_t period = 1;
  std::vector<std::string> also;
  bool want_analysis = false, no_hoist = false, naive = false;
  inst->add_option("--in", in_path, "input EIR")->required();
  inst->add_option("--out", out_path, "instrumented EIR")->required();
  inst->add_option("--mix", mix_path, "static mix file")->required();
  inst->add_option("--period", period, "sampling period N")->check(CLI::Range(std::uint64_t{1}, UINT64_MAX));
  inst->add_option("--also-instrument", also, "clone this indirect-call target (repeatable)");
  inst->add_flag("--dump-analysis", want_analysis, "print post-dominator trees, loop forests and the counter plan");
  inst->add_flag("--no-hoist", no_hoist, "disable loop hoisting");
  inst->add_flag("--naive", naive, "one counter per block");

  // run
  auto* runc = app.add_subcommand("run", "execute an instrumented module");
  std::string dump_path, monitor_addr;
  RunFlags run_flags;
  runc->add_option("--in", in_path, "instrumented EIR")->required();
  runc->add_option("--dump", dump_path, "counter dump output")->required();
  runc->add_option("--monitor", monitor_addr, "stream snapshots to the monitor at this address");
  run_flags.add_to(runc);

  // report
  auto* rep = app.add_subcommand("report", "post-process a counter dump");
  std::optional<double> cps;
  std::string csv_path;
  double incr_weight = 2.0;
  rep->add_option("--mix", mix_path, "static mix file")->required();
  rep->add_option("--dump", dump_path, "counter dump")->required();
  rep->add_option("--cycles-per-sec", cps, "also report bytes/sec")->check(CLI::PositiveNumber);
  rep->add_option("--csv", csv_path, "write the report as CSV");
  rep->add_option("--incr-weight", incr_weight, "memory accesses per counter increment")->check(CLI::NonNegativeNumber);

  // monitor
  auto* mon = app.add_subcommand("monitor", "listen for one run and record per-epoch bandwidth");
  std::string addr;
  std::uint64_t poll_period = 10000;
  mon->add_option("--addr", addr, "listen address (unix:/path or a path)")->required();
  mon->add_option("--mix", mix_path, "static mix of the monitored module")->required();
  mon->add_option("--period", poll_period, "snapshot period in virtual cycles")
      ->check(CLI::Range(std::uint64_t{1}, UINT64_MAX));
  mon->add_option("--csv", csv_path, "epoch series output")->required();
  mon->add_option("--incr-weight", incr_weight, "memory accesses per counter increment")->check(CLI::NonNegativeNumber);

  // oracle
  auto* orc = app.add_subcommand("oracle", "exact per-ROI event trace of an uninstrumented module");
  RunFlags oracle_flags;
  orc->add_option("--in", in_path, "uninstrumented EIR")->required();
  oracle_flags.add_to(orc);

  // gen
  auto* gen = app.add_subcommand("gen", "print a random terminating program");
  GenOptions gopts;
  std::string profile = "mixed";
  gen->add_option("--seed", gopts.seed, "random seed");
  gen->add_option("--profile", profile, "mixed, loops or cf");
  gen->add_option("--max-blocks", gopts.max_blocks, "block budget")->check(CLI::Range(8, 10000));
  gen->add_option("--max-depth", gopts.max_depth, "loop and branch nesting")->check(CLI::Range(0, 8));
  gen->add_option("--max-rois", gopts.max_rois, "ROIs in @main")->check(CLI::Range(1, 8));
  gen->add_option("--out", out_path, "write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (inst->parsed()) {
      diags.command = "instrument";
      require_distinct({{"in", in_path}, {"out", out_path}, {"mix", mix_path}});
      InstrumentOptions o;
      o.period = period;
      for (auto a : also) {
        if (!a.empty() && a[0] == '@') a.erase(0, 1);
        o.also_instrument.push_back(a);
      }
      o.plan.hoist = !no_hoist;
      o.plan.naive = naive;
      Module m = load_module(in_path);
      InstrumentResult r = instrument_module(m, o);
      diags.add(r.diagnostics);
      if (want_analysis) {
        for (const auto& f : r.normalized.functions) std::cout << dump_analysis(f);
        std::cout << describe_plan(r.plan);
      }
      write_text_file(out_path, print_module(r.instrumented));
      write_text_file(mix_path, write_mix(r.mix));
    } else if (runc->parsed()) {
      diags.command = "run";
      require_distinct({{"in", in_path}, {"dump", dump_path}});
      RunOptions o = run_flags.options();
      Module m = load_module(in_path);
      std::unique_ptr<Channel> ch;
      std::optional<StreamSink> sink;
      if (!monitor_addr.empty()) {
        ch = connect_unix(monitor_addr);
        sink.emplace(*ch);
        o.sink = &*sink;
      }
      RunArtifacts a = run(m, o);
      if (ch) ch->close();
      write_text_file(dump_path, write_dump(a.dump));
      for (std::size_t t = 0; t < a.exit_codes.size(); ++t)
        std::cout << "thread " << t << " exit " << a.exit_codes[t] << " cycles " << a.thread_cycles[t] << "\n";
      std::cout << "total_cycles " << a.total_cycles << " instrumentation_cycles " << a.instrumentation_cycles
                << "\n";
      if (sink && sink->disconnected()) std::cerr << "warning: monitor disconnected during the run\n";
    } else if (rep->parsed()) {
      diags.command = "report";
      require_distinct({{"mix", mix_path}, {"dump", dump_path}, {"csv", csv_path}});
      StaticMix mix = read_mix(read_text_file(mix_path));
      CounterDump dump = read_dump(read_text_file(dump_path));
      ReportConfig cfg;
      cfg.cycles_per_sec = cps;
      cfg.incr_weight = incr_weight;
      ProfileReport r = report(mix, dump, cfg);
      std::cout << r.render_text();
      if (!csv_path.empty()) write_text_file(csv_path, r.render_csv());
    } else if (mon->parsed()) {
      diags.command = "monitor";
      require_distinct({{"mix", mix_path}, {"csv", csv_path}});
      StaticMix mix = read_mix(read_text_file(mix_path));
      UnixListener listener(addr);
      std::cerr << "listening on " << listener.path() << std::endl;
      auto ch = listener.accept();
      MonitorSession s = serve(*ch, poll_period, &mix);
      ReportConfig cfg;
      cfg.incr_weight = incr_weight;
      auto epochs = epoch_stats(s, mix, cfg);
      write_text_file(csv_path, render_epoch_csv(epochs));
      std::cout << "snapshots " << s.snapshots.size() << " epochs "
                << (s.snapshots.empty() ? 0 : s.snapshots.size() - 1) << (s.partial ? " partial" : "") << "\n";
    } else if (orc->parsed()) {
      diags.command = "oracle";
      RunOptions o = oracle_flags.options();
      Module m = load_module(in_path);
      Module baseline = find_rois(m).first;
      ExactProfile p = run_oracle(baseline, o);
      for (std::size_t t = 0; t < p.threads.size(); ++t) {
        const auto& th = p.threads[t];
        std::cout << "thread " << t << " exit " << th.exit_code << " cycles " << th.cycles << "\n";
        for (const auto& [name, trace] : th.rois)
          std::cout << "  roi " << name << " hits " << trace.hits << " cycles " << trace.cycles << "\n    "
                    << describe_tally(trace.events) << "\n";
      }
      std::cout << "total_cycles " << p.total_cycles << "\n";
    } else if (gen->parsed()) {
      diags.command = "gen";
      gopts.profile = parse_profile(profile);
      GenProgram g = generate(gopts);
      std::ostringstream os;
      os << "; memroi gen --seed " << gopts.seed << " --profile " << profile_name(gopts.profile) << "\n";
      os << "; inputs:";
      for (auto v : g.inputs) os << " " << v;
      os << "\n";
      if (!g.also_instrument.empty()) {
        os << "; also-instrument:";
        for (const auto& a : g.also_instrument) os << " @" << a;
        os << "\n";
      }
      os << g.text;
      if (out_path.empty()) std::cout << os.str();
      else write_text_file(out_path, os.str());
    }
  } catch (const Error& e) {
    if (diags.json) {
      diags.items.insert(diags.items.end(), e.diagnostics().begin(), e.diagnostics().end());
    } else {
      for (const auto& d : e.diagnostics()) std::cerr << to_string(d) << "\n";
    }
    diags.finish(false);
    return 1;
  } catch (const std::exception& e) {
    if (diags.json) diags.items.push_back(Diagnostic{Severity::Error, e.what(), 0, 0});
    else std::cerr << "error: " << e.what() << "\n";
    diags.finish(false);
    return 1;
  }
  diags.finish(true);
  return 0;
}

}  // namespace memroi
