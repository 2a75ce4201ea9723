// Command-line driver for the neural error mitigation pipeline.
#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <thread>

#include "nem/exact.hpp"
#include "nem/pipeline.hpp"

namespace {

using nem::Json;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON configuration file");
  cmd->add_option("--seed", o.seed, "Root random seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--override", o.overrides, "Set a configuration key, e.g. vmc.iterations=100")->take_all();
}

nem::PipelineConfig resolve(const CommonOptions& o) {
  auto overrides = o.overrides;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  auto cfg = o.config.empty() ? nem::make_config(Json::object(), overrides) : nem::load_config(o.config, overrides);
  if (!o.out.empty()) cfg.out = o.out;
  return cfg;
}

fs::path out_dir(const nem::PipelineConfig& cfg) {
  const fs::path dir = cfg.out.empty() ? fs::path("nem-out") : fs::path(cfg.out);
  fs::create_directories(dir / "traces");
  return dir;
}

void write_json(const fs::path& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw nem::ConfigError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw nem::ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw nem::ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

Json metrics_json(const nem::StageMetrics& m) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return {{"stage", m.stage},
          {"energy", num(m.energy)},
          {"energy_error", num(m.energy_error)},
          {"infidelity", num(m.infidelity)},
          {"order_parameter", num(m.order_parameter)},
          {"renyi2", num(m.renyi2)},
          {"purity", num(m.purity)}};
}

void print_stages(const nem::PipelineReport& r) {
  std::cout << std::left << std::setw(8) << "stage" << std::right << std::setw(14) << "energy" << std::setw(14)
            << "error" << std::setw(12) << "infidelity" << std::setw(10) << "order" << std::setw(10) << "S2"
            << std::setw(10) << "purity" << '\n';
  for (const auto& s : r.stages)
    std::cout << std::left << std::setw(8) << s.stage << std::right << std::setprecision(6) << std::setw(14) << s.energy
              << std::setw(14) << s.energy_error << std::setw(12) << s.infidelity << std::setw(10) << s.order_parameter
              << std::setw(10) << s.renyi2 << std::setw(10) << s.purity << '\n';
  if (!r.ok()) std::cerr << "stage '" << *r.failure_stage << "' failed: " << r.failure_message << '\n';
}

int cmd_exact(const CommonOptions& o) {
  const auto cfg = resolve(o);
  const auto h = nem::problem_hamiltonian(cfg);
  const auto ref = nem::exact_reference(cfg, h);
  if (!ref.available) throw nem::CapabilityError("exact solution is limited to 16 qubits");
  const Json doc = {{"n_qubits", h.n_qubits()},
                    {"energy", ref.energy},
                    {"order_parameter", ref.order_parameter},
                    {"renyi2", ref.renyi2},
                    {"config_hash", nem::config_hash(cfg)}};
  std::cout << doc.dump(2) << '\n';
  if (!o.out.empty() || !cfg.out.empty()) write_json(out_dir(cfg) / "exact.json", doc);
  return 0;
}

int cmd_vqe(const CommonOptions& o) {
  const auto cfg = resolve(o);
  const auto dir = out_dir(cfg);
  const auto h = nem::problem_hamiltonian(cfg);
  const auto ref = nem::exact_reference(cfg, h);
  const auto vqe = nem::run_vqe(cfg, h);
  nem::write_spsa_trace_csv(vqe.trace, (dir / "traces" / "vqe.csv").string());
  const auto m = nem::state_stage_metrics("vqe", nem::prepare_vqe_state(cfg, vqe.theta), h, ref, cfg.renyi_partition);
  write_json(dir / "vqe.json", {{"theta", vqe.theta}, {"a0", vqe.a0}, {"metrics", metrics_json(m)}, {"config", cfg.document}});
  std::cout << metrics_json(m).dump(2) << '\n';
  return 0;
}

int cmd_sample(const CommonOptions& o, const std::string& in) {
  const auto cfg = resolve(o);
  const auto dir = out_dir(cfg);
  const fs::path source = in.empty() ? dir : fs::path(in);
  const auto theta = read_json(source / "vqe.json").at("theta").get<std::vector<double>>();
  const auto data = nem::sample_dataset(cfg, nem::prepare_vqe_state(cfg, theta));
  nem::save_dataset(data, dir / "dataset.txt");
  std::cout << data.basis_count() << " bases, " << data.total_shots() << " shots -> " << (dir / "dataset.txt").string()
            << '\n';
  return 0;
}

int cmd_nqst(const CommonOptions& o, const std::string& dataset) {
  const auto cfg = resolve(o);
  const auto dir = out_dir(cfg);
  const auto data = nem::load_dataset(dataset.empty() ? dir / "dataset.txt" : fs::path(dataset));
  const auto result = nem::run_nqst(cfg, nem::initial_nqs(cfg), data);
  nem::save_checkpoint(result.params, dir / "nqst.ckpt");
  {
    std::ofstream out(dir / "traces" / "nqst.csv");
    out << "epoch,train_loss,validation_loss\n" << std::setprecision(17);
    for (const auto& e : result.trace) out << e.epoch << ',' << e.train_loss << ',' << e.validation_loss << '\n';
  }
  const auto h = nem::problem_hamiltonian(cfg);
  const auto m = nem::nqs_stage_metrics("nqst", result.params, h, nem::exact_reference(cfg, h), cfg.renyi_partition, cfg.seed);
  write_json(dir / "nqst.json", {{"best_epoch", result.best_epoch}, {"metrics", metrics_json(m)}});
  std::cout << metrics_json(m).dump(2) << '\n';
  return 0;
}

int cmd_vmc(const CommonOptions& o, const std::string& checkpoint) {
  const auto cfg = resolve(o);
  const auto dir = out_dir(cfg);
  const auto init = checkpoint.empty() ? nem::load_checkpoint(dir / "nqst.ckpt") : nem::load_checkpoint(checkpoint);
  const auto h = nem::problem_hamiltonian(cfg);
  nem::VmcResult result;
  try {
    result = nem::run_vmc(cfg, init, h);
  } catch (const nem::VmcAborted& e) {
    nem::write_vmc_trace_csv(e.trace(), dir / "traces" / "vmc.csv");
    throw;
  }
  nem::write_vmc_trace_csv(result.trace, dir / "traces" / "vmc.csv");
  nem::save_checkpoint(result.params, dir / "vmc.ckpt");
  const auto m = nem::nqs_stage_metrics("vmc", result.params, h, nem::exact_reference(cfg, h), cfg.renyi_partition, cfg.seed);
  write_json(dir / "vmc.json", {{"metrics", metrics_json(m)}});
  std::cout << metrics_json(m).dump(2) << '\n';
  return 0;
}

int cmd_run(const CommonOptions& o, bool standalone) {
  const auto cfg = resolve(o);
  const auto dir = out_dir(cfg);
  const auto report = standalone ? nem::run_standalone_vmc(cfg) : nem::run_pipeline(cfg);
  nem::emit_report(report, dir);
  print_stages(report);
  std::cout << "report written to " << dir.string() << '\n';
  return report.ok() ? 0 : kExitNumerical;
}

// "1,2,5" or "1-10" or a mix.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      const auto dash = item.find('-');
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(item));
      } else {
        const auto lo = std::stoull(item.substr(0, dash)), hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw nem::ConfigError("empty seed range " + item);
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    }
  } catch (const std::logic_error&) {
    throw nem::ConfigError("cannot parse seed list '" + text + "'");
  }
  if (seeds.empty()) throw nem::ConfigError("no seeds given");
  return seeds;
}

using Row = std::pair<std::string, nem::PipelineReport>;  // (group label, report)

void write_summary(const std::vector<Row>& rows, std::ostream& out) {
  std::map<std::tuple<std::string, std::string, std::string>, std::map<std::string, std::vector<double>>> groups;
  for (const auto& [label, r] : rows)
    for (const auto& s : r.stages) {
      auto& g = groups[{label, r.mode, s.stage}];
      g["energy"].push_back(s.energy);
      g["abs_energy_error"].push_back(std::abs(s.energy_error));
      g["infidelity"].push_back(s.infidelity);
      g["order_parameter"].push_back(s.order_parameter);
      g["renyi2"].push_back(s.renyi2);
      g["purity"].push_back(s.purity);
    }
  out << "group,mode,stage,metric,count,median,q1,q3\n" << std::setprecision(10);
  for (const auto& [key, metrics] : groups)
    for (const auto& [name, values] : metrics) {
      const auto s = nem::summarize(values);
      out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << name << ',' << s.count
          << ',' << s.median << ',' << s.q1 << ',' << s.q3 << '\n';
    }
}

int cmd_sweep(const CommonOptions& o, const std::string& seed_text, const std::string& vary, bool standalone, int jobs) {
  const auto seeds = parse_seeds(seed_text);
  std::string key;
  std::vector<std::string> values{""};
  if (!vary.empty()) {
    const auto eq = vary.find('=');
    if (eq == std::string::npos) throw nem::ConfigError("--vary must look like key=v1,v2,...");
    key = vary.substr(0, eq);
    values.clear();
    std::stringstream ss(vary.substr(eq + 1));
    for (std::string v; std::getline(ss, v, ',');) values.push_back(v);
  }
  struct Job {
    std::string label;
    nem::PipelineConfig cfg;
    bool standalone;
    fs::path dir;
  };
  const fs::path root = o.out.empty() ? fs::path("nem-sweep") : fs::path(o.out);
  std::vector<Job> work;
  for (const auto& v : values)
    for (auto seed : seeds) {
      CommonOptions jo = o;
      jo.seed = seed;
      if (!key.empty()) jo.overrides.push_back(key + "=" + v);
      const std::string label = key.empty() ? "all" : key + "=" + v;
      const auto cfg = resolve(jo);
      const fs::path base = root / (key.empty() ? fs::path("") : fs::path(label)) / ("seed-" + std::to_string(seed));
      work.push_back({label, cfg, false, base / "nem"});
      if (standalone) work.push_back({label, cfg, true, base / "standalone"});
    }

  std::vector<std::optional<nem::PipelineReport>> results(work.size());
  std::atomic<std::size_t> next{0};
  std::mutex log;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < work.size();) {
      const auto& job = work[i];
      auto report = job.standalone ? nem::run_standalone_vmc(job.cfg) : nem::run_pipeline(job.cfg);
      nem::emit_report(report, job.dir);
      std::lock_guard lock(log);
      std::cout << job.dir.string() << (report.ok() ? " ok" : " FAILED: " + report.failure_message) << '\n';
      results[i] = std::move(report);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::vector<Row> rows;
  bool all_ok = true;
  for (std::size_t i = 0; i < work.size(); ++i) {
    all_ok = all_ok && results[i]->ok();
    rows.emplace_back(work[i].label, *results[i]);
  }
  fs::create_directories(root);
  {
    std::ofstream out(root / "summary.csv");
    write_summary(rows, out);
  }
  if (standalone) {
    std::ofstream out(root / "paired.csv");
    out << "group,seed,nem_infidelity,standalone_infidelity,nem_abs_energy_error,standalone_abs_energy_error\n"
        << std::setprecision(10);
    for (std::size_t i = 0; i + 1 < work.size(); i += 2) {
      const auto* a = results[i]->stage("vmc");
      const auto* b = results[i + 1]->stage("vmc");
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out << work[i].label << ',' << results[i]->seed << ',' << (a ? a->infidelity : nan) << ','
          << (b ? b->infidelity : nan) << ',' << (a ? std::abs(a->energy_error) : nan) << ','
          << (b ? std::abs(b->energy_error) : nan) << '\n';
    }
  }
  write_summary(rows, std::cout);
  return all_ok ? 0 : kExitNumerical;
}

int cmd_report(const std::vector<std::string>& paths, const std::string& out) {
  std::vector<Row> rows;
  for (const auto& p : paths) {
    if (fs::is_regular_file(p) || fs::exists(fs::path(p) / "report.json")) {
      rows.emplace_back(p, nem::load_report(p));
      continue;
    }
    if (!fs::is_directory(p)) throw nem::ConfigError("no report found at " + p);
    std::vector<fs::path> found;
    for (const auto& e : fs::recursive_directory_iterator(p))
      if (e.path().filename() == "report.json") found.push_back(e.path());
    std::sort(found.begin(), found.end());
    for (const auto& f : found) rows.emplace_back(p, nem::load_report(f));
  }
  if (rows.empty()) throw nem::ConfigError("no reports found");
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream file(fs::path(out) / "summary.csv");
    write_summary(rows, file);
  }
  write_summary(rows, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural error mitigation of variational quantum states"};
  app.require_subcommand(1);

  CommonOptions o;
  std::string in, dataset, checkpoint, seeds = "1-5", vary, report_out;
  std::vector<std::string> report_paths;
  bool standalone = false;
  int jobs = 1;

  auto* exact = app.add_subcommand("exact", "Exact ground state of the configured problem");
  auto* vqe = app.add_subcommand("vqe", "Run the noisy VQE and write vqe.json");
  auto* sample = app.add_subcommand("sample", "Sample tomography data from the VQE state");
  auto* nqst = app.add_subcommand("nqst", "Train the NQS on a measurement dataset");
  auto* vmc = app.add_subcommand("vmc", "Refine an NQS checkpoint with VMC");
  auto* pipeline = app.add_subcommand("pipeline", "VQE, tomography and VMC end to end");
  auto* standalone_vmc = app.add_subcommand("standalone-vmc", "VMC from a random NQS");
  auto* sweep = app.add_subcommand("sweep", "Run a configuration over many seeds");
  auto* report = app.add_subcommand("report", "Summarize existing reports");
  for (auto* cmd : {exact, vqe, sample, nqst, vmc, pipeline, standalone_vmc, sweep}) add_common(cmd, o);
  sample->add_option("--in", in, "Directory holding vqe.json (defaults to --out)");
  nqst->add_option("--dataset", dataset, "Dataset file (defaults to <out>/dataset.txt)");
  vmc->add_option("--checkpoint", checkpoint, "Initial NQS checkpoint (defaults to <out>/nqst.ckpt)");
  sweep->add_option("--seeds", seeds, "Seeds, e.g. 1-5 or 1,4,9");
  sweep->add_option("--vary", vary, "One key with comma-separated values, e.g. problem.mass=-1.4,-0.7,0");
  sweep->add_flag("--standalone", standalone, "Also run standalone VMC for every seed");
  sweep->add_option("--jobs", jobs, "Parallel workers");
  report->add_option("paths", report_paths, "Report directories or files")->required();
  report->add_option("--out", report_out, "Directory for summary.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*exact) return cmd_exact(o);
    if (*vqe) return cmd_vqe(o);
    if (*sample) return cmd_sample(o, in);
    if (*nqst) return cmd_nqst(o, dataset);
    if (*vmc) return cmd_vmc(o, checkpoint);
    if (*pipeline) return cmd_run(o, false);
    if (*standalone_vmc) return cmd_run(o, true);
    if (*sweep) return cmd_sweep(o, seeds, vary, standalone, jobs);
    if (*report) return cmd_report(report_paths, report_out);
  } catch (const nem::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const nem::Error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
