#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "nem/hash.hpp"
#include "nem/pipeline.hpp"

namespace nem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return kNaN;
  return j.at(key).get<double>();
}

std::string dataset_text(const MeasurementDataset& data) {
  std::ostringstream out;
  out << data.n_qubits << '\n';
  for (const auto& r : data.records) out << r.basis << ' ' << r.outcome << ' ' << r.count << '\n';
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

Json report_to_json(const PipelineReport& report) {
  Json doc;
  doc["mode"] = report.mode;
  doc["seed"] = report.seed;
  doc["config_hash"] = report.config_hash;
  doc["config"] = report.config;
  doc["exact"] = {{"available", report.exact.available},
                  {"energy", report.exact.available ? number(report.exact.energy) : Json(nullptr)},
                  {"order_parameter", report.exact.available ? number(report.exact.order_parameter) : Json(nullptr)},
                  {"renyi2", report.exact.available ? number(report.exact.renyi2) : Json(nullptr)}};
  Json stages = Json::array();
  for (const auto& s : report.stages)
    stages.push_back({{"stage", s.stage},
                      {"energy", number(s.energy)},
                      {"energy_standard_error", number(s.energy_standard_error)},
                      {"energy_error", number(s.energy_error)},
                      {"infidelity", number(s.infidelity)},
                      {"order_parameter", number(s.order_parameter)},
                      {"renyi2", number(s.renyi2)},
                      {"purity", number(s.purity)}});
  doc["stages"] = std::move(stages);
  doc["failure"] = report.failure_stage
                       ? Json{{"stage", *report.failure_stage}, {"message", report.failure_message}}
                       : Json(nullptr);
  doc["vqe_theta"] = report.vqe_theta;

  auto hashes = report.artifact_hashes;
  if (report.dataset) hashes["dataset"] = short_hash(dataset_text(*report.dataset));
  if (report.nqst_params) hashes["nqst_params"] = short_hash(report.nqst_params->values);
  if (report.vmc_params) hashes["vmc_params"] = short_hash(report.vmc_params->values);
  doc["artifacts"] = hashes;
  doc["trace_lengths"] = {{"vqe", report.vqe_trace.size()},
                          {"nqst", report.nqst_trace.size()},
                          {"vmc", report.vmc_trace.size()}};
  return doc;
}

PipelineReport report_from_json(const Json& doc) {
  PipelineReport r;
  try {
    r.mode = doc.at("mode").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.config_hash = doc.at("config_hash").get<std::string>();
    r.config = doc.at("config");
    const Json& ex = doc.at("exact");
    r.exact.available = ex.at("available").get<bool>();
    r.exact.energy = number_from(ex, "energy");
    r.exact.order_parameter = number_from(ex, "order_parameter");
    r.exact.renyi2 = number_from(ex, "renyi2");
    for (const auto& s : doc.at("stages")) {
      StageMetrics m;
      m.stage = s.at("stage").get<std::string>();
      m.energy = number_from(s, "energy");
      m.energy_standard_error = number_from(s, "energy_standard_error");
      m.energy_error = number_from(s, "energy_error");
      m.infidelity = number_from(s, "infidelity");
      m.order_parameter = number_from(s, "order_parameter");
      m.renyi2 = number_from(s, "renyi2");
      m.purity = number_from(s, "purity");
      r.stages.push_back(m);
    }
    if (!doc.at("failure").is_null()) {
      r.failure_stage = doc["failure"].at("stage").get<std::string>();
      r.failure_message = doc["failure"].at("message").get<std::string>();
    }
    r.vqe_theta = doc.at("vqe_theta").get<std::vector<double>>();
    r.artifact_hashes = doc.at("artifacts").get<std::map<std::string, std::string>>();
    // Traces live in CSV files; only their lengths are kept here.
    const Json& lengths = doc.at("trace_lengths");
    r.vqe_trace.resize(lengths.at("vqe").get<std::size_t>());
    r.nqst_trace.resize(lengths.at("nqst").get<std::size_t>());
    r.vmc_trace.resize(lengths.at("vmc").get<std::size_t>());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return r;
}

void write_metrics_csv(const std::vector<StageMetrics>& stages, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << kMetricsCsvHeader << '\n' << std::setprecision(17);
  for (const auto& s : stages)
    out << s.stage << ',' << s.energy << ',' << s.energy_standard_error << ',' << s.energy_error << ',' << s.infidelity
        << ',' << s.order_parameter << ',' << s.renyi2 << ',' << s.purity << '\n';
}

void emit_report(const PipelineReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "traces", ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_metrics_csv(report.stages, dir / "metrics.csv");

  if (!report.vqe_trace.empty()) write_spsa_trace_csv(report.vqe_trace, (dir / "traces" / "vqe.csv").string());
  if (!report.nqst_trace.empty()) {
    std::ofstream out(dir / "traces" / "nqst.csv");
    out << "epoch,train_loss,validation_loss\n" << std::setprecision(17);
    for (const auto& e : report.nqst_trace) out << e.epoch << ',' << e.train_loss << ',' << e.validation_loss << '\n';
  }
  if (!report.vmc_trace.empty()) write_vmc_trace_csv(report.vmc_trace, dir / "traces" / "vmc.csv");
  if (report.dataset) save_dataset(*report.dataset, dir / "dataset.txt");
  if (report.nqst_params) save_checkpoint(*report.nqst_params, dir / "nqst.ckpt");
  if (report.vmc_params) save_checkpoint(*report.vmc_params, dir / "vmc.ckpt");

  Json timings = report.timings;
  write_text(dir / "timings.json", timings.dump(2) + "\n");
}

PipelineReport load_report(const std::filesystem::path& dir) {
  const auto path = std::filesystem::is_directory(dir) ? dir / "report.json" : dir;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("report is not valid JSON: ") + e.what());
  }
  PipelineReport r = report_from_json(doc);
  const auto base = path.parent_path();
  if (std::filesystem::exists(base / "nqst.ckpt")) r.nqst_params = load_checkpoint(base / "nqst.ckpt");
  if (std::filesystem::exists(base / "vmc.ckpt")) r.vmc_params = load_checkpoint(base / "vmc.ckpt");
  return r;
}

Summary summarize(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  Summary s;
  s.count = values.size();
  if (values.empty()) {
    s.median = s.q1 = s.q3 = kNaN;
    return s;
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, n - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  s.median = quantile(0.5);
  if (n == 10) {
    s.q1 = values[2];
    s.q3 = values[7];
  } else {
    s.q1 = quantile(0.25);
    s.q3 = quantile(0.75);
  }
  return s;
}

}  // namespace nem
