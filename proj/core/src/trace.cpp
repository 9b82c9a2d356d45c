#include "hsmc/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "hsmc/errors.hpp"

namespace hsmc {

namespace {

using nlohmann::json;

void append_double(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void append_array(std::string& out, const std::vector<double>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    append_double(out, v[i]);
  }
  out += ']';
}

void append_nested(std::string& out, const std::vector<std::vector<double>>& vv) {
  out += '[';
  for (std::size_t i = 0; i < vv.size(); ++i) {
    if (i) out += ',';
    append_array(out, vv[i]);
  }
  out += ']';
}

double double_or_nan(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

}  // namespace

double RunTrace::evidence_estimate(int t) const {
  if (t == 0) return 0.0;
  if (t < 0 || t > static_cast<int>(records.size())) {
    throw std::out_of_range("evidence_estimate: iteration out of range");
  }
  return records[static_cast<std::size_t>(t - 1)].log_evidence;
}

std::string trace_to_json(const RunTrace& trace) {
  std::string out;
  out.reserve(1024 + trace.records.size() * 160);
  out += "{\"schema_version\":\"";
  out += RunTrace::kSchemaVersion;
  out += "\",\"settings\":{";
  out += "\"model\":\"" + trace.settings.model_id + "\"";
  out += ",\"n_particles\":" + std::to_string(trace.settings.n_particles);
  out += ",\"n_iterations\":" + std::to_string(trace.settings.n_iterations);
  out += ",\"seed\":" + std::to_string(trace.settings.seed);
  out += ",\"theta_star\":";
  append_double(out, trace.settings.theta_star);
  out += ",\"schedule\":{\"mode\":\"" + trace.settings.schedule_mode + "\",\"alpha1\":";
  append_double(out, trace.settings.alpha1);
  out += ",\"ess_target_fraction\":";
  append_double(out, trace.settings.ess_target_fraction);
  out += "},\"resample_threshold_fraction\":";
  append_double(out, trace.settings.resample_threshold_fraction);
  out += ",\"mcmc_sweeps\":" + std::to_string(trace.settings.mcmc_sweeps);
  out += ",\"snapshot_policy\":\"" + trace.settings.snapshot_policy + "\"";
  out += ",\"threads\":" + std::to_string(trace.settings.threads);
  out += ",\"lik_meta\":";
  append_array(out, trace.settings.lik_meta);
  out += "},\"records\":[";
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    if (i) out += ',';
    out += "{\"t\":" + std::to_string(r.t);
    out += ",\"alpha\":";
    append_double(out, r.alpha);
    out += ",\"theta\":";
    append_double(out, r.theta);
    out += ",\"ess\":";
    append_double(out, r.ess);
    out += ",\"resampled\":";
    out += r.resampled ? "true" : "false";
    out += ",\"log_evidence\":";
    append_double(out, r.log_evidence);
    if (r.snapshot) {
      out += ",\"snapshot\":{\"states\":";
      append_nested(out, r.snapshot->states);
      out += ",\"weights\":";
      append_array(out, r.snapshot->weights);
      out += ",\"loglik_stats\":";
      append_nested(out, r.snapshot->loglik_stats);
      out += '}';
    }
    out += '}';
  }
  out += "]}";
  return out;
}

void write_trace(const RunTrace& trace, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open trace file for writing: " + path);
  f << trace_to_json(trace) << '\n';
}

RunTrace trace_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("schema_version").get<std::string>() != RunTrace::kSchemaVersion) {
    throw ConfigError("trace: unsupported schema version");
  }
  RunTrace trace;
  const json& s = j.at("settings");
  trace.settings.model_id = s.at("model").get<std::string>();
  trace.settings.n_particles = s.at("n_particles").get<int>();
  trace.settings.n_iterations = s.at("n_iterations").get<int>();
  trace.settings.seed = s.at("seed").get<std::uint64_t>();
  trace.settings.theta_star = double_or_nan(s.at("theta_star"));
  trace.settings.schedule_mode = s.at("schedule").at("mode").get<std::string>();
  trace.settings.alpha1 = double_or_nan(s.at("schedule").at("alpha1"));
  trace.settings.ess_target_fraction = double_or_nan(s.at("schedule").at("ess_target_fraction"));
  trace.settings.resample_threshold_fraction = double_or_nan(s.at("resample_threshold_fraction"));
  trace.settings.mcmc_sweeps = s.at("mcmc_sweeps").get<int>();
  trace.settings.snapshot_policy = s.at("snapshot_policy").get<std::string>();
  trace.settings.threads = s.at("threads").get<int>();
  trace.settings.lik_meta = s.at("lik_meta").get<std::vector<double>>();
  for (const json& jr : j.at("records")) {
    IterationRecord r;
    r.t = jr.at("t").get<int>();
    r.alpha = jr.at("alpha").get<double>();
    r.theta = double_or_nan(jr.at("theta"));
    r.ess = jr.at("ess").get<double>();
    r.resampled = jr.at("resampled").get<bool>();
    r.log_evidence = jr.at("log_evidence").get<double>();
    if (jr.contains("snapshot")) {
      Snapshot snap;
      snap.states = jr.at("snapshot").at("states").get<std::vector<std::vector<double>>>();
      snap.weights = jr.at("snapshot").at("weights").get<std::vector<double>>();
      snap.loglik_stats = jr.at("snapshot").at("loglik_stats").get<std::vector<std::vector<double>>>();
      r.snapshot = std::move(snap);
    }
    trace.records.push_back(std::move(r));
  }
  return trace;
}

RunTrace read_trace(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open trace file: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return trace_from_json(text);
}

}  // namespace hsmc
