// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "psipfl/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "psipfl/config.hpp"
#include "psipfl/csv.hpp"
#include "psipfl/error.hpp"
#include "psipfl/rng.hpp"

namespace psipfl {
namespace {

using csv::format_double;

std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(double v) { return format_double(v); }
std::string fmt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  csv::Writer w(path, {"run_id", "alpha", "seed", "K", "client_id", "n_i", "psi", "hellinger", "jsd", "emd"});
  for (const auto& p : result.partitions) {
    std::uint64_t total = 0;
    for (const auto& c : p.report.clients) {
      w.row({p.id, fmt(p.alpha), fmt(p.seed), fmt(p.clients), fmt(c.client_id), fmt(c.n), fmt(c.psi),
             fmt(c.hellinger), fmt(c.jsd), fmt(c.emd)});
      total += c.n;
    }
    // Federation row: psi holds WPSI, the other columns their weighted means.
    w.row({p.id, fmt(p.alpha), fmt(p.seed), fmt(p.clients), "all", fmt(total), fmt(p.report.wpsi),
           fmt(p.report.whellinger), fmt(p.report.wjsd), fmt(p.report.wemd)});
  }
}

void write_rounds_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  csv::Writer w(path, {"run_id", "round", "strategy", "selected_count", "global_acc", "mean_local_loss"});
  for (const auto& r : result.runs)
    for (const auto& rr : r.rounds)
      w.row({r.run_id, fmt(rr.round), r.strategy, fmt(static_cast<std::uint64_t>(rr.selected_clients.size())),
             fmt(rr.global_accuracy), fmt(rr.mean_local_loss)});
}

void write_results_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  csv::Writer w(path, {"run_id", "strategy", "alpha", "K", "seed", "tau", "global_acc", "cp", "ad", "sdad"});
  for (const auto& r : result.runs)
    w.row({r.run_id, r.strategy, fmt(r.alpha), fmt(r.clients), fmt(r.seed), fmt(r.tau), fmt(r.global_accuracy),
           fmt(r.fairness.cp), fmt(r.fairness.ad), fmt(r.fairness.sdad)});
}

void write_fairness_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  csv::Writer w(path, {"run_id", "strategy", "alpha", "seed", "cp", "ad", "sdad", "target_acc"});
  for (const auto& r : result.runs)
    w.row({r.run_id, r.strategy, fmt(r.alpha), fmt(r.seed), fmt(r.fairness.cp), fmt(r.fairness.ad),
           fmt(r.fairness.sdad), fmt(r.fairness.target_accuracy)});
}

void write_ecdf_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  csv::Writer w(path, {"run_id", "series", "value", "cumfrac"});
  for (const auto& p : result.partitions) {
    std::vector<double> v;
    for (const auto& c : p.report.clients) v.push_back(c.psi);
    for (const auto& pt : ecdf(v)) w.row({p.id, "psi", fmt(pt.value), fmt(pt.cumfrac)});
  }
  for (const auto& r : result.runs) {
    std::vector<double> v;
    for (const auto& [id, a] : r.fairness.per_client_accuracy) v.push_back(a);
    for (const auto& pt : ecdf(v)) w.row({r.run_id, "local_acc", fmt(pt.value), fmt(pt.cumfrac)});
  }
}

void write_tau_report_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  csv::Writer w(path, {"run_id", "percentile", "tau", "n_selected", "global_acc", "chosen"});
  for (const auto& r : result.runs) {
    if (!r.tau_report) continue;
    const auto& rep = *r.tau_report;
    for (std::size_t i = 0; i < rep.entries.size(); ++i) {
      const auto& e = rep.entries[i];
      w.row({r.run_id, e.candidate.label, fmt(e.candidate.tau), fmt(static_cast<std::uint64_t>(e.selected.size())),
             fmt(e.accuracy), i == rep.chosen ? "1" : "0"});
    }
  }
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return hex64(fnv1a64(buf.str()));
}

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const ExperimentConfig& config, const std::vector<std::string>& written) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config"] = to_config_text(config);
  j["files"] = nlohmann::ordered_json::object();
  std::string all = std::to_string(kSchemaVersion) + command + to_config_text(config);
  for (const auto& name : written) {
    const std::string h = file_hash(dir / name);
    j["files"][name] = h;
    all += name + h;
  }
  j["content_hash"] = hex64(fnv1a64(all));
  std::ofstream out(dir / files::kManifest, std::ios::binary);
  if (!out) throw Error("cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

std::vector<std::string> execute(Command command, const ExperimentConfig& input) {
  ExperimentConfig config = input;
  if (command == Command::tune_tau) {
    std::vector<StrategySpec> keep;
    for (auto s : config.strategies) {
      if (s.selection.kind != SelectionKind::psi_tau) continue;
      s.selection.tau.reset();
      s.selection.percentile.reset();
      keep.push_back(std::move(s));
    }
    if (keep.empty()) throw ConfigError("tune-tau needs at least one strategy with selection = psi_tau");
    config.strategies = std::move(keep);
  }
  config.validate();

  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  std::filesystem::remove(dir / files::kManifest);

  std::vector<std::string> written;
  auto emit = [&](const char* name, auto writer, const ExperimentResult& res) {
    writer(dir / name, res);
    written.emplace_back(name);
  };

  std::string command_name;
  if (command == Command::metrics) {
    command_name = "metrics";
    const auto res = run_partitions(config);
    emit(files::kMetrics, write_metrics_csv, res);
    emit(files::kEcdf, write_ecdf_csv, res);
  } else {
    command_name = command == Command::run ? "run" : "tune-tau";
    const auto res = run_experiment(config);
    emit(files::kMetrics, write_metrics_csv, res);
    emit(files::kRounds, write_rounds_csv, res);
    emit(files::kResults, write_results_csv, res);
    emit(files::kFairness, write_fairness_csv, res);
    emit(files::kEcdf, write_ecdf_csv, res);
    emit(files::kTauReport, write_tau_report_csv, res);
  }
  write_manifest(dir, command_name, config, written);
  written.emplace_back(files::kManifest);
  return written;
}

std::filesystem::path summarize(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / files::kManifest))
    throw Error(dir.string() + " has no " + files::kManifest + " (missing or partial run)");
  const auto results = csv::read_table(dir / files::kResults);
  const auto metrics = csv::read_table(dir / files::kMetrics);

  std::map<std::string, double> wpsi_by_partition;  // run_id of the partition
  {
    const auto id = metrics.column("run_id");
    const auto client = metrics.column("client_id");
    const auto psi = metrics.column("psi");
    for (const auto& row : metrics.rows)
      if (row[client] == "all") wpsi_by_partition[row[id]] = *csv::parse_double(row[psi]);
  }

  struct Group {
    std::string strategy, alpha, k;
    std::vector<double> acc, cp, wpsi;
  };
  std::vector<Group> groups;
  std::map<std::string, std::size_t> index;
  const auto c_strategy = results.column("strategy");
  const auto c_alpha = results.column("alpha");
  const auto c_k = results.column("K");
  const auto c_seed = results.column("seed");
  const auto c_acc = results.column("global_acc");
  const auto c_cp = results.column("cp");
  for (const auto& row : results.rows) {
    const std::string key = row[c_strategy] + '\x1f' + row[c_alpha] + '\x1f' + row[c_k];
    auto [it, fresh] = index.try_emplace(key, groups.size());
    if (fresh) groups.push_back({row[c_strategy], row[c_alpha], row[c_k], {}, {}, {}});
    Group& g = groups[it->second];
    g.acc.push_back(*csv::parse_double(row[c_acc]));
    if (const auto cp = csv::parse_double(row[c_cp])) g.cp.push_back(*cp);
    const auto w = wpsi_by_partition.find("a" + row[c_alpha] + "_k" + row[c_k] + "_s" + row[c_seed]);
    if (w != wpsi_by_partition.end()) g.wpsi.push_back(w->second);
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  // Sample standard deviation; a single seed reports 0. Deviations are taken
  // from the first value so identical runs give exactly 0.
  auto sd = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    std::vector<double> shifted;
    for (double x : v) shifted.push_back(x - v.front());
    const double m = mean(shifted);
    double s = 0.0;
    for (double x : shifted) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };

  const auto out_path = dir / files::kSummary;
  csv::Writer w(out_path, {"strategy", "alpha", "K", "mean_global_acc", "sd_global_acc", "mean_cp", "mean_wpsi"});
  for (const auto& g : groups)
    w.row({g.strategy, g.alpha, g.k, fmt(mean(g.acc)), fmt(sd(g.acc)), g.cp.empty() ? "" : fmt(mean(g.cp)),
           g.wpsi.empty() ? "" : fmt(mean(g.wpsi))});
  return out_path;
}

}  // namespace psipfl
