// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "psipfl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "psipfl/csv.hpp"
#include "psipfl/error.hpp"

namespace psipfl {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = v.find(',', start);
    out.push_back(trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Context {
  std::string where;  // "<source>:<line>"
  std::string key;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(where + ": " + key + ": " + what);
  }
};

double as_double(const Context& ctx, std::string_view v) {
  const auto d = csv::parse_double(v);
  if (!d || !std::isfinite(*d)) ctx.fail("expected a number, got '" + std::string(v) + "'");
  return *d;
}

template <typename Int>
Int as_int(const Context& ctx, std::string_view v) {
  Int out{};
  v = trim(v);
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    ctx.fail("expected an integer, got '" + std::string(v) + "'");
  return out;
}

std::vector<double> as_double_list(const Context& ctx, std::string_view v) {
  std::vector<double> out;
  for (auto item : split_list(v)) out.push_back(as_double(ctx, item));
  return out;
}

template <typename Int>
std::vector<Int> as_int_list(const Context& ctx, std::string_view v) {
  std::vector<Int> out;
  for (auto item : split_list(v)) out.push_back(as_int<Int>(ctx, item));
  return out;
}

using Setter = std::function<void(const Context&, std::string_view)>;

std::map<std::string, Setter, std::less<>> dataset_keys(DatasetSource& d) {
  return {
      {"source",
       [&d](const Context& c, std::string_view v) {
         if (v == "synthetic") d.kind = DatasetSource::Kind::synthetic;
         else if (v == "csv") d.kind = DatasetSource::Kind::csv;
         else c.fail("expected 'synthetic' or 'csv', got '" + std::string(v) + "'");
       }},
      {"n_examples", [&d](const Context& c, std::string_view v) { d.synthetic.n_examples = as_int<std::size_t>(c, v); }},
      {"classes", [&d](const Context& c, std::string_view v) { d.synthetic.classes = as_int<int>(c, v); }},
      {"features", [&d](const Context& c, std::string_view v) { d.synthetic.features = as_int<std::size_t>(c, v); }},
      {"class_separation", [&d](const Context& c, std::string_view v) { d.synthetic.class_separation = as_double(c, v); }},
      {"noise_sd", [&d](const Context& c, std::string_view v) { d.synthetic.noise_sd = as_double(c, v); }},
      {"seed", [&d](const Context& c, std::string_view v) { d.seed = as_int<std::uint64_t>(c, v); }},
      {"path", [&d](const Context&, std::string_view v) { d.csv_path = std::string(v); }},
      {"label_column", [&d](const Context&, std::string_view v) { d.label_column = std::string(v); }},
  };
}

std::map<std::string, Setter, std::less<>> partition_keys(ExperimentConfig& cfg) {
  return {
      {"alpha", [&cfg](const Context& c, std::string_view v) { cfg.alphas = as_double_list(c, v); }},
      {"clients", [&cfg](const Context& c, std::string_view v) { cfg.clients = as_int_list<int>(c, v); }},
      {"min_per_client", [&cfg](const Context& c, std::string_view v) { cfg.min_per_client = as_int<std::size_t>(c, v); }},
      {"test_fraction", [&cfg](const Context& c, std::string_view v) { cfg.test_fraction = as_double(c, v); }},
      {"max_redraws", [&cfg](const Context& c, std::string_view v) { cfg.max_redraws = as_int<int>(c, v); }},
  };
}

std::map<std::string, Setter, std::less<>> run_keys(ExperimentConfig& cfg) {
  return {
      {"rounds", [&cfg](const Context& c, std::string_view v) { cfg.rounds = as_int<int>(c, v); }},
      {"seeds", [&cfg](const Context& c, std::string_view v) { cfg.seeds = as_int_list<std::uint64_t>(c, v); }},
      {"epsilon", [&cfg](const Context& c, std::string_view v) { cfg.epsilon = as_double(c, v); }},
      {"output_dir", [&cfg](const Context&, std::string_view v) { cfg.output_dir = std::string(v); }},
      {"parallel", [&cfg](const Context& c, std::string_view v) { cfg.parallel = as_int<int>(c, v); }},
  };
}

std::map<std::string, Setter, std::less<>> strategy_keys(StrategySpec& s) {
  auto& sel = s.selection;
  auto& srv = s.server;
  auto& loc = s.local;
  return {
      {"selection", [&sel](const Context& c, std::string_view v) {
         try { sel.kind = parse_selection_kind(v); } catch (const ConfigError& e) { c.fail(e.what()); }
       }},
      {"tau", [&sel](const Context& c, std::string_view v) { sel.tau = as_double(c, v); }},
      {"percentile", [&sel](const Context& c, std::string_view v) {
         if (v == "tuned") sel.percentile.reset();
         else sel.percentile = as_double(c, v);
       }},
      {"tune_percentiles", [&sel](const Context& c, std::string_view v) { sel.tune_percentiles = as_double_list(c, v); }},
      {"poc_d", [&sel](const Context& c, std::string_view v) { sel.poc_d = as_int<int>(c, v); }},
      {"poc_m", [&sel](const Context& c, std::string_view v) { sel.poc_m = as_int<int>(c, v); }},
      {"n_clusters", [&sel](const Context& c, std::string_view v) { sel.n_clusters = as_int<int>(c, v); }},
      {"fedcls_m", [&sel](const Context& c, std::string_view v) { sel.fedcls_m = as_int<int>(c, v); }},
      {"server", [&srv](const Context& c, std::string_view v) {
         try { srv.kind = parse_server_kind(v); } catch (const ConfigError& e) { c.fail(e.what()); }
       }},
      {"server_lr", [&srv](const Context& c, std::string_view v) { srv.server_lr = as_double(c, v); }},
      {"beta1", [&srv](const Context& c, std::string_view v) { srv.beta1 = as_double(c, v); }},
      {"beta2", [&srv](const Context& c, std::string_view v) { srv.beta2 = as_double(c, v); }},
      {"adapt_tau", [&srv](const Context& c, std::string_view v) { srv.adapt_tau = as_double(c, v); }},
      {"learning_rate", [&loc](const Context& c, std::string_view v) { loc.learning_rate = as_double(c, v); }},
      {"epochs", [&loc](const Context& c, std::string_view v) { loc.epochs = as_int<int>(c, v); }},
      {"batch_size", [&loc](const Context& c, std::string_view v) { loc.batch_size = as_int<std::size_t>(c, v); }},
      {"prox_mu", [&loc](const Context& c, std::string_view v) { loc.prox_mu = as_double(c, v); }},
  };
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text, const ConfigOverrides& overrides,
                                   const std::filesystem::path& base_dir, std::string_view source_name) {
  ExperimentConfig cfg;
  std::map<std::string, Setter, std::less<>> active;
  std::string section;
  std::map<std::string, int, std::less<>> seen_keys;  // "section.key" -> line

  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    const std::string where = std::string(source_name) + ":" + std::to_string(lineno);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section == "dataset") {
        active = dataset_keys(cfg.dataset);
      } else if (section == "partition") {
        active = partition_keys(cfg);
      } else if (section == "run") {
        active = run_keys(cfg);
      } else if (section.rfind("strategy.", 0) == 0 && section.size() > 9) {
        const std::string name = section.substr(9);
        for (const auto& s : cfg.strategies)
          if (s.name == name) throw ConfigError(where + ": duplicate section [" + section + "]");
        cfg.strategies.push_back(StrategySpec{name, {}, {}, {}});
        active = strategy_keys(cfg.strategies.back());
      } else {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(where + ": key '" + key + "' outside of any section");
    const auto it = active.find(key);
    if (it == active.end()) throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
    if (!seen_keys.emplace(section + "." + key, static_cast<int>(lineno)).second)
      throw ConfigError(where + ": key '" + key + "' repeated in [" + section + "]");
    it->second(Context{where, key}, value);
  }

  if (cfg.dataset.kind == DatasetSource::Kind::csv && cfg.dataset.csv_path.is_relative() &&
      !base_dir.empty())
    cfg.dataset.csv_path = base_dir / cfg.dataset.csv_path;

  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') cfg.output_dir = env;
  if (overrides.seed) cfg.seeds = {*overrides.seed};
  if (overrides.rounds) cfg.rounds = *overrides.rounds;
  if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
  if (overrides.parallel) cfg.parallel = *overrides.parallel;

  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), overrides, path.parent_path(), path.string());
}

namespace {

template <typename T, typename F>
std::string join(const std::vector<T>& v, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

std::string to_config_text(const ExperimentConfig& cfg) {
  const auto num = [](double v) { return csv::format_double(v); };
  std::ostringstream o;
  o << "[dataset]\n";
  if (cfg.dataset.kind == DatasetSource::Kind::synthetic) {
    const auto& s = cfg.dataset.synthetic;
    o << "source = synthetic\n"
      << "n_examples = " << s.n_examples << "\n"
      << "classes = " << s.classes << "\n"
      << "features = " << s.features << "\n"
      << "class_separation = " << num(s.class_separation) << "\n"
      << "noise_sd = " << num(s.noise_sd) << "\n"
      << "seed = " << cfg.dataset.seed << "\n";
  } else {
    o << "source = csv\n"
      << "path = " << cfg.dataset.csv_path.generic_string() << "\n"
      << "label_column = " << cfg.dataset.label_column << "\n";
  }
  o << "\n[partition]\n"
    << "alpha = " << join(cfg.alphas, num) << "\n"
    << "clients = " << join(cfg.clients, [](int k) { return std::to_string(k); }) << "\n"
    << "min_per_client = " << cfg.min_per_client << "\n"
    << "test_fraction = " << num(cfg.test_fraction) << "\n"
    << "max_redraws = " << cfg.max_redraws << "\n";
  o << "\n[run]\n"
    << "rounds = " << cfg.rounds << "\n"
    << "seeds = " << join(cfg.seeds, [](std::uint64_t s) { return std::to_string(s); }) << "\n"
    << "epsilon = " << num(cfg.epsilon) << "\n";
  for (const auto& s : cfg.strategies) {
    const auto& sel = s.selection;
    o << "\n[strategy." << s.name << "]\n"
      << "selection = " << to_string(sel.kind) << "\n";
    if (sel.kind == SelectionKind::psi_tau) {
      if (sel.tau) o << "tau = " << num(*sel.tau) << "\n";
      if (sel.percentile) o << "percentile = " << num(*sel.percentile) << "\n";
      if (sel.tuned()) o << "tune_percentiles = " << join(sel.tune_percentiles, num) << "\n";
    }
    if (sel.kind == SelectionKind::power_of_choice)
      o << "poc_d = " << sel.poc_d << "\n" << "poc_m = " << sel.poc_m << "\n";
    if (sel.kind == SelectionKind::haccs_lite) o << "n_clusters = " << sel.n_clusters << "\n";
    if (sel.kind == SelectionKind::fedcls_lite) o << "fedcls_m = " << sel.fedcls_m << "\n";
    o << "server = " << to_string(s.server.kind) << "\n";
    if (s.server.kind != ServerKind::fedavg)
      o << "server_lr = " << num(s.server.server_lr) << "\n"
        << "beta1 = " << num(s.server.beta1) << "\n"
        << "beta2 = " << num(s.server.beta2) << "\n"
        << "adapt_tau = " << num(s.server.adapt_tau) << "\n";
    o << "learning_rate = " << num(s.local.learning_rate) << "\n"
      << "epochs = " << s.local.epochs << "\n"
      << "batch_size = " << s.local.batch_size << "\n"
      << "prox_mu = " << num(s.local.prox_mu) << "\n";
  }
  return o.str();
}

}  // namespace psipfl
