#include "erw/cli.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <string_view>

#include "CLI11.hpp"
#include "erw/calibration.hpp"
#include "erw/coupling.hpp"
#include "erw/exact_moments.hpp"
#include "erw/params.hpp"
#include "erw/scaling.hpp"
#include "erw/stats.hpp"
#include "json.hpp"

namespace erw {
namespace {

const std::vector<std::string> kAllKeys = {"p",     "q",      "n",      "paths",      "traces",  "seed",
                                           "mode",  "checkpoints", "p-grid", "kappa", "bridge", "format",
                                           "out",   "report", "dump-paths", "workers"};

const std::vector<double> kDefaultSweepP = {0.5, 0.6, 0.7, 0.75, 0.8, 0.9};
const std::vector<std::int64_t> kDefaultSweepN = {1000, 3000, 10000, 30000, 100000};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

double parse_double(const std::string& key, std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(value)) {
    throw DomainError("invalid number '" + std::string(text) + "' for " + key);
  }
  return value;
}

// Integers may be written as 100000 or 1e5.
std::int64_t parse_int(const std::string& key, std::string_view text) {
  text = trim(text);
  std::int64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc{} && end == text.data() + text.size()) return value;
  const double d = parse_double(key, text);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw DomainError("invalid integer '" + std::string(text) + "' for " + key);
  return static_cast<std::int64_t>(d);
}

std::uint64_t parse_seed(std::string_view text) {
  text = trim(text);
  std::uint64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw DomainError("invalid seed '" + std::string(text) + "'");
  }
  return value;
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& key, std::string_view text, Parse parse) {
  std::vector<T> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(parse(key, text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

bool parse_bool(const std::string& key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw DomainError("invalid boolean '" + std::string(text) + "' for " + key);
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

nlohmann::json metadata_json(const Metadata& metadata) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : metadata) j[key] = value;
  return j;
}

class Emitter {
 public:
  Emitter(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  void write(const std::string& path, const std::string& content) {
    if (path.empty()) return;
    if (path == "-") {
      out_ << content;
      out_.flush();
      data_on_out_ = true;
    } else {
      write_text_file(path, content);
    }
  }

  // Summaries go to stdout unless data already does.
  std::ostream& summary() { return data_on_out_ ? err_ : out_; }

 private:
  std::ostream& out_;
  std::ostream& err_;
  bool data_on_out_ = false;
};

std::string csv_with_preamble(const RunConfig& config, const std::string& body) {
  std::ostringstream os;
  write_csv_preamble(os, config.metadata());
  os << body;
  return os.str();
}

std::string json_document(const RunConfig& config, nlohmann::json body) {
  body["config"] = metadata_json(config.metadata());
  return body.dump(2) + "\n";
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const RunConfig& config, Emitter& emit) {
  const ErwParams params(config.p, config.q);
  const bool single_path = config.paths == 1 && config.checkpoints.size() == 1 && config.dump_paths.empty();
  if (single_path) {
    const auto path = config.mode == SimMode::Faithful ? simulate_faithful(params, config.n, config.seed)
                                                       : simulate_collapsed(params, config.n, config.seed);
    if (config.format == "json") {
      nlohmann::json j;
      j["positions"] = path.positions;
      emit.write(config.out, json_document(config, std::move(j)));
    } else {
      std::ostringstream os;
      os << "k,eta_k,X_k\n";
      for (std::int64_t k = 1; k <= path.length(); ++k) os << k << ',' << path.step(k) << ',' << path.x(k) << '\n';
      emit.write(config.out, csv_with_preamble(config, os.str()));
    }
    emit.summary() << "X_n=" << path.x(config.n) << " E[X_n]=" << format_double(mean_exact(params, config.n))
                   << " Var[X_n]=" << format_double(variance_exact(params, config.n)) << '\n';
    return kExitOk;
  }

  const auto ensemble =
      run_ensemble(params, config.checkpoints, config.paths, config.seed, config.mode, {config.workers, {}});
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream os;
  os << "n,paths,mean,variance,se_mean,se_variance,exact_mean,exact_variance,z_mean,z_variance\n";
  double last_z_var = 0.0;
  for (const auto& c : ensemble.checkpoints) {
    const double exact_mean = mean_exact(params, c.n);
    const double exact_var = variance_exact(params, c.n);
    const double se_mean = c.standard_error_of_mean();
    const double se_var = c.standard_error_of_variance();
    const double z_mean = se_mean > 0.0 ? (c.mean - exact_mean) / se_mean : 0.0;
    const double z_var = se_var > 0.0 ? (c.variance - exact_var) / se_var : 0.0;
    last_z_var = z_var;
    os << c.n << ',' << c.count << ',' << format_double(c.mean) << ',' << format_double(c.variance) << ','
       << format_double(se_mean) << ',' << format_double(se_var) << ',' << format_double(exact_mean) << ','
       << format_double(exact_var) << ',' << format_double(z_mean) << ',' << format_double(z_var) << '\n';
    rows.push_back({{"n", c.n},
                    {"paths", c.count},
                    {"mean", c.mean},
                    {"variance", c.variance},
                    {"se_mean", se_mean},
                    {"se_variance", se_var},
                    {"exact_mean", exact_mean},
                    {"exact_variance", exact_var}});
  }
  if (config.format == "json") {
    emit.write(config.out, json_document(config, {{"checkpoints", rows}}));
  } else {
    emit.write(config.out, csv_with_preamble(config, os.str()));
  }
  if (!config.dump_paths.empty()) {
    std::ostringstream dump;
    dump << "path_id,n,X_n\n";
    for (std::int64_t i = 0; i < ensemble.paths; ++i) {
      for (const auto& c : ensemble.checkpoints) {
        dump << i << ',' << c.n << ',' << c.values[static_cast<std::size_t>(i)] << '\n';
      }
    }
    emit.write(config.dump_paths, csv_with_preamble(config, dump.str()));
  }
  const auto& last = ensemble.checkpoints.back();
  emit.summary() << "n=" << last.n << " paths=" << last.count << " mean=" << format_double(last.mean)
                 << " variance=" << format_double(last.variance)
                 << " exact_variance=" << format_double(variance_exact(params, last.n))
                 << " z_variance=" << format_double(last_z_var) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- tables

int cmd_moments(const RunConfig& config, Emitter& emit) {
  const ErwParams params(config.p, config.q);
  std::vector<std::int64_t> grid = config.checkpoints;
  if (grid.size() == 1 && grid.front() == config.n) {
    grid.clear();
    for (std::int64_t k = 1; k <= config.n; ++k) grid.push_back(k);
  }
  const auto table = moment_table(params, grid);
  if (config.format == "json") {
    nlohmann::json j{{"n", table.n_grid},
                     {"mean", table.mean},
                     {"second_moment", table.second_moment},
                     {"variance", table.variance}};
    emit.write(config.out, json_document(config, std::move(j)));
    return kExitOk;
  }
  std::ostringstream os;
  os << "n,mean,second_moment,variance\n";
  for (std::size_t i = 0; i < table.n_grid.size(); ++i) {
    os << table.n_grid[i] << ',' << format_double(table.mean[i]) << ',' << format_double(table.second_moment[i])
       << ',' << format_double(table.variance[i]) << '\n';
  }
  emit.write(config.out, csv_with_preamble(config, os.str()));
  return kExitOk;
}

int cmd_scaling(const RunConfig& config, Emitter& emit) {
  const auto tables = ScalingTables::build(ErwParams(config.p, config.q), config.n);
  if (config.format == "json") {
    nlohmann::json j{{"a", tables.a}, {"s2", tables.s2}};
    emit.write(config.out, json_document(config, std::move(j)));
    return kExitOk;
  }
  std::ostringstream os;
  write_scaling_csv(os, tables);
  emit.write(config.out, csv_with_preamble(config, os.str()));
  return kExitOk;
}

// ---------------------------------------------------------------- verify

std::vector<TestReport> run_verify(const RunConfig& config, const std::string& which, std::string* sweep_csv) {
  const ErwParams params(config.p, config.q);
  if (which == "clt") {
    return {verify_clt(params, config.n, config.paths, config.seed, {false, config.mode, config.workers})};
  }
  if (which == "lil") {
    LilOptions options;
    options.mode = config.mode;
    options.workers = config.workers;
    return {verify_lil_envelope(params, config.n, config.paths, config.seed, options)};
  }
  if (which == "sweep") {
    SweepOptions options;
    options.q = config.q;
    options.mode = config.mode;
    options.workers = config.workers;
    const auto sweep = variance_exponent_sweep(config.p_grid, config.checkpoints, config.paths, config.seed, options);
    if (sweep_csv) {
      std::ostringstream os;
      write_sweep_csv(os, sweep);
      *sweep_csv = os.str();
    }
    return {sweep_verdict(sweep)};
  }
  if (which == "equivalence") {
    EquivalenceOptions options;
    options.workers = config.workers;
    return {verify_equivalence(params, config.n, config.paths, config.seed, options)};
  }
  throw DomainError("unknown verify target '" + which + "'");
}

std::string checks_csv(const std::vector<TestReport>& reports) {
  std::ostringstream os;
  os << "test,check,statistic,comparison,threshold,pass\n";
  for (const auto& r : reports) {
    for (const auto& c : r.checks) {
      os << r.name << ',' << c.name << ',' << format_double(c.statistic) << ','
         << (c.comparison == Comparison::AtMost ? "<=" : ">=") << ',' << format_double(c.threshold) << ','
         << (c.pass() ? "true" : "false") << '\n';
    }
  }
  return os.str();
}

int cmd_verify(const RunConfig& config, Emitter& emit) {
  std::vector<TestReport> reports;
  std::string sweep_csv;
  if (config.which == "all") {
    for (const char* target : {"clt", "lil", "sweep", "equivalence"}) {
      const auto sub = resolve_config("verify", target,
                                      {{"p", format_double(config.p)},
                                       {"q", format_double(config.q)},
                                       {"seed", std::to_string(config.seed)},
                                       {"mode", std::string(to_string(config.mode))},
                                       {"workers", std::to_string(config.workers)}});
      auto part = run_verify(sub, target, nullptr);
      reports.insert(reports.end(), part.begin(), part.end());
    }
  } else {
    reports = run_verify(config, config.which, &sweep_csv);
  }

  nlohmann::json j;
  auto& arr = j["reports"] = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  const std::string json_text = json_document(config, j);

  if (config.format == "json") {
    emit.write(config.out, json_text);
  } else if (config.which == "sweep") {
    emit.write(config.out, csv_with_preamble(config, sweep_csv));
  } else if (config.which == "all") {
    std::ostringstream os;
    os << "test,p,q,n,paths,seed,checks,checks_passed,verdict\n";
    for (const auto& r : reports) {
      const auto passed = std::count_if(r.checks.begin(), r.checks.end(), [](const Check& c) { return c.pass(); });
      os << r.name << ',' << format_double(r.params.p()) << ',' << format_double(r.params.q()) << ',' << r.n << ','
         << r.paths << ',' << r.seed << ',' << r.checks.size() << ',' << passed << ','
         << (r.pass() ? "pass" : "fail") << '\n';
    }
    emit.write(config.out, csv_with_preamble(config, os.str()));
  } else {
    emit.write(config.out, csv_with_preamble(config, checks_csv(reports)));
  }
  emit.write(config.report, json_text);

  bool all_pass = true;
  for (const auto& r : reports) {
    emit.summary() << r.name << ": " << (r.pass() ? "pass" : "fail");
    for (const auto& c : r.checks) emit.summary() << " [" << c.name << '=' << format_double(c.statistic) << ']';
    emit.summary() << '\n';
    all_pass = all_pass && r.pass();
  }
  return all_pass ? kExitOk : kExitVerdictFail;
}

// ---------------------------------------------------------------- couple

int cmd_couple(const RunConfig& config, Emitter& emit) {
  const ErwParams params(config.p, config.q);
  GridPolicy grid;
  grid.kappa = config.kappa;
  grid.bridge_correction = config.bridge_correction;
  if (config.paths == 1) {
    const auto trace = embed_walk(params, config.n, grid, config.seed, config.checkpoints);
    const auto report = check_embedding(trace);
    const std::string json_text = json_document(config, to_json(report));
    if (config.format == "json") {
      emit.write(config.out, json_text);
    } else {
      std::ostringstream os;
      write_trace_csv(os, trace);
      emit.write(config.out, csv_with_preamble(config, os.str()));
    }
    emit.write(config.report, json_text);
    emit.summary() << "T_n/s2_n=" << format_double(report.T_over_s2.back())
                   << " median_overshoot=" << format_double(report.median_overshoot) << '\n';
    return kExitOk;
  }
  const auto ensemble =
      run_couplings(params, config.n, grid, config.seed, config.checkpoints, config.paths, config.workers);
  const std::string json_text = json_document(config, to_json(ensemble));
  if (config.format == "json") {
    emit.write(config.out, json_text);
  } else {
    std::ostringstream os;
    write_coupling_summary_csv(os, ensemble);
    emit.write(config.out, csv_with_preamble(config, os.str()));
  }
  emit.write(config.report, json_text);
  emit.summary() << "traces=" << config.paths << " mean T_n/s2_n=" << format_double(mean_terminal_ratio(ensemble))
                 << '\n';
  return kExitOk;
}

}  // namespace

Metadata RunConfig::metadata() const {
  Metadata m{{"tool", "erw"},
             {"version", std::string(kToolVersion)},
             {"calibration_version", std::string(calibration::kVersion)},
             {"command", command}};
  if (!which.empty()) m.emplace_back("target", which);
  const bool sweep_all_p = command == "verify" && which == "sweep";
  if (sweep_all_p) {
    m.emplace_back("p_grid", join(p_grid));
  } else {
    m.emplace_back("p", format_double(p));
  }
  m.emplace_back("q", format_double(q));
  if (command == "moments") m.emplace_back("method", "recursion");
  if (command == "scaling") m.emplace_back("method", "product recursion");
  if (!(command == "verify" && which == "all")) {
    m.emplace_back("n", std::to_string(n));
    if (!checkpoints.empty()) m.emplace_back("checkpoints", join(checkpoints));
  }
  if (command == "simulate" || command == "verify" || command == "couple") {
    if (!(command == "verify" && which == "all")) m.emplace_back(command == "couple" ? "traces" : "paths", std::to_string(paths));
    m.emplace_back("seed", std::to_string(seed));
  }
  if (command == "simulate" || (command == "verify" && which != "equivalence")) {
    m.emplace_back("mode", std::string(to_string(mode)));
  }
  if (command == "couple") {
    m.emplace_back("kappa", format_double(kappa));
    m.emplace_back("bridge", bridge_correction ? "true" : "false");
  }
  m.emplace_back("format", format);
  return m;
}

RunConfig resolve_config(const std::string& command, const std::string& which,
                         const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    if (std::find(kAllKeys.begin(), kAllKeys.end(), key) == kAllKeys.end()) {
      throw DomainError("unknown configuration key '" + key + "'");
    }
  }
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
  };

  RunConfig c;
  c.command = command;
  c.which = which;
  if (auto v = get("p")) c.p = parse_double("p", *v);
  if (auto v = get("q")) c.q = parse_double("q", *v);
  c.seed = calibration::kDefaultSeed;
  if (auto v = get("seed")) c.seed = parse_seed(*v);
  if (auto v = get("mode")) c.mode = parse_sim_mode(trim(*v));
  c.kappa = calibration::kGridKappa;
  if (auto v = get("kappa")) c.kappa = parse_double("kappa", *v);
  if (auto v = get("bridge")) c.bridge_correction = parse_bool("bridge", *v);
  if (auto v = get("workers")) {
    const auto w = parse_int("workers", *v);
    if (w < 0 || w > 4096) throw DomainError("workers must lie in [0, 4096]");
    c.workers = static_cast<unsigned>(w);
  }
  if (auto v = get("out")) c.out = *v;
  if (auto v = get("report")) c.report = *v;
  if (auto v = get("dump-paths")) c.dump_paths = *v;
  if (get("paths") && get("traces")) throw DomainError("give either paths or traces, not both");
  std::optional<std::int64_t> paths;
  if (auto v = get("paths")) paths = parse_int("paths", *v);
  if (auto v = get("traces")) paths = parse_int("traces", *v);
  std::optional<std::int64_t> n;
  if (auto v = get("n")) n = parse_int("n", *v);
  if (auto v = get("checkpoints")) c.checkpoints = parse_list<std::int64_t>("checkpoints", *v, parse_int);
  if (auto v = get("p-grid")) c.p_grid = parse_list<double>("p-grid", *v, parse_double);

  // Range checks on p and q come first so that they report as validation errors.
  const ErwParams params(c.p, c.q);

  std::int64_t default_n = 10;
  std::int64_t default_paths = 1;
  std::string default_format = "csv";
  if (command == "simulate") {
    default_n = 1000;
  } else if (command == "verify") {
    default_format = "json";
    if (which == "clt") {
      default_n = params.regime() == Regime::Critical ? 100000 : 10000;
      default_paths = 100000;
    } else if (which == "lil") {
      default_n = 1000000;
      default_paths = 100;
    } else if (which == "sweep") {
      default_paths = 10000;
      if (c.checkpoints.empty()) c.checkpoints = kDefaultSweepN;
      default_n = c.checkpoints.back();
      if (c.p_grid.empty()) c.p_grid = kDefaultSweepP;
    } else if (which == "equivalence") {
      default_n = 2000;
      default_paths = 20000;
    } else if (which == "all") {
      if (n || paths || !c.checkpoints.empty()) throw DomainError("verify all runs every test at its default size");
    } else {
      throw DomainError("verify target must be clt, lil, sweep, equivalence or all");
    }
  } else if (command == "couple") {
    default_n = 1000;
  } else if (command != "moments" && command != "scaling") {
    throw DomainError("unknown command '" + command + "'");
  }
  c.n = n.value_or(default_n);
  c.paths = paths.value_or(default_paths);
  c.format = get("format").value_or(default_format);
  if (c.format != "csv" && c.format != "json") throw DomainError("format must be csv or json");

  if (!(command == "verify" && which == "all")) {
    if (command == "verify" && which == "sweep") {
      if (n && *n != c.checkpoints.back()) throw DomainError("sweep n must equal the last grid point");
      c.n = c.checkpoints.back();
      for (double p : c.p_grid) ErwParams(p, c.q);
    } else if (c.checkpoints.empty()) {
      c.checkpoints = {c.n};
    }
    require_checkpoint_grid(c.checkpoints);
    if (c.n < 1) throw DomainError("n must be at least 1");
    if (c.checkpoints.back() > c.n) throw DomainError("checkpoints must not exceed n");
    if (c.paths < 1) throw DomainError("paths must be at least 1");
  }
  if (!c.dump_paths.empty() && command != "simulate") throw DomainError("dump-paths applies to simulate only");

  if (command == "verify") {
    if (which == "clt" || which == "lil" || which == "all") require_not_superdiffusive(params, "verify " + which);
    if (which == "clt" && c.n < 3) throw DomainError("verify clt needs n >= 3");
    if (which == "lil" && c.n < calibration::kLilWindowStart) throw DomainError("verify lil needs n >= 1000");
  }
  if (command == "couple") {
    require_not_superdiffusive(params, "couple");
    if (c.n < 16) throw DomainError("couple needs n >= 16");
    if (!(c.kappa > 0.0)) throw DomainError("kappa must be positive");
  }
  return c;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Elephant random walk simulator and test battery", "erw"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  struct Sub {
    CLI::App* app;
    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, CLI::Option*>> options;
    std::string config;
    std::string which;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  auto add = [&](const char* name, const char* help, std::vector<std::string> keys) {
    auto sub = std::make_unique<Sub>();
    sub->app = app.add_subcommand(name, help);
    for (const auto& key : keys) {
      sub->options.emplace_back(key, sub->app->add_option("--" + key, sub->values[key]));
    }
    sub->app->add_option("--config", sub->config, "key=value file; flags take precedence");
    subs.push_back(std::move(sub));
    return subs.back().get();
  };
  add("simulate", "simulate one path or an ensemble",
      {"p", "q", "n", "paths", "seed", "mode", "checkpoints", "format", "out", "dump-paths", "workers"});
  add("moments", "exact mean and second moment tables", {"p", "q", "n", "checkpoints", "format", "out"});
  add("scaling", "a_n and s_n^2 tables", {"p", "q", "n", "format", "out"});
  auto* verify = add("verify", "run a statistical check",
                     {"p", "q", "n", "paths", "seed", "mode", "checkpoints", "p-grid", "format", "out", "report",
                      "workers"});
  verify->app->add_option("which", verify->which, "clt | lil | sweep | equivalence | all")->required();
  add("couple", "embed the walk in Brownian motion",
      {"p", "q", "n", "traces", "seed", "kappa", "bridge", "checkpoints", "format", "out", "report", "workers"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    for (auto& sub : subs) {
      if (!sub->app->parsed()) continue;
      std::map<std::string, std::string> merged;
      if (!sub->config.empty()) merged = read_key_value_file(sub->config);
      for (const auto& [key, option] : sub->options) {
        if (option->count() > 0) merged[key] = sub->values[key];
      }
      const auto config = resolve_config(sub->app->get_name(), sub->which, merged);
      Emitter emit(out, err);
      if (config.command == "simulate") return cmd_simulate(config, emit);
      if (config.command == "moments") return cmd_moments(config, emit);
      if (config.command == "scaling") return cmd_scaling(config, emit);
      if (config.command == "verify") return cmd_verify(config, emit);
      return cmd_couple(config, emit);
    }
  } catch (const RegimeError& e) {
    err << "regime error: " << e.what() << '\n';
    return kExitRegime;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << '\n';
    return kExitResource;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace erw
