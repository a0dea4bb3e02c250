#include "replica_lab/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "replica_lab/errors.hpp"
#include "replica_lab/gammafn.hpp"
#include "replica_lab/groups.hpp"
#include "replica_lab/ksat.hpp"
#include "replica_lab/moments.hpp"
#include "replica_lab/numeric.hpp"
#include "replica_lab/thermo.hpp"
#include "replica_lab/threshold.hpp"

namespace replica_lab::cli {

namespace {

using nlohmann::ordered_json;

struct GlobalOpts {
  std::uint64_t seed = 0;
  int workers = 1;
  bool deterministic = false;
  std::string out;
  std::string format = "json";
  int max_n = thermo::kDefaultMaxExhaustiveN;
};

void write_output(const GlobalOpts& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file '" + g.out + "'");
  f << text;
}

std::string timestamp_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void emit_json(const GlobalOpts& g, ordered_json j) {
  if (!g.deterministic) j["timestamp"] = timestamp_now();
  write_output(g, j.dump(2) + "\n");
}

void emit_csv(const GlobalOpts& g, const ordered_json& config, const std::string& header,
              const std::vector<std::string>& rows) {
  std::ostringstream out;
  out << "# config " << config.dump() << "\n";
  if (!g.deterministic) out << "# timestamp " << timestamp_now() << "\n";
  out << header << "\n";
  for (const auto& row : rows) out << row << "\n";
  write_output(g, out.str());
}

ordered_json base_config(const GlobalOpts& g, const std::string& subcommand) {
  ordered_json c;
  c["subcommand"] = subcommand;
  c["seed"] = g.seed;
  c["workers"] = g.workers;
  c["deterministic"] = g.deterministic;
  c["format"] = g.format;
  return c;
}

struct InstanceOpts {
  int n = 0;
  int k = 0;
  int m = -1;
  double alpha = -1.0;
  std::string in_file;
};

void add_instance_options(CLI::App* cmd, InstanceOpts& opts, bool with_input_file = true) {
  cmd->add_option("--n", opts.n, "variable count");
  cmd->add_option("--k", opts.k, "literals per clause");
  cmd->add_option("--m", opts.m, "clause count");
  cmd->add_option("--alpha", opts.alpha, "clause density m/n (m = round(alpha*n))");
  if (with_input_file) {
    cmd->add_option("--in", opts.in_file, "read the instance from a DIMACS (.cnf) or .json file");
  }
}

ksat::EnsembleParams ensemble_params(const InstanceOpts& opts, const GlobalOpts& g,
                                     double temperature = 1.0) {
  ksat::EnsembleParams p;
  p.n = opts.n;
  p.k = opts.k;
  p.m = opts.m;
  p.alpha = opts.alpha;
  p.temperature = temperature;
  p.seed = g.seed;
  p.validate();
  return p;
}

ksat::KSatInstance load_or_generate(const InstanceOpts& opts, const GlobalOpts& g) {
  if (!opts.in_file.empty()) {
    std::ifstream f(opts.in_file, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open instance file '" + opts.in_file + "'");
    std::stringstream buffer;
    buffer << f.rdbuf();
    if (opts.in_file.size() > 5 && opts.in_file.ends_with(".json")) {
      return ksat::import_json(buffer.str());
    }
    return ksat::import_dimacs(buffer.str());
  }
  return ksat::generate_instance(ensemble_params(opts, g));
}

ordered_json instance_config(const ksat::KSatInstance& inst) {
  ordered_json j;
  j["n"] = inst.n();
  j["k"] = inst.k();
  j["m"] = inst.m();
  j["alpha"] = inst.n() > 0 ? static_cast<double>(inst.m()) / inst.n() : 0.0;
  if (inst.seed()) {
    j["instance_seed"] = *inst.seed();
  } else {
    j["instance_seed"] = nullptr;
  }
  return j;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return out;
}

// "lo:hi:step" or a comma-separated list.
std::vector<double> parse_grid(const std::string& text, const char* what) {
  if (text.find(':') == std::string::npos) return parse_double_list(text, what);
  double lo, hi, step;
  char c1, c2;
  std::istringstream ss(text);
  if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0) {
    throw std::invalid_argument(std::string(what) + ": expected lo:hi:step, got '" + text + "'");
  }
  std::vector<double> out;
  for (int i = 0;; ++i) {
    double v = lo + i * step;
    if (v > hi + 1e-9) break;
    out.push_back(v);
  }
  return out;
}

ksat::SpinConfig parse_spins(const std::string& text) {
  auto values = parse_double_list(text, "--assign");
  ksat::SpinConfig spins;
  spins.reserve(values.size());
  for (double v : values) {
    if (v != 1.0 && v != -1.0) {
      throw std::invalid_argument("--assign entries must be +1 or -1");
    }
    spins.push_back(v > 0 ? 1 : -1);
  }
  return spins;
}

ordered_json order_parameter_json(const moments::OrderParameter& u) {
  ordered_json j = ordered_json::array();
  for (double x : u.u) j.push_back(x);
  return j;
}

ordered_json saddle_json(const moments::SaddleResult& res) {
  ordered_json j;
  j["ansatz"] = moments::ansatz_name(res.ansatz);
  j["f_max"] = res.f_max;
  j["u_star"] = order_parameter_json(res.u_star);
  j["iterations"] = res.iterations;
  j["grad_norm"] = res.grad_norm;
  j["converged"] = res.converged;
  return j;
}

void require_format(const GlobalOpts& g, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (g.format == a) return;
  }
  std::string list;
  for (const char* a : allowed) {
    if (!list.empty()) list += ", ";
    list += a;
  }
  throw std::invalid_argument("unsupported --format '" + g.format + "' (allowed: " + list + ")");
}

// ---------------------------------------------------------------- handlers

int cmd_gen(const GlobalOpts& g, const InstanceOpts& io, const std::string& format) {
  auto inst = ksat::generate_instance(ensemble_params(io, g));
  if (format == "json") {
    write_output(g, ksat::export_json(inst));
  } else if (format == "dimacs" || format.empty()) {
    write_output(g, ksat::export_dimacs(inst));
  } else {
    throw std::invalid_argument("gen supports --format dimacs or json");
  }
  return 0;
}

int cmd_energy(const GlobalOpts& g, const InstanceOpts& io, const std::string& assign) {
  require_format(g, {"json"});
  auto inst = load_or_generate(io, g);
  ordered_json j;
  j["config"] = base_config(g, "energy");
  j["config"].update(instance_config(inst));
  if (!assign.empty()) {
    auto spins = parse_spins(assign);
    int e = ksat::energy(inst, spins);
    int direct = ksat::count_violated_direct(inst, spins);
    j["energy"] = e;
    j["direct_count"] = direct;
    j["methods_agree"] = e == direct;
  } else {
    auto [e0, degeneracy] = thermo::ground_energy(inst, g.max_n);
    j["ground_energy"] = e0;
    j["degeneracy"] = degeneracy;
    j["satisfiable"] = e0 == 0;
  }
  emit_json(g, std::move(j));
  return 0;
}

int cmd_partition(const GlobalOpts& g, const InstanceOpts& io, const std::string& temps) {
  require_format(g, {"json", "csv"});
  auto inst = load_or_generate(io, g);
  auto grid = parse_double_list(temps, "--temps");
  auto spectrum = thermo::energy_spectrum(inst, g.max_n);

  ordered_json config = base_config(g, "partition");
  config.update(instance_config(inst));
  ordered_json rows = ordered_json::array();
  std::vector<std::string> csv_rows;
  for (double t : grid) {
    if (!(t > 0.0)) throw std::invalid_argument("--temps entries must be > 0");
    double log_z = spectrum.log_partition_at_beta(1.0 / t);
    double f = -t * log_z;
    double h = spectrum.thermal_energy_at_beta(1.0 / t);
    ordered_json row;
    row["temperature"] = t;
    row["log_z"] = log_z;
    row["free_energy"] = f;
    row["thermal_energy"] = h;
    rows.push_back(std::move(row));
    csv_rows.push_back(format_double(t) + "," + format_double(log_z) + "," + format_double(f) +
                       "," + format_double(h));
  }
  if (g.format == "csv") {
    emit_csv(g, config, "temperature,log_z,free_energy,thermal_energy", csv_rows);
  } else {
    ordered_json j;
    j["config"] = std::move(config);
    j["ground_energy"] = spectrum.ground_energy;
    j["degeneracy"] = spectrum.ground_degeneracy;
    j["rows"] = std::move(rows);
    emit_json(g, std::move(j));
  }
  return 0;
}

int cmd_moments(const GlobalOpts& g, const InstanceOpts& io, int r, double temperature,
                const std::string& method, int samples) {
  require_format(g, {"json"});
  auto params = ensemble_params(io, g, temperature);
  std::vector<moments::MomentResult> results;
  auto run_method = [&](const std::string& name) {
    if (name == "histogram") {
      results.push_back(moments::moment_exact_histogram(params, r, g.workers));
    } else if (name == "bruteforce") {
      results.push_back(moments::moment_bruteforce(params, r));
    } else if (name == "ensemble") {
      results.push_back(moments::moment_ensemble_enum(params, r));
    } else if (name == "mc") {
      results.push_back(moments::moment_monte_carlo(params, r, samples, g.workers, g.max_n));
    } else {
      throw std::invalid_argument("unknown --method '" + name +
                                  "' (histogram, bruteforce, ensemble, mc, both, all)");
    }
  };
  if (method == "both") {
    run_method("histogram");
    run_method("bruteforce");
  } else if (method == "all") {
    run_method("histogram");
    run_method("bruteforce");
    run_method("ensemble");
  } else {
    run_method(method);
  }

  ordered_json config = base_config(g, "moments");
  config["n"] = params.n;
  config["k"] = params.k;
  config["m"] = params.clause_count();
  config["alpha"] = params.clause_density();
  config["r"] = r;
  config["temperature"] = temperature;
  config["method"] = method;

  ordered_json j;
  j["config"] = std::move(config);
  ordered_json list = ordered_json::array();
  for (const auto& res : results) {
    ordered_json rec;
    rec["method"] = moments::method_name(res.method);
    rec["r"] = res.r;
    rec["log_moment"] = res.log_moment;
    list.push_back(std::move(rec));
  }
  j["results"] = std::move(list);
  if (results.size() > 1) {
    double max_gap = 0.0;
    for (std::size_t a = 0; a < results.size(); ++a) {
      for (std::size_t b = a + 1; b < results.size(); ++b) {
        max_gap = std::max(max_gap,
                           std::fabs(results[a].log_moment - results[b].log_moment));
      }
    }
    j["max_log_gap"] = max_gap;
    j["methods_agree"] = max_gap <= 1e-9;
    if (max_gap > 1e-9) {
      emit_json(g, std::move(j));
      throw std::logic_error("moment methods disagree beyond 1e-9 in log");
    }
  }
  emit_json(g, std::move(j));
  return 0;
}

int cmd_limitcheck(const GlobalOpts& g, const InstanceOpts& io, double temperature,
                   const std::string& r_list) {
  require_format(g, {"json", "csv"});
  auto inst = load_or_generate(io, g);
  auto rs = parse_double_list(r_list, "--r-list");
  auto rows = moments::log_limit_check(inst, temperature, rs, g.max_n);
  double log_z = thermo::partition_function(inst, temperature, g.max_n).log_z;

  ordered_json config = base_config(g, "limitcheck");
  config.update(instance_config(inst));
  config["temperature"] = temperature;
  if (g.format == "csv") {
    std::vector<std::string> csv_rows;
    for (const auto& row : rows) {
      csv_rows.push_back(format_double(row.r_value) + "," + format_double(row.estimate) + "," +
                         format_double(row.abs_error));
    }
    emit_csv(g, config, "r,estimate,abs_error", csv_rows);
  } else {
    ordered_json j;
    j["config"] = std::move(config);
    j["log_z"] = log_z;
    ordered_json list = ordered_json::array();
    for (const auto& row : rows) {
      ordered_json rec;
      rec["r"] = row.r_value;
      rec["estimate"] = row.estimate;
      rec["abs_error"] = row.abs_error;
      list.push_back(std::move(rec));
    }
    j["rows"] = std::move(list);
    emit_json(g, std::move(j));
  }
  return 0;
}

int cmd_saddle(const GlobalOpts& g, double alpha, int k, double temperature, int r,
               const std::string& ansatz, int starts, std::uint64_t opt_seed) {
  require_format(g, {"json"});
  moments::SaddleOptions options;
  options.random_starts = starts;
  options.seed = opt_seed;

  ordered_json config = base_config(g, "saddle");
  config["alpha"] = alpha;
  config["k"] = k;
  config["temperature"] = temperature;
  config["r"] = r;
  config["ansatz"] = ansatz;
  config["starts"] = starts;
  config["opt_seed"] = opt_seed;

  ordered_json j;
  j["config"] = std::move(config);
  if (ansatz == "full") {
    j["result"] = saddle_json(
        moments::saddle_maximize(alpha, k, temperature, r, moments::Ansatz::FullSimplex, options));
  } else if (ansatz == "rs") {
    j["result"] = saddle_json(moments::saddle_maximize(
        alpha, k, temperature, r, moments::Ansatz::ReplicaSymmetric, options));
  } else if (ansatz == "both") {
    auto rs = moments::saddle_maximize(alpha, k, temperature, r,
                                       moments::Ansatz::ReplicaSymmetric, options);
    auto full = moments::saddle_maximize(alpha, k, temperature, r,
                                         moments::Ansatz::FullSimplex, options);
    j["replica_symmetric"] = saddle_json(rs);
    j["full_simplex"] = saddle_json(full);
    j["full_minus_rs"] = full.f_max - rs.f_max;
  } else {
    throw std::invalid_argument("--ansatz must be full, rs or both");
  }
  emit_json(g, std::move(j));
  return 0;
}

int cmd_chains(const GlobalOpts& g, std::uint64_t n, std::size_t list_limit) {
  require_format(g, {"json"});
  auto chains = groups::enumerate_chains(n);
  ordered_json config = base_config(g, "chains");
  config["n"] = n;

  ordered_json j;
  j["n"] = n;
  j["k_max"] = groups::k_max(n);
  j["chain_count"] = chains.size();
  ordered_json list = ordered_json::array();
  std::size_t shown = std::min(list_limit, chains.size());
  for (std::size_t i = 0; i < shown; ++i) {
    ordered_json rec;
    ordered_json blocks = ordered_json::array();
    for (const auto& b : chains[i].blocks) blocks.push_back(b.get_str());
    rec["blocks"] = std::move(blocks);
    ordered_json orders = ordered_json::array();
    for (const auto& o : groups::chain_group_orders(chains[i])) orders.push_back(o.get_str());
    rec["orders"] = std::move(orders);
    list.push_back(std::move(rec));
  }
  j["chains"] = std::move(list);
  j["chains_truncated"] = shown < chains.size();
  j["config"] = std::move(config);
  emit_json(g, std::move(j));
  return 0;
}

int cmd_kmax(const GlobalOpts& g, std::uint64_t n) {
  require_format(g, {"json"});
  ordered_json j;
  j["n"] = n;
  j["k_max"] = groups::k_max(n);
  j["config"] = base_config(g, "kmax");
  emit_json(g, std::move(j));
  return 0;
}

int cmd_witness(const GlobalOpts& g, int breakings) {
  require_format(g, {"json"});
  auto [n, chain] = groups::witness_n_for_k(breakings);
  ordered_json j;
  j["k"] = breakings;
  j["n"] = n.get_str();
  ordered_json blocks = ordered_json::array();
  for (const auto& b : chain.blocks) blocks.push_back(b.get_str());
  j["chain"] = std::move(blocks);
  j["valid"] = groups::chain_valid(chain).valid;
  j["config"] = base_config(g, "witness");
  emit_json(g, std::move(j));
  return 0;
}

int cmd_cayley(const GlobalOpts& g, const std::string& group_name,
               const std::string& table_file) {
  require_format(g, {"json"});
  groups::GroupTable table = [&] {
    if (!table_file.empty()) {
      std::ifstream f(table_file);
      if (!f) throw std::invalid_argument("cannot open table file '" + table_file + "'");
      nlohmann::json spec_json = nlohmann::json::parse(f);
      return groups::GroupTable::from_table(
          spec_json.get<std::vector<std::vector<int>>>());
    }
    return groups::named_group_table(group_name);
  }();
  auto embedding = groups::cayley_embed(table);

  ordered_json j;
  j["group"] = table_file.empty() ? group_name : table_file;
  j["order"] = table.order();
  j["identity"] = table.identity;
  ordered_json perms = ordered_json::array();
  for (const auto& p : embedding) perms.push_back(p.images());
  j["embedding"] = std::move(perms);
  j["verified_injective_homomorphism"] = true;  // cayley_embed throws otherwise
  j["config"] = base_config(g, "cayley");
  emit_json(g, std::move(j));
  return 0;
}

int cmd_gamma_table(const GlobalOpts& g, int n_max, const std::string& alphas) {
  require_format(g, {"json", "csv"});
  std::vector<double> extra;
  if (!alphas.empty()) extra = parse_double_list(alphas, "--alphas");
  auto rows = gammafn::gamma_factorial_table(n_max, extra);

  ordered_json config = base_config(g, "gamma-table");
  config["n_max"] = n_max;
  if (g.format == "csv") {
    std::vector<std::string> csv_rows;
    for (const auto& row : rows) {
      csv_rows.push_back(format_double(row.argument) + "," + (row.is_integer ? "1" : "0") + "," +
                         row.exact_factorial + "," + format_double(row.gamma_value) + "," +
                         (row.is_integer ? format_double(row.relative_gap) : "") + "," +
                         (row.cardinal ? "1" : "0"));
    }
    emit_csv(g, config, "argument,is_integer,exact_factorial,gamma_of_argument_plus_1,relative_gap,cardinal",
             csv_rows);
  } else {
    ordered_json j;
    j["config"] = std::move(config);
    ordered_json list = ordered_json::array();
    for (const auto& row : rows) {
      ordered_json rec;
      rec["argument"] = row.argument;
      rec["is_integer"] = row.is_integer;
      if (row.is_integer) {
        rec["exact_factorial"] = row.exact_factorial;
        rec["relative_gap"] = row.relative_gap;
      }
      rec["gamma_of_argument_plus_1"] = row.gamma_value;
      rec["cardinal"] = row.cardinal;
      list.push_back(std::move(rec));
    }
    j["rows"] = std::move(list);
    emit_json(g, std::move(j));
  }
  return 0;
}

ordered_json curve_json(const threshold::ThresholdCurve& curve) {
  ordered_json list = ordered_json::array();
  for (const auto& pt : curve.points) {
    ordered_json rec;
    rec["alpha"] = pt.alpha;
    rec["m"] = pt.m;
    rec["sat_count"] = pt.sat_count;
    rec["samples"] = pt.samples;
    rec["p_sat"] = pt.p_sat;
    rec["wilson_low"] = pt.wilson_low;
    rec["wilson_high"] = pt.wilson_high;
    list.push_back(std::move(rec));
  }
  return list;
}

int cmd_threshold(const GlobalOpts& g, int k, int n, const std::string& grid_text, int samples,
                  bool fit, const std::string& export_dir) {
  require_format(g, {"json", "csv"});
  auto grid = parse_grid(grid_text, "--grid");
  auto curve = threshold::p_sat_curve(k, n, grid, samples, g.seed, g.workers);

  if (!export_dir.empty()) {
    // Re-derive each sampled instance (generation is deterministic) and dump
    // the unsatisfiable ones for external-solver cross-checks.
    std::filesystem::create_directories(export_dir);
    std::vector<int> counts;
    for (const auto& pt : curve.points) counts.push_back(pt.m);
    for (int j = 0; j < samples; ++j) {
      SplitMix64 rng(derive_stream_seed(g.seed, j));
      auto stream = ksat::generate_clauses(n, k, counts.back(), rng);
      for (std::size_t p = 0; p < counts.size(); ++p) {
        std::vector<ksat::Clause> prefix(stream.begin(), stream.begin() + counts[p]);
        ksat::KSatInstance inst(n, k, std::move(prefix));
        if (!threshold::dpll_solve(inst).satisfiable) {
          std::ostringstream name;
          name << export_dir << "/unsat_alpha" << format_double(curve.points[p].alpha)
               << "_sample" << j << ".cnf";
          std::ofstream f(name.str());
          f << ksat::export_dimacs(inst);
        }
      }
    }
  }

  ordered_json config = base_config(g, "threshold");
  config["k"] = k;
  config["n"] = n;
  config["samples"] = samples;
  config["grid"] = grid;

  if (g.format == "csv") {
    std::vector<std::string> csv_rows;
    for (const auto& pt : curve.points) {
      csv_rows.push_back(format_double(pt.alpha) + "," + std::to_string(pt.m) + "," +
                         std::to_string(pt.sat_count) + "," + std::to_string(pt.samples) + "," +
                         format_double(pt.p_sat) + "," + format_double(pt.wilson_low) + "," +
                         format_double(pt.wilson_high));
    }
    emit_csv(g, config, "alpha,m,sat_count,samples,p_sat,wilson_low,wilson_high", csv_rows);
    return 0;
  }

  ordered_json j;
  j["config"] = std::move(config);
  j["curve"] = curve_json(curve);
  if (fit) {
    auto est = threshold::estimate_threshold(curve);
    ordered_json e;
    e["alpha_half"] = est.alpha_half;
    e["ci_low"] = est.ci_low;
    e["ci_high"] = est.ci_high;
    e["logistic_intercept"] = est.fit.intercept;
    e["logistic_slope"] = est.fit.slope;
    e["monotone_within_noise"] = est.monotone_within_noise;
    j["estimate"] = std::move(e);
  }
  emit_json(g, std::move(j));
  return 0;
}

int cmd_energy_scan(const GlobalOpts& g, int k, int n, const std::string& grid_text,
                    int samples) {
  require_format(g, {"json", "csv"});
  auto grid = parse_grid(grid_text, "--grid");
  threshold::MaxSatOptions options;
  options.exhaustive_max_n = g.max_n;
  auto scan = threshold::energy_density_scan(k, n, grid, samples, g.seed, g.workers, options);

  ordered_json config = base_config(g, "energy-scan");
  config["k"] = k;
  config["n"] = n;
  config["samples"] = samples;
  config["grid"] = grid;

  if (g.format == "csv") {
    std::vector<std::string> csv_rows;
    for (const auto& pt : scan.points) {
      csv_rows.push_back(format_double(pt.alpha) + "," + std::to_string(pt.m) + "," +
                         format_double(pt.mean_density) + "," + format_double(pt.std_error) +
                         "," + std::to_string(pt.unsat_samples));
    }
    emit_csv(g, config, "alpha,m,mean_density,std_error,unsat_samples", csv_rows);
  } else {
    ordered_json j;
    j["config"] = std::move(config);
    ordered_json list = ordered_json::array();
    for (const auto& pt : scan.points) {
      ordered_json rec;
      rec["alpha"] = pt.alpha;
      rec["m"] = pt.m;
      rec["mean_density"] = pt.mean_density;
      rec["std_error"] = pt.std_error;
      rec["unsat_samples"] = pt.unsat_samples;
      list.push_back(std::move(rec));
    }
    j["points"] = std::move(list);
    emit_json(g, std::move(j));
  }
  return 0;
}

int cmd_average(const GlobalOpts& g, const InstanceOpts& io, const std::string& estimator,
                double temperature, int samples) {
  require_format(g, {"json"});
  auto params = ensemble_params(io, g, temperature);
  auto est = thermo::estimator_from_name(estimator);
  auto avg = thermo::disorder_average(est, params, samples, g.workers, g.max_n);

  ordered_json config = base_config(g, "average");
  config["n"] = params.n;
  config["k"] = params.k;
  config["m"] = params.clause_count();
  config["alpha"] = params.clause_density();
  config["temperature"] = temperature;
  config["estimator"] = estimator;
  config["samples"] = samples;

  ordered_json j;
  j["config"] = std::move(config);
  j["mean"] = avg.mean;
  if (std::isnan(avg.std_error)) {
    j["std_error"] = nullptr;
  } else {
    j["std_error"] = avg.std_error;
  }
  j["samples"] = avg.samples;
  emit_json(g, std::move(j));
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"replica_lab: exact finite-size laboratory for random k-SAT ensembles"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file merged under explicit flags (flags win)");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master RNG seed");
  app.add_option("--workers", g.workers, "worker threads for sample-parallel runs")
      ->envname("REPLICA_LAB_WORKERS")
      ->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", g.deterministic, "omit the timestamp field from outputs");
  app.add_option("--out", g.out, "output file (default stdout)");
  app.add_option("--format", g.format, "output format: json, csv or (gen) dimacs");
  app.add_option("--max-n-exhaustive", g.max_n,
                 "upper bound on n for 2^n exhaustive enumeration");

  InstanceOpts gen_io;
  auto* gen = app.add_subcommand("gen", "generate an instance and print DIMACS or JSON");
  gen->fallthrough();
  add_instance_options(gen, gen_io, false);

  InstanceOpts energy_io;
  std::string energy_assign;
  auto* energy = app.add_subcommand("energy", "exact energy / ground state of one instance");
  energy->fallthrough();
  add_instance_options(energy, energy_io);
  energy->add_option("--assign", energy_assign, "comma-separated spins (+1/-1); "
                                                "evaluates H and the direct recount");

  InstanceOpts partition_io;
  std::string partition_temps = "1";
  auto* partition = app.add_subcommand("partition", "log Z, F and <H> on a temperature grid");
  partition->fallthrough();
  add_instance_options(partition, partition_io);
  partition->add_option("--temps", partition_temps, "comma-separated temperatures");

  InstanceOpts moments_io;
  int moments_r = 1;
  double moments_temp = 1.0;
  std::string moments_method = "histogram";
  int moments_samples = 1000;
  auto* momentsc = app.add_subcommand("moments", "integer-replica moment of the ensemble");
  momentsc->fallthrough();
  add_instance_options(momentsc, moments_io, false);
  momentsc->add_option("--r", moments_r, "replica count (integer >= 0)");
  momentsc->add_option("--temp", moments_temp, "temperature");
  momentsc->add_option("--method", moments_method,
                       "histogram | bruteforce | ensemble | mc | both | all");
  momentsc->add_option("--samples", moments_samples, "samples for --method mc");

  InstanceOpts limit_io;
  double limit_temp = 1.0;
  std::string limit_rs = "0.1,0.01,0.001,0.0001,0.00001,0.000001";
  auto* limitcheck = app.add_subcommand("limitcheck", "(Z^r-1)/r table against ln Z");
  limitcheck->fallthrough();
  add_instance_options(limitcheck, limit_io);
  limitcheck->add_option("--temp", limit_temp, "temperature");
  limitcheck->add_option("--r-list", limit_rs, "decreasing positive r values");

  double saddle_alpha = 1.0, saddle_temp = 1.0;
  int saddle_k = 2, saddle_r = 2, saddle_starts = 8;
  std::uint64_t saddle_seed = 0x5EED5EEDull;
  std::string saddle_ansatz = "both";
  auto* saddle = app.add_subcommand("saddle", "maximize the rate function on the simplex");
  saddle->fallthrough();
  saddle->add_option("--alpha", saddle_alpha, "clause density");
  saddle->add_option("--k", saddle_k, "literals per clause");
  saddle->add_option("--temp", saddle_temp, "temperature");
  saddle->add_option("--r", saddle_r, "replica count (>= 1)");
  saddle->add_option("--ansatz", saddle_ansatz, "full | rs | both");
  saddle->add_option("--starts", saddle_starts, "random multi-start count");
  saddle->add_option("--opt-seed", saddle_seed, "optimizer start seed");

  std::uint64_t chains_n = 12;
  std::size_t chains_limit = 1000;
  auto* chains = app.add_subcommand("chains", "enumerate symmetry-breaking chains");
  chains->fallthrough();
  chains->add_option("--n", chains_n, "system size")->required();
  chains->add_option("--list-limit", chains_limit, "maximum chains listed in the output");

  std::uint64_t kmax_n = 12;
  auto* kmax = app.add_subcommand("kmax", "maximum breaking-chain length");
  kmax->fallthrough();
  kmax->add_option("--n", kmax_n, "system size")->required();

  int witness_k = 0;
  auto* witness = app.add_subcommand("witness", "system size admitting k+1 nested breakings");
  witness->fallthrough();
  witness->add_option("--k", witness_k, "breaking count")->required();

  std::string cayley_group = "s3", cayley_table;
  auto* cayley = app.add_subcommand("cayley", "left-translation embedding of a finite group");
  cayley->fallthrough();
  cayley->add_option("--group", cayley_group, "c2..c8, klein4, s3, d4, q8");
  cayley->add_option("--table", cayley_table, "JSON file with a composition table");

  int gamma_nmax = 20;
  std::string gamma_alphas = "0.5,1.5,2.5";
  auto* gamma_table = app.add_subcommand("gamma-table", "n!, Gamma(n+1) and their gap");
  gamma_table->fallthrough();
  gamma_table->add_option("--n-max", gamma_nmax, "largest integer row (<= 170)");
  gamma_table->add_option("--alphas", gamma_alphas, "non-integer display rows");

  int thr_k = 3, thr_n = 20, thr_samples = 200;
  std::string thr_grid = "3.0:6.0:0.25";
  bool thr_no_fit = false;
  std::string thr_export;
  auto* thresholdc = app.add_subcommand("threshold", "P(sat) curve and alpha_half estimate");
  thresholdc->fallthrough();
  thresholdc->add_option("--k", thr_k, "literals per clause");
  thresholdc->add_option("--n", thr_n, "variable count");
  thresholdc->add_option("--grid", thr_grid, "alpha grid: lo:hi:step or comma list");
  thresholdc->add_option("--samples", thr_samples, "instances per grid point");
  thresholdc->add_flag("--no-fit", thr_no_fit, "skip the logistic fit");
  thresholdc->add_option("--export-failures", thr_export,
                         "directory for DIMACS dumps of unsatisfiable samples");

  int scan_k = 3, scan_n = 16, scan_samples = 200;
  std::string scan_grid = "0:8:1";
  auto* scan = app.add_subcommand("energy-scan", "ground-energy density across alpha");
  scan->fallthrough();
  scan->add_option("--k", scan_k, "literals per clause");
  scan->add_option("--n", scan_n, "variable count");
  scan->add_option("--grid", scan_grid, "alpha grid: lo:hi:step or comma list");
  scan->add_option("--samples", scan_samples, "instances per grid point");

  InstanceOpts avg_io;
  std::string avg_estimator = "log_z";
  double avg_temp = 1.0;
  int avg_samples = 100;
  auto* average = app.add_subcommand("average", "disorder average of an estimator");
  average->fallthrough();
  add_instance_options(average, avg_io, false);
  average->add_option("--estimator", avg_estimator,
                      "log_z | free_energy | thermal_energy | ground_energy_density");
  average->add_option("--temp", avg_temp, "temperature");
  average->add_option("--samples", avg_samples, "instance count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(g, gen_io, g.format == "json" ? "json" : "dimacs");
    if (energy->parsed()) return cmd_energy(g, energy_io, energy_assign);
    if (partition->parsed()) return cmd_partition(g, partition_io, partition_temps);
    if (momentsc->parsed()) {
      return cmd_moments(g, moments_io, moments_r, moments_temp, moments_method,
                         moments_samples);
    }
    if (limitcheck->parsed()) return cmd_limitcheck(g, limit_io, limit_temp, limit_rs);
    if (saddle->parsed()) {
      return cmd_saddle(g, saddle_alpha, saddle_k, saddle_temp, saddle_r, saddle_ansatz,
                        saddle_starts, saddle_seed);
    }
    if (chains->parsed()) return cmd_chains(g, chains_n, chains_limit);
    if (kmax->parsed()) return cmd_kmax(g, kmax_n);
    if (witness->parsed()) return cmd_witness(g, witness_k);
    if (cayley->parsed()) return cmd_cayley(g, cayley_group, cayley_table);
    if (gamma_table->parsed()) return cmd_gamma_table(g, gamma_nmax, gamma_alphas);
    if (thresholdc->parsed()) {
      return cmd_threshold(g, thr_k, thr_n, thr_grid, thr_samples, !thr_no_fit, thr_export);
    }
    if (scan->parsed()) return cmd_energy_scan(g, scan_k, scan_n, scan_grid, scan_samples);
    if (average->parsed()) {
      return cmd_average(g, avg_io, avg_estimator, avg_temp, avg_samples);
    }
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::logic_error& e) {
    std::cerr << "internal assertion failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back("replica_lab");
  for (const auto& a : args) storage.push_back(a);
  std::vector<const char*> argv;
  argv.reserve(storage.size());
  for (const auto& s : storage) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace replica_lab::cli
