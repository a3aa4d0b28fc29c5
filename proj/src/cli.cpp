#include "blqr/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "blqr/chain_format.hpp"
#include "blqr/csv.hpp"
#include "blqr/error.hpp"
#include "blqr/gibbs.hpp"
#include "blqr/manifest.hpp"
#include "blqr/model_fit.hpp"
#include "blqr/recipe.hpp"
#include "blqr/synthetic.hpp"

namespace blqr {

namespace {

namespace fs = std::filesystem;

// Directory tag for one chain: "mean", or pNN from the quantile level
// ("p20", "p50", "p12_5" for p = 0.125).
std::string quantile_tag(double p) {
  double v = p * 100.0;
  double r = std::round(v);
  std::string s;
  if (std::abs(v - r) < 1e-9) {
    s = std::to_string(static_cast<long long>(r));
  } else {
    s = fmt_double(v);
    for (auto& c : s) {
      if (c == '.') c = '_';
    }
  }
  return "p" + s;
}

void atomic_write_text(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + " to " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory: " + dir.string());
}

// Parameter names may contain commas (scale terms); keep the CSV splittable.
std::string csv_safe_name(std::string name) {
  for (auto& c : name) {
    if (c == ',') c = ';';
  }
  return name;
}

std::string summary_csv_text(const SummaryTable& table, std::uint64_t hash) {
  std::string out = "# manifest=" + hash_hex(hash) + "\n";
  out += "parameter,mean,std\n";
  for (const auto& r : table.rows)
    out += csv_safe_name(r.name) + "," + fmt_double(r.mean) + "," + fmt_double(r.std) + "\n";
  return out;
}

std::string fit_csv_text(const ChainResult& chain, const FitReport& rep, std::uint64_t hash) {
  std::string out = "# manifest=" + hash_hex(hash) + "\n";
  out += "model,p,include_random_effects,n,T,k,l,df,log_lik,caic,cbic\n";
  out += chain.model + ",";
  out += (std::isnan(chain.p) ? std::string() : fmt_double(chain.p)) + ",";
  out += std::string(chain.include_random_effects ? "true" : "false") + ",";
  out += std::to_string(chain.n) + "," + std::to_string(chain.T) + ",";
  out += std::to_string(chain.k) + "," + std::to_string(chain.l) + ",";
  out += fmt_double(rep.df) + "," + fmt_double(rep.log_l) + ",";
  out += fmt_double(rep.caic) + "," + fmt_double(rep.cbic) + "\n";
  return out;
}

void apply_thread_env(RunConfig& run) {
  const char* env = std::getenv("BLQR_THREADS");
  if (env == nullptr || *env == '\0') return;
  int v = 0;
  auto res = std::from_chars(env, env + std::strlen(env), v);
  if (res.ec != std::errc() || *res.ptr != '\0' || v < 1)
    throw ConfigError("BLQR_THREADS must be a positive integer, got '" + std::string(env) +
                      "'");
  run.thread_count = v;
}

// ---------------------------------------------------------------- fit ----

struct FitArgs {
  std::string config_path;
  std::string model;
  std::vector<double> quantiles;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  bool threads_given = false;
  bool no_random_effects = false;
  std::string outdir;
};

void run_fit(const FitArgs& a, std::ostream& out) {
  RunManifest m = parse_config_file(a.config_path);
  if (!a.model.empty()) {
    m.model = a.model;
    if (m.model == "mean") m.quantiles.clear();
  }
  if (!a.quantiles.empty()) m.quantiles = a.quantiles;
  if (a.seed_given) m.run.seed = a.seed;
  if (a.threads_given) m.run.thread_count = a.threads;
  if (a.no_random_effects) m.run.include_random_effects = false;
  if (!a.outdir.empty()) m.outdir = a.outdir;
  apply_thread_env(m.run);
  m.validate();

  // Relative input paths resolve against the config file's directory, so a
  // generated run.cfg works from any working directory.
  fs::path input(m.input);
  if (input.is_relative()) input = fs::path(a.config_path).parent_path() / input;

  RawTable table = read_csv_file(input.string());
  PanelDataset data = build_design(table, m.recipe);
  PriorSpec priors = m.priors.build(data.k(), data.l());
  const std::uint64_t hash = manifest_hash(m);
  const std::string echo = canonical_manifest(m);

  out << "panel: n=" << data.n() << " T=" << data.T() << " k=" << data.k()
      << " l=" << data.l() << "\n";

  struct Job {
    std::string tag;
    double p;
  };
  std::vector<Job> jobs;
  if (m.model == "mean") {
    jobs.push_back({"mean", std::numeric_limits<double>::quiet_NaN()});
  } else {
    std::set<std::string> seen;
    for (double p : m.quantiles) {
      std::string tag = quantile_tag(p);
      if (seen.insert(tag).second) jobs.push_back({tag, p});
    }
  }

  for (const auto& job : jobs) {
    ChainResult chain;
    if (m.model == "mean") {
      Rng rng(m.run.seed, kMeanChainSalt);
      chain = run_mean_gibbs(data, priors, m.run, rng);
    } else {
      Rng rng(m.run.seed, quantile_chain_salt(job.p));
      chain = run_quantile_gibbs(data, priors, job.p, m.run, rng);
    }

    fs::path dir = fs::path(m.outdir) / job.tag;
    make_dirs(dir);
    write_chain((dir / "chain.bin").string(), chain, hash, echo);
    SummaryTable table_out = summarize(chain);
    atomic_write_text(dir / "summary.csv", summary_csv_text(table_out, hash));
    FitReport rep = fit_report(chain, data);
    atomic_write_text(dir / "fit.csv", fit_csv_text(chain, rep, hash));
    for (const auto& row : table_out.rows) {
      fs::path trace = dir / ("trace_" + sanitize_param_name(row.name) + ".csv");
      write_trace_csv(trace.string(), chain, row.name, hash);
    }

    char timing[64];
    std::snprintf(timing, sizeof(timing), "%.1f", chain.elapsed_seconds);
    out << job.tag << ": " << chain.draw_count() << " draws -> " << dir.string() << " ("
        << timing << " s)\n";
  }
}

// ----------------------------------------------------------- simulate ----

Eigen::VectorXd default_beta(Eigen::Index k) {
  Eigen::VectorXd b(k);
  b(0) = 2.0;
  for (Eigen::Index j = 1; j < k; ++j) {
    double mag = 1.0 + 0.5 * static_cast<double>(j);
    b(j) = (j % 2 == 0) ? mag : -mag;
  }
  return b;
}

SpdMatrix default_sigma(Eigen::Index l) {
  auto sd = [](Eigen::Index i) { return std::max(0.4, 1.0 - 0.2 * static_cast<double>(i)); };
  Eigen::MatrixXd m(l, l);
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index j = 0; j < l; ++j)
      m(i, j) = (i == j) ? sd(i) * sd(i) : 0.3 * sd(i) * sd(j);
  return SpdMatrix(m);
}

struct SimArgs {
  std::string model;
  double p = 0.5;
  long long n = 0, T = 0;
  long long k = 2, l = 1;
  double h = 4.0;
  std::uint64_t seed = 0;
  std::string outdir = "sim";
};

void run_simulate(const SimArgs& a, std::ostream& out) {
  if (a.n < 1 || a.T < 1) throw ConfigError("simulate: --n and --T must be at least 1");
  if (a.k < 1) throw ConfigError("simulate: --k must be at least 1");
  if (a.l < 0 || a.l > a.k) throw ConfigError("simulate: --l must lie in [0, k]");
  if (!(a.h > 0.0)) throw ConfigError("simulate: --h must be positive");

  TruthSpec truth;
  truth.beta_true = default_beta(a.k);
  if (a.l > 0) truth.Sigma_true = default_sigma(a.l);
  truth.h_true = a.h;
  truth.n = a.n;
  truth.T = a.T;
  const bool quant = a.model == "quantile";
  if (quant) truth.p = a.p;
  truth.validate(quant);

  Rng master(a.seed, kSimChainSalt);
  SyntheticPanel panel = quant ? gen_quant_panel(truth, master) : gen_mean_panel(truth, master);
  const PanelDataset& d = panel.data;

  fs::path dir(a.outdir);
  make_dirs(dir);

  // Ingestion-format CSV: raw covariates only; the intercept is rebuilt by
  // the recipe in run.cfg.
  std::string csv = "id,period,y";
  for (Eigen::Index j = 1; j < d.k(); ++j) csv += ",x" + std::to_string(j);
  csv += "\n";
  for (Eigen::Index i = 0; i < d.n(); ++i)
    for (Eigen::Index t = 0; t < d.T(); ++t) {
      Eigen::Index row = i * d.T() + t;
      csv += d.ids()[static_cast<std::size_t>(i)] + "," + std::to_string(t + 1);
      csv += "," + fmt_double(d.y()(row));
      for (Eigen::Index j = 1; j < d.k(); ++j) csv += "," + fmt_double(d.X()(row, j));
      csv += "\n";
    }
  atomic_write_text(dir / "panel.csv", csv);

  nlohmann::json truth_json;
  truth_json["model"] = a.model;
  if (quant) truth_json["p"] = a.p;
  truth_json["n"] = a.n;
  truth_json["T"] = a.T;
  truth_json["h_true"] = a.h;
  truth_json["seed"] = a.seed;
  truth_json["beta_true"] =
      std::vector<double>(truth.beta_true.data(), truth.beta_true.data() + truth.beta_true.size());
  if (a.l > 0) {
    std::vector<std::vector<double>> sig;
    for (Eigen::Index i = 0; i < a.l; ++i) {
      std::vector<double> rowv;
      for (Eigen::Index j = 0; j < a.l; ++j) rowv.push_back(truth.Sigma_true.mat()(i, j));
      sig.push_back(std::move(rowv));
    }
    truth_json["sigma_true"] = sig;
  }
  atomic_write_text(dir / "truth.json", truth_json.dump(2) + "\n");

  std::string cfg = "# run configuration for the generated panel\n";
  cfg += "model = " + a.model + "\n";
  if (quant) cfg += "quantiles = " + fmt_double(a.p) + "\n";
  cfg += "input = panel.csv\n";
  cfg += "response = y\n";
  std::string fixed;
  for (Eigen::Index j = 1; j < d.k(); ++j) fixed += (j > 1 ? " " : "") + ("x" + std::to_string(j));
  cfg += "fixed = " + fixed + "\n";
  std::string random;
  for (Eigen::Index j = 1; j < a.l; ++j) random += (j > 1 ? " " : "") + ("x" + std::to_string(j));
  cfg += "random = " + random + "\n";
  cfg += "seed = " + std::to_string(a.seed) + "\n";
  atomic_write_text(dir / "run.cfg", cfg);

  out << "wrote " << dir.string() << ": model=" << a.model << " n=" << a.n << " T=" << a.T
      << " k=" << a.k << " l=" << a.l << "\n";
}

// ----------------------------------------------------------- summarize ----

void run_summarize(const std::string& chain_path, const std::string& config_path,
                   const std::string& out_path, std::ostream& out) {
  LoadedChain lc = read_chain(chain_path);
  if (!lc.manifest_echo.empty() && fnv1a64(lc.manifest_echo) != lc.manifest_hash)
    throw DataError("chain provenance is corrupt: stored manifest does not match its hash");
  if (!config_path.empty()) {
    RunManifest m = parse_config_file(config_path);
    std::uint64_t expect = manifest_hash(m);
    if (expect != lc.manifest_hash)
      throw DataError("chain/config mismatch: chain manifest " + hash_hex(lc.manifest_hash) +
                      ", config manifest " + hash_hex(expect) +
                      " (command-line overrides at fit time change the manifest)");
  }
  std::string text = summary_csv_text(summarize(lc.chain), lc.manifest_hash);
  if (out_path.empty())
    out << text;
  else
    atomic_write_text(out_path, text);
}

// ------------------------------------------------------------- compare ----

struct FitRow {
  std::string model;
  double p = std::numeric_limits<double>::quiet_NaN();
  bool with_re = true;
  long long n = 0, T = 0, k = 0, l = 0;
  double df = 0.0, log_lik = 0.0, caic = 0.0, cbic = 0.0;
  std::uint64_t hash = 0;
};

FitRow read_fit_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();

  FitRow row;
  bool have_hash = false;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const std::string prefix = "# manifest=";
    if (line.rfind(prefix, 0) == 0) {
      row.hash = std::stoull(line.substr(prefix.size()), nullptr, 16);
      have_hash = true;
      break;
    }
  }
  if (!have_hash) throw DataError(path + ": missing '# manifest=' line");

  std::istringstream body(text);
  RawTable t = read_csv(body, path);
  if (t.rows.size() != 1) throw DataError(path + ": expected exactly one data row");
  auto cell = [&](const char* name) -> const std::string& {
    int j = t.col_index(name);
    if (j < 0) throw DataError(path + ": missing column '" + name + "'");
    return t.rows[0][static_cast<std::size_t>(j)];
  };
  row.model = cell("model");
  const std::string& pcell = cell("p");
  if (!pcell.empty()) row.p = parse_double(pcell, path + ":p");
  const std::string& re = cell("include_random_effects");
  if (re == "true")
    row.with_re = true;
  else if (re == "false")
    row.with_re = false;
  else
    throw DataError(path + ": include_random_effects must be true/false, got '" + re + "'");
  row.n = static_cast<long long>(parse_double(cell("n"), path + ":n"));
  row.T = static_cast<long long>(parse_double(cell("T"), path + ":T"));
  row.k = static_cast<long long>(parse_double(cell("k"), path + ":k"));
  row.l = static_cast<long long>(parse_double(cell("l"), path + ":l"));
  row.df = parse_double(cell("df"), path + ":df");
  row.log_lik = parse_double(cell("log_lik"), path + ":log_lik");
  row.caic = parse_double(cell("caic"), path + ":caic");
  row.cbic = parse_double(cell("cbic"), path + ":cbic");
  return row;
}

std::string row_tag(const FitRow& r) {
  return r.model == "mean" ? "mean" : quantile_tag(r.p);
}

// One fit directory: either a single chain directory holding fit.csv, or a
// fit output root whose subdirectories hold them.
std::map<std::string, FitRow> read_fit_dir(const std::string& dir) {
  fs::path root(dir);
  if (!fs::is_directory(root)) throw DataError("not a directory: " + dir);
  std::map<std::string, FitRow> rows;
  if (fs::exists(root / "fit.csv")) {
    FitRow r = read_fit_csv((root / "fit.csv").string());
    rows[row_tag(r)] = r;
    return rows;
  }
  std::vector<fs::path> subs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "fit.csv")) subs.push_back(e.path());
  std::sort(subs.begin(), subs.end());
  for (const auto& sub : subs) {
    FitRow r = read_fit_csv((sub / "fit.csv").string());
    rows[row_tag(r)] = r;
  }
  if (rows.empty()) throw DataError("no fit.csv found under " + dir);
  return rows;
}

std::uint64_t dir_hash(const std::map<std::string, FitRow>& rows, const std::string& dir) {
  std::uint64_t h = rows.begin()->second.hash;
  for (const auto& [tag, r] : rows)
    if (r.hash != h)
      throw DataError(dir + " mixes chains from different runs (manifest hashes differ)");
  return h;
}

void run_compare(const std::string& dir_with, const std::string& dir_without,
                 const std::string& out_path, std::ostream& out) {
  auto with_rows = read_fit_dir(dir_with);
  auto without_rows = read_fit_dir(dir_without);
  std::uint64_t hash_with = dir_hash(with_rows, dir_with);
  std::uint64_t hash_without = dir_hash(without_rows, dir_without);

  for (const auto& [tag, r] : with_rows)
    if (!r.with_re)
      throw DataError(dir_with + "/" + tag +
                      ": first directory must hold fits with individual effects included");
  for (const auto& [tag, r] : without_rows)
    if (r.with_re)
      throw DataError(dir_without + "/" + tag +
                      ": second directory must hold fits with individual effects excluded");

  struct Pair {
    std::string tag;
    FitRow a, b;
  };
  std::vector<Pair> pairs;
  for (const auto& [tag, r] : with_rows) {
    auto it = without_rows.find(tag);
    if (it == without_rows.end()) continue;
    const FitRow& o = it->second;
    if (r.model != o.model || r.n != o.n || r.T != o.T || r.k != o.k)
      throw DataError("chain pair '" + tag + "' was not fit on the same data layout");
    pairs.push_back({tag, r, o});
  }
  if (pairs.empty())
    throw DataError("no common chains between " + dir_with + " and " + dir_without);
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    bool xm = x.a.model == "mean", ym = y.a.model == "mean";
    if (xm != ym) return xm;
    return x.a.p < y.a.p;
  });

  std::string text = "# manifest_with_re=" + hash_hex(hash_with) + "\n";
  text += "# manifest_without_re=" + hash_hex(hash_without) + "\n";
  text += "p,statistic,with_re,without_re\n";
  for (const auto& pr : pairs) {
    std::string p = pr.a.model == "mean" ? "mean" : fmt_double(pr.a.p);
    text += p + ",log_lik," + fmt_double(pr.a.log_lik) + "," + fmt_double(pr.b.log_lik) + "\n";
    text += p + ",caic," + fmt_double(pr.a.caic) + "," + fmt_double(pr.b.caic) + "\n";
    text += p + ",cbic," + fmt_double(pr.a.cbic) + "," + fmt_double(pr.b.cbic) + "\n";
  }
  atomic_write_text(out_path, text);
  out << "wrote " << out_path << " (" << pairs.size() << " chain pairs)\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian mixed-effects mean and quantile regression for balanced panels"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Run the Gibbs sampler(s) on a panel");
  fit_cmd->add_option("--config", fit_args.config_path, "Run configuration file")->required();
  fit_cmd->add_option("--model", fit_args.model, "Override model: mean or quantile")
      ->check(CLI::IsMember({"mean", "quantile"}));
  fit_cmd->add_option("--p", fit_args.quantiles, "Override quantile level(s); repeatable");
  CLI::Option* seed_opt = fit_cmd->add_option("--seed", fit_args.seed, "Override RNG seed");
  CLI::Option* threads_opt =
      fit_cmd->add_option("--threads", fit_args.threads, "Override worker thread count");
  fit_cmd->add_flag("--no-random-effects", fit_args.no_random_effects,
                    "Drop individual effects (ablation fit)");
  fit_cmd->add_option("--out", fit_args.outdir, "Override output directory");

  SimArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic panel");
  sim_cmd->add_option("--model", sim_args.model, "Data-generating model: mean or quantile")
      ->required()
      ->check(CLI::IsMember({"mean", "quantile"}));
  CLI::Option* sim_p =
      sim_cmd->add_option("--p", sim_args.p, "Quantile level of the error law (quantile model)");
  sim_cmd->add_option("--n", sim_args.n, "Number of individuals")->required();
  sim_cmd->add_option("--T", sim_args.T, "Periods per individual")->required();
  sim_cmd->add_option("--k", sim_args.k, "Design columns including the intercept");
  sim_cmd->add_option("--l", sim_args.l, "Random-effect columns (leading design columns)");
  sim_cmd->add_option("--precision", sim_args.h, "Error precision h");
  sim_cmd->add_option("--seed", sim_args.seed, "RNG seed");
  sim_cmd->add_option("--out", sim_args.outdir, "Output directory");

  std::string sum_chain, sum_config, sum_out;
  CLI::App* sum_cmd = app.add_subcommand("summarize", "Recompute the summary from a stored chain");
  sum_cmd->add_option("--chain", sum_chain, "chain.bin path")->required();
  sum_cmd->add_option("--config", sum_config, "Config file the chain must match");
  sum_cmd->add_option("--out", sum_out, "Write summary CSV here instead of stdout");

  std::string cmp_with, cmp_without, cmp_out = "compare.csv";
  CLI::App* cmp_cmd =
      app.add_subcommand("compare", "Tabulate fit statistics: with vs without individual effects");
  cmp_cmd->add_option("with_re_dir", cmp_with, "Fit directory, individual effects included")
      ->required();
  cmp_cmd->add_option("without_re_dir", cmp_without, "Fit directory, individual effects excluded")
      ->required();
  cmp_cmd->add_option("--out", cmp_out, "Output CSV path");

  std::vector<const char*> argv;
  argv.push_back("blqr");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (*fit_cmd) {
      fit_args.seed_given = seed_opt->count() > 0;
      fit_args.threads_given = threads_opt->count() > 0;
      run_fit(fit_args, out);
    } else if (*sim_cmd) {
      if (sim_args.model == "mean" && sim_p->count() > 0)
        throw ConfigError("simulate: --p is only valid with --model quantile");
      run_simulate(sim_args, out);
    } else if (*sum_cmd) {
      run_summarize(sum_chain, sum_config, sum_out, out);
    } else if (*cmp_cmd) {
      run_compare(cmp_with, cmp_without, cmp_out, out);
    }
    return 0;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "ERROR:usage:" << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "ERROR:" << e.error_class() << ":" << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "ERROR:internal:" << e.what() << "\n";
    return 3;
  }
}

}  // namespace blqr
