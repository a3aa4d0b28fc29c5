#include "blqr/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "blqr/csv.hpp"
#include "blqr/error.hpp"

namespace blqr {

PriorSpec PriorOverrides::build(Eigen::Index k, Eigen::Index l) const {
  PriorSpec p = PriorSpec::defaults(k, l);
  if (beta0) p.beta0 = Eigen::VectorXd::Constant(k, *beta0);
  if (b0_diag) p.B0 = SpdMatrix::scaled_identity(k, *b0_diag);
  if (nu0) p.nu0 = *nu0;
  if (l > 0 && d0_diag) p.D0 = SpdMatrix::scaled_identity(l, *d0_diag);
  if (c0) p.c0 = *c0;
  if (d0) p.d0 = *d0;
  p.validate(k, l);
  return p;
}

void RunManifest::validate() const {
  if (model != "mean" && model != "quantile")
    throw ConfigError("model must be 'mean' or 'quantile', got '" + model + "'");
  if (model == "quantile") {
    if (quantiles.empty()) throw ConfigError("quantile model needs at least one level");
    for (double p : quantiles)
      if (!(p > 0.0 && p < 1.0))
        throw ConfigError("quantile level " + fmt_double(p) + " outside (0,1)");
  } else if (!quantiles.empty()) {
    throw ConfigError("quantile levels are only valid with model = quantile");
  }
  if (input.empty()) throw ConfigError("config is missing 'input'");
  if (recipe.response.col.empty()) throw ConfigError("config is missing 'response'");
  run.validate();
}

namespace {

std::string term_list(const std::vector<Term>& terms) {
  std::string out;
  for (const auto& t : terms) {
    if (!out.empty()) out += " ";
    out += t.name();
  }
  return out;
}

}  // namespace

std::string canonical_manifest(const RunManifest& m) {
  std::ostringstream out;
  out << "burn_in=" << m.run.burn_in << "\n";
  for (const auto& cat : m.recipe.categoricals) out << "categorical=" << cat << "\n";
  out << "fixed=" << term_list(m.recipe.fixed) << "\n";
  out << "include_random_effects=" << (m.run.include_random_effects ? "true" : "false")
      << "\n";
  out << "input=" << m.input << "\n";
  out << "iterations=" << m.run.iterations << "\n";
  out << "model=" << m.model << "\n";
  for (const auto& [col, level] : m.recipe.omitted)
    out << "omit." << col << "=" << level << "\n";
  if (m.priors.beta0) out << "prior.beta0=" << fmt_double(*m.priors.beta0) << "\n";
  if (m.priors.b0_diag) out << "prior.b0_diag=" << fmt_double(*m.priors.b0_diag) << "\n";
  if (m.priors.c0) out << "prior.c0=" << fmt_double(*m.priors.c0) << "\n";
  if (m.priors.d0) out << "prior.d0=" << fmt_double(*m.priors.d0) << "\n";
  if (m.priors.d0_diag) out << "prior.d0_diag=" << fmt_double(*m.priors.d0_diag) << "\n";
  if (m.priors.nu0) out << "prior.nu0=" << fmt_double(*m.priors.nu0) << "\n";
  if (!m.quantiles.empty()) {
    out << "quantiles=";
    for (std::size_t i = 0; i < m.quantiles.size(); ++i)
      out << (i ? " " : "") << fmt_double(m.quantiles[i]);
    out << "\n";
  }
  std::string rnd;
  for (const auto& r : m.recipe.random) {
    if (!rnd.empty()) rnd += " ";
    rnd += r;
  }
  out << "random=" << rnd << "\n";
  out << "response=" << m.recipe.response.name() << "\n";
  out << "seed=" << m.run.seed << "\n";
  out << "thin=" << m.run.thin << "\n";
  return out.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t manifest_hash(const RunManifest& m) { return fnv1a64(canonical_manifest(m)); }

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::int64_t parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    std::int64_t x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    std::uint64_t x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
}

}  // namespace

RunManifest parse_config_text(const std::string& text, const std::string& origin) {
  RunManifest m;
  m.model.clear();
  bool have_random_key = false;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");

    if (key == "model") m.model = value;
    else if (key == "quantiles") {
      for (const auto& w : split_ws(value))
        m.quantiles.push_back(parse_double(w, "quantiles"));
    } else if (key == "input") m.input = value;
    else if (key == "output") m.outdir = value;
    else if (key == "iterations") m.run.iterations = parse_int(value, key);
    else if (key == "burn_in") m.run.burn_in = parse_int(value, key);
    else if (key == "thin") m.run.thin = parse_int(value, key);
    else if (key == "seed") m.run.seed = parse_u64(value, key);
    else if (key == "threads") m.run.thread_count = static_cast<int>(parse_int(value, key));
    else if (key == "include_random_effects")
      m.run.include_random_effects = parse_bool(value, key);
    else if (key == "response") m.recipe.response = parse_term(value);
    else if (key == "fixed") {
      for (const auto& w : split_ws(value)) m.recipe.fixed.push_back(parse_term(w));
    } else if (key == "random") {
      have_random_key = true;
      for (const auto& w : split_ws(value)) m.recipe.random.push_back(w);
    } else if (key == "categorical") {
      for (const auto& w : split_ws(value)) m.recipe.categoricals.push_back(w);
    } else if (key.rfind("omit.", 0) == 0) {
      std::string col = key.substr(5);
      if (col.empty()) throw ConfigError(origin + ": omit. needs a column name");
      m.recipe.omitted[col] = value;
    } else if (key == "prior.beta0") m.priors.beta0 = parse_double(value, key);
    else if (key == "prior.b0_diag") m.priors.b0_diag = parse_double(value, key);
    else if (key == "prior.nu0") m.priors.nu0 = parse_double(value, key);
    else if (key == "prior.d0_diag") m.priors.d0_diag = parse_double(value, key);
    else if (key == "prior.c0") m.priors.c0 = parse_double(value, key);
    else if (key == "prior.d0") m.priors.d0 = parse_double(value, key);
    else throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
  }

  // Default random-effect recipe: intercept always; an income column entering
  // through the inverse hyperbolic sine also gets an individual slope.
  if (!have_random_key) {
    for (const auto& t : m.recipe.fixed)
      if (t.kind == Term::Kind::Ihs && t.col == "income") {
        m.recipe.random.push_back(t.name());
        break;
      }
  }
  return m;
}

RunManifest parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace blqr
