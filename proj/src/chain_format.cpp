#include "blqr/chain_format.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "blqr/csv.hpp"
#include "blqr/error.hpp"
#include "blqr/model_fit.hpp"

namespace blqr {

namespace {

using nlohmann::json;

json spd_to_json(const SpdMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.dim(); ++j) row.push_back(m.mat()(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

SpdMatrix spd_from_json(const json& rows) {
  Eigen::Index d = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      m(i, j) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>();
  return SpdMatrix(m);
}

void append_block(std::vector<double>& payload, json& blocks, const std::string& name,
                  const Eigen::MatrixXd& m) {
  blocks.push_back({{"name", name},
                    {"rows", static_cast<std::int64_t>(m.rows())},
                    {"cols", static_cast<std::int64_t>(m.cols())}});
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) payload.push_back(m(r, c));
}

Eigen::MatrixXd take_block(const double*& cursor, const double* end, const json& spec) {
  Eigen::Index rows = spec.at("rows").get<std::int64_t>();
  Eigen::Index cols = spec.at("cols").get<std::int64_t>();
  if (end - cursor < rows * cols) throw DataError("chain file truncated");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = *cursor++;
  return m;
}

}  // namespace

void write_chain(const std::string& path, const ChainResult& chain,
                 std::uint64_t manifest_hash, const std::string& manifest_echo) {
  json header;
  header["format"] = "blqr-chain";
  header["format_version"] = kChainFormatVersion;
  header["code_version"] = kCodeVersion;
  header["model"] = chain.model;
  if (chain.model == "quantile") header["p"] = chain.p;
  header["n"] = static_cast<std::int64_t>(chain.n);
  header["T"] = static_cast<std::int64_t>(chain.T);
  header["k"] = static_cast<std::int64_t>(chain.k);
  header["l"] = static_cast<std::int64_t>(chain.l);
  header["include_random_effects"] = chain.include_random_effects;
  header["iterations"] = chain.config.iterations;
  header["burn_in"] = chain.config.burn_in;
  header["thin"] = chain.config.thin;
  header["seed"] = chain.config.seed;
  header["acceptance_rate"] = chain.acceptance_rate;
  header["draw_count"] = static_cast<std::int64_t>(chain.draw_count());
  header["fixed_names"] = chain.fixed_names;
  header["random_names"] = chain.random_names;
  header["priors"] = {
      {"beta0", std::vector<double>(chain.priors.beta0.data(),
                                    chain.priors.beta0.data() + chain.priors.beta0.size())},
      {"B0", spd_to_json(chain.priors.B0)},
      {"nu0", chain.priors.nu0},
      {"c0", chain.priors.c0},
      {"d0", chain.priors.d0},
  };
  if (chain.l > 0) header["priors"]["D0"] = spd_to_json(chain.priors.D0);
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(manifest_hash));
  header["manifest_hash"] = hash_hex;
  if (!manifest_echo.empty()) header["manifest_echo"] = manifest_echo;

  std::vector<double> payload;
  json blocks = json::array();
  append_block(payload, blocks, "beta", chain.beta);
  append_block(payload, blocks, "h", chain.h);
  append_block(payload, blocks, "sigma", chain.sigma);
  append_block(payload, blocks, "alpha", chain.alpha);
  if (chain.model == "quantile") append_block(payload, blocks, "nu", chain.nu);
  header["blocks"] = std::move(blocks);

  std::string head = header.dump();
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out.write(kChainMagic, sizeof(kChainMagic));
    std::uint64_t len = head.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!out) throw DataError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot move chain file into place: " + path);
}

LoadedChain read_chain(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open chain file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kChainMagic, sizeof(magic)) != 0)
    throw DataError(path + ": not a chain file (bad magic)");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len == 0 || len > (1ull << 30)) throw DataError(path + ": corrupt header length");
  std::string head(len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError(path + ": truncated header");
  json header = json::parse(head, nullptr, false);
  if (header.is_discarded()) throw DataError(path + ": header is not valid JSON");
  if (header.value("format", "") != "blqr-chain")
    throw DataError(path + ": unknown file format");
  if (header.value("format_version", -1) != kChainFormatVersion)
    throw DataError(path + ": unsupported chain format version");

  std::vector<double> payload;
  {
    std::vector<char> rest((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    if (rest.size() % sizeof(double) != 0) throw DataError(path + ": truncated payload");
    payload.resize(rest.size() / sizeof(double));
    std::memcpy(payload.data(), rest.data(), rest.size());
  }

  LoadedChain loaded;
  ChainResult& chain = loaded.chain;
  chain.model = header.at("model").get<std::string>();
  if (chain.model == "quantile") chain.p = header.at("p").get<double>();
  chain.n = header.at("n").get<std::int64_t>();
  chain.T = header.at("T").get<std::int64_t>();
  chain.k = header.at("k").get<std::int64_t>();
  chain.l = header.at("l").get<std::int64_t>();
  chain.include_random_effects = header.at("include_random_effects").get<bool>();
  chain.config.iterations = header.at("iterations").get<std::int64_t>();
  chain.config.burn_in = header.at("burn_in").get<std::int64_t>();
  chain.config.thin = header.at("thin").get<std::int64_t>();
  chain.config.seed = header.at("seed").get<std::uint64_t>();
  chain.config.include_random_effects = chain.include_random_effects;
  chain.acceptance_rate = header.at("acceptance_rate").get<double>();
  chain.fixed_names = header.at("fixed_names").get<std::vector<std::string>>();
  chain.random_names = header.at("random_names").get<std::vector<std::string>>();
  {
    const json& pr = header.at("priors");
    auto b0 = pr.at("beta0").get<std::vector<double>>();
    chain.priors.beta0 = Eigen::Map<Eigen::VectorXd>(b0.data(),
                                                     static_cast<Eigen::Index>(b0.size()));
    chain.priors.B0 = spd_from_json(pr.at("B0"));
    chain.priors.nu0 = pr.at("nu0").get<double>();
    chain.priors.c0 = pr.at("c0").get<double>();
    chain.priors.d0 = pr.at("d0").get<double>();
    if (chain.l > 0) chain.priors.D0 = spd_from_json(pr.at("D0"));
  }
  loaded.manifest_hash = std::stoull(header.at("manifest_hash").get<std::string>(), nullptr, 16);
  loaded.manifest_echo = header.value("manifest_echo", "");

  const double* cursor = payload.data();
  const double* end = cursor + payload.size();
  for (const json& spec : header.at("blocks")) {
    std::string name = spec.at("name").get<std::string>();
    Eigen::MatrixXd m = take_block(cursor, end, spec);
    if (name == "beta") chain.beta = std::move(m);
    else if (name == "h") chain.h = m.col(0);
    else if (name == "sigma") chain.sigma = std::move(m);
    else if (name == "alpha") chain.alpha = std::move(m);
    else if (name == "nu") chain.nu = std::move(m);
    else throw DataError(path + ": unknown draw block '" + name + "'");
  }
  if (cursor != end) throw DataError(path + ": trailing bytes after draw blocks");
  std::int64_t expected = header.at("draw_count").get<std::int64_t>();
  if (chain.beta.rows() != expected)
    throw DataError(path + ": draw count disagrees with header");
  return loaded;
}

std::string sanitize_param_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    out.push_back(ok ? c : '_');
  }
  return out;
}

void write_trace_csv(const std::string& path, const ChainResult& chain,
                     const std::string& row_name, std::uint64_t manifest_hash) {
  Eigen::VectorXd series = summary_series(chain, row_name);
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(manifest_hash));
    out << "# manifest=" << hash_hex << "\n";
    out << "iteration,value\n";
    for (Eigen::Index d = 0; d < series.size(); ++d) {
      std::int64_t iteration = chain.config.burn_in + (d + 1) * chain.config.thin;
      out << iteration << "," << fmt_double(series(d)) << "\n";
    }
    if (!out) throw DataError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot move trace file into place: " + path);
}

}  // namespace blqr
