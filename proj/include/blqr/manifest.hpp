#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blqr/gibbs.hpp"
#include "blqr/priors.hpp"
#include "blqr/recipe.hpp"

namespace blqr {

// Scalar prior overrides from the run config; expanded to a PriorSpec once
// the design dimensions are known.
struct PriorOverrides {
  std::optional<double> beta0;    // common value for every coefficient
  std::optional<double> b0_diag;  // B0 = b0_diag * I
  std::optional<double> nu0;
  std::optional<double> d0_diag;  // D0 = d0_diag * I
  std::optional<double> c0;
  std::optional<double> d0;

  PriorSpec build(Eigen::Index k, Eigen::Index l) const;
};

// Everything identifying one run. outdir and run.thread_count never enter
// the canonical form or the hash: neither changes the sampled chain.
struct RunManifest {
  std::string input;
  CovariateRecipe recipe;
  std::string model;  // "mean" | "quantile"
  std::vector<double> quantiles;
  PriorOverrides priors;
  RunConfig run;
  std::string outdir = "out";

  void validate() const;
};

// Deterministic key=value rendering of the identity fields, one per line.
std::string canonical_manifest(const RunManifest& m);

// FNV-1a 64 over the canonical form.
std::uint64_t manifest_hash(const RunManifest& m);
std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

// Flat key=value config file (# comments). See the format documentation for
// the grammar.
RunManifest parse_config_text(const std::string& text, const std::string& origin);
RunManifest parse_config_file(const std::string& path);

}  // namespace blqr
