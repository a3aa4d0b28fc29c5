#pragma once

#include <map>
#include <string>
#include <vector>

#include "blqr/csv.hpp"
#include "blqr/panel.hpp"

namespace blqr {

// One design term over raw columns.
struct Term {
  enum class Kind { Identity, Log, Ihs, Scale, Interaction };
  Kind kind = Kind::Identity;
  std::string col;
  std::string col2;    // interaction partner
  double factor = 1.0; // scale() multiplier

  // Display name used for design columns, summaries and traces.
  std::string name() const;
};

// Parse a single term: "col", "log(col)", "ihs(col)", "scale(col,c)" or
// "a*b". Terms contain no spaces.
Term parse_term(const std::string& text);

// Covariate construction plan. The fixed list is expanded in declared order
// after a leading intercept; categorical columns expand to indicators for
// every level except the declared omitted one, in sorted level order.
// Random entries name fixed terms (by display name) that also receive an
// individual-specific coefficient; the random intercept is implicit.
struct CovariateRecipe {
  Term response;
  std::vector<Term> fixed;
  std::vector<std::string> random;
  std::vector<std::string> categoricals;
  std::map<std::string, std::string> omitted;  // categorical column -> omitted level

  bool is_categorical(const std::string& col) const;
};

// Apply a recipe to raw records, returning the assembled balanced panel.
// Records need `id` and `period` columns; periods must agree across ids.
PanelDataset build_design(const RawTable& records, const CovariateRecipe& recipe);

}  // namespace blqr
