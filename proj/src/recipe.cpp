#include "blqr/recipe.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "blqr/error.hpp"

namespace blqr {

std::string Term::name() const {
  switch (kind) {
    case Kind::Identity: return col;
    case Kind::Log: return "log(" + col + ")";
    case Kind::Ihs: return "ihs(" + col + ")";
    case Kind::Scale: return "scale(" + col + "," + fmt_double(factor) + ")";
    case Kind::Interaction: return col + "*" + col2;
  }
  return col;
}

Term parse_term(const std::string& text) {
  if (text.empty()) throw ConfigError("empty covariate term");
  auto star = text.find('*');
  if (star != std::string::npos) {
    Term t;
    t.kind = Term::Kind::Interaction;
    t.col = text.substr(0, star);
    t.col2 = text.substr(star + 1);
    if (t.col.empty() || t.col2.empty() || t.col2.find('*') != std::string::npos)
      throw ConfigError("malformed interaction term '" + text + "'");
    return t;
  }
  auto paren = text.find('(');
  if (paren == std::string::npos) {
    Term t;
    t.col = text;
    return t;
  }
  if (text.back() != ')')
    throw ConfigError("malformed term '" + text + "': missing closing parenthesis");
  std::string fn = text.substr(0, paren);
  std::string inner = text.substr(paren + 1, text.size() - paren - 2);
  Term t;
  if (fn == "log") {
    t.kind = Term::Kind::Log;
    t.col = inner;
  } else if (fn == "ihs") {
    t.kind = Term::Kind::Ihs;
    t.col = inner;
  } else if (fn == "scale") {
    auto comma = inner.find(',');
    if (comma == std::string::npos)
      throw ConfigError("scale term needs a factor: scale(col,c), got '" + text + "'");
    t.kind = Term::Kind::Scale;
    t.col = inner.substr(0, comma);
    t.factor = parse_double(inner.substr(comma + 1), "term '" + text + "'");
  } else {
    throw ConfigError("unknown transform '" + fn + "' in term '" + text + "'");
  }
  if (t.col.empty()) throw ConfigError("malformed term '" + text + "'");
  return t;
}

bool CovariateRecipe::is_categorical(const std::string& col) const {
  return std::find(categoricals.begin(), categoricals.end(), col) != categoricals.end();
}

namespace {

struct RowRef {
  double period;
  std::size_t row;  // index into records.rows
};

int require_col(const RawTable& records, const std::string& name, const std::string& role) {
  int idx = records.col_index(name);
  if (idx < 0) throw ConfigError(role + " column '" + name + "' not found in input header");
  return idx;
}

double transformed_value(const RawTable& records, const Term& term, std::size_t row,
                         int ci, int ci2, const std::string& where) {
  double v = parse_double(records.rows[row][static_cast<std::size_t>(ci)], where);
  switch (term.kind) {
    case Term::Kind::Identity: return v;
    case Term::Kind::Log:
      if (!(v > 0.0))
        throw DataError(where + ": log of nonpositive value " + fmt_double(v) +
                        " in column '" + term.col + "'");
      return std::log(v);
    case Term::Kind::Ihs: return ihs(v);
    case Term::Kind::Scale: return v * term.factor;
    case Term::Kind::Interaction: {
      double v2 = parse_double(records.rows[row][static_cast<std::size_t>(ci2)], where);
      return v * v2;
    }
  }
  return v;
}

}  // namespace

PanelDataset build_design(const RawTable& records, const CovariateRecipe& recipe) {
  int id_col = records.col_index("id");
  int period_col = records.col_index("period");
  if (id_col < 0 || period_col < 0)
    throw DataError("input needs 'id' and 'period' columns");
  if (records.rows.empty()) throw DataError("input has a header but no data rows");

  // Group rows by id in order of first appearance, sort each group by period.
  std::vector<std::string> ids;
  std::map<std::string, std::vector<RowRef>> groups;
  for (std::size_t r = 0; r < records.rows.size(); ++r) {
    const std::string& id = records.rows[r][static_cast<std::size_t>(id_col)];
    double period = parse_double(records.rows[r][static_cast<std::size_t>(period_col)],
                                 "row " + std::to_string(r + 2) + " (id " + id + ")");
    auto [it, inserted] = groups.try_emplace(id);
    if (inserted) ids.push_back(id);
    it->second.push_back(RowRef{period, r});
  }
  for (auto& [id, rows] : groups) {
    std::sort(rows.begin(), rows.end(),
              [](const RowRef& a, const RowRef& b) { return a.period < b.period; });
    for (std::size_t j = 1; j < rows.size(); ++j)
      if (rows[j].period == rows[j - 1].period)
        throw DataError("id " + id + " has duplicate period " + fmt_double(rows[j].period));
  }

  // Balance check: every id must carry the identical period vector.
  const auto& ref_rows = groups[ids.front()];
  std::vector<std::string> offenders;
  for (const auto& id : ids) {
    const auto& rows = groups[id];
    bool same = rows.size() == ref_rows.size();
    for (std::size_t j = 0; same && j < rows.size(); ++j)
      same = rows[j].period == ref_rows[j].period;
    if (!same) offenders.push_back(id);
  }
  if (!offenders.empty()) {
    std::string msg = "unbalanced panel; ids with deviating periods:";
    for (std::size_t j = 0; j < offenders.size() && j < 10; ++j) msg += " " + offenders[j];
    if (offenders.size() > 10) msg += " ...";
    throw DataError(msg);
  }

  Eigen::Index n = static_cast<Eigen::Index>(ids.size());
  Eigen::Index T = static_cast<Eigen::Index>(ref_rows.size());

  // Validate recipe columns and gather categorical levels.
  for (const auto& cat : recipe.categoricals) {
    require_col(records, cat, "categorical");
    if (!recipe.omitted.count(cat))
      throw ConfigError("categorical '" + cat + "' has no declared omitted level");
  }
  std::map<std::string, std::vector<std::string>> cat_levels;
  for (const auto& cat : recipe.categoricals) {
    int ci = records.col_index(cat);
    std::set<std::string> levels;
    for (const auto& row : records.rows) levels.insert(row[static_cast<std::size_t>(ci)]);
    const std::string& omit = recipe.omitted.at(cat);
    if (!levels.count(omit))
      throw ConfigError("omitted level '" + omit + "' of categorical '" + cat +
                        "' does not occur in the data");
    std::vector<std::string> kept;
    for (const auto& lv : levels)
      if (lv != omit) kept.push_back(lv);  // std::set iterates sorted
    cat_levels[cat] = std::move(kept);
  }

  // Expanded fixed columns: leading intercept, then declared terms.
  struct ColPlan {
    std::string name;
    const Term* term = nullptr;      // numeric term (null for intercept/indicator)
    std::string cat_col, cat_level;  // indicator column
  };
  std::vector<ColPlan> plan;
  plan.push_back(ColPlan{"intercept", nullptr, "", ""});
  for (const auto& term : recipe.fixed) {
    if (term.kind == Term::Kind::Identity && recipe.is_categorical(term.col)) {
      for (const auto& lv : cat_levels[term.col])
        plan.push_back(ColPlan{term.col + "[" + lv + "]", nullptr, term.col, lv});
      continue;
    }
    if (recipe.is_categorical(term.col) ||
        (term.kind == Term::Kind::Interaction && recipe.is_categorical(term.col2)))
      throw ConfigError("categorical column '" + term.col +
                        "' can only appear as a bare term");
    require_col(records, term.col, "fixed term");
    if (term.kind == Term::Kind::Interaction) require_col(records, term.col2, "fixed term");
    plan.push_back(ColPlan{term.name(), &term, "", ""});
  }
  Eigen::Index k = static_cast<Eigen::Index>(plan.size());

  // Random-effect columns: implicit intercept plus declared fixed terms.
  std::vector<Eigen::Index> random_src;  // X column index each S column copies
  std::vector<std::string> random_names{"intercept"};
  random_src.push_back(0);
  for (const auto& rname : recipe.random) {
    if (rname == "intercept") continue;
    bool found = false;
    for (Eigen::Index j = 1; j < k; ++j)
      if (plan[static_cast<std::size_t>(j)].name == rname) {
        random_src.push_back(j);
        random_names.push_back(rname);
        found = true;
        break;
      }
    if (!found)
      throw ConfigError("random-effect term '" + rname +
                        "' does not match any fixed design column");
  }
  Eigen::Index l = static_cast<Eigen::Index>(random_src.size());

  int resp_col = require_col(records, recipe.response.col, "response");
  int resp_col2 = -1;
  if (recipe.response.kind == Term::Kind::Interaction)
    throw ConfigError("response cannot be an interaction term");
  if (recipe.is_categorical(recipe.response.col))
    throw ConfigError("response cannot be categorical");

  Eigen::VectorXd y(n * T);
  Eigen::MatrixXd X(n * T, k);
  Eigen::MatrixXd S(n * T, l);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rows = groups[ids[static_cast<std::size_t>(i)]];
    for (Eigen::Index t = 0; t < T; ++t) {
      std::size_t r = rows[static_cast<std::size_t>(t)].row;
      std::string where = "id " + ids[static_cast<std::size_t>(i)] + ", period " +
                          fmt_double(rows[static_cast<std::size_t>(t)].period);
      Eigen::Index out = i * T + t;
      y(out) = transformed_value(records, recipe.response, r, resp_col, resp_col2, where);
      X(out, 0) = 1.0;
      for (Eigen::Index j = 1; j < k; ++j) {
        const ColPlan& cp = plan[static_cast<std::size_t>(j)];
        if (cp.term) {
          int ci = records.col_index(cp.term->col);
          int ci2 = cp.term->kind == Term::Kind::Interaction
                        ? records.col_index(cp.term->col2) : -1;
          X(out, j) = transformed_value(records, *cp.term, r, ci, ci2, where);
        } else {
          int ci = records.col_index(cp.cat_col);
          X(out, j) =
              records.rows[r][static_cast<std::size_t>(ci)] == cp.cat_level ? 1.0 : 0.0;
        }
      }
      for (Eigen::Index j = 0; j < l; ++j) S(out, j) = X(out, random_src[static_cast<std::size_t>(j)]);
    }
  }

  std::vector<std::string> fixed_names;
  for (const auto& cp : plan) fixed_names.push_back(cp.name);
  return PanelDataset(n, T, std::move(y), std::move(X), std::move(S),
                      std::move(fixed_names), std::move(random_names), std::move(ids));
}

}  // namespace blqr
