#pragma once

// Problem files and reports.
//
// Reads a free-format QPS subset (NAME, ROWS, COLUMNS, RHS, BOUNDS, QUADOBJ,
// ENDATA; RANGES and OBJSENSE are rejected), converts it to the equality form
// with nonnegative variables, writes standard-form problems back out, and
// emits the crossover and prediction-ratio CSV tables.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cpqp/error.hpp"
#include "cpqp/linalg.hpp"
#include "cpqp/model.hpp"

namespace cpqp {

enum class RowSense { equal, less, greater };

struct RawRow {
  std::string name;
  RowSense sense = RowSense::equal;
};

struct RawQP {
  std::string name;
  std::string objective_row;
  std::vector<RawRow> rows;
  std::vector<std::string> columns;
  std::vector<std::tuple<int, int, double>> entries;    // (row, column, value)
  std::vector<std::tuple<int, int, double>> quadratic;  // (i, j, value), i >= j
  std::vector<double> cost;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;
  double objective_constant = 0.0;

  int num_rows() const { return static_cast<int>(rows.size()); }
  int num_columns() const { return static_cast<int>(columns.size()); }

  Matrix constraint_matrix() const {
    Matrix A = Matrix::Zero(num_rows(), num_columns());
    for (const auto& [i, j, v] : entries) A(i, j) += v;
    return A;
  }

  /// Full symmetric Hessian with the stored lower triangle mirrored.
  Matrix hessian() const {
    Matrix H = Matrix::Zero(num_columns(), num_columns());
    for (const auto& [i, j, v] : quadratic) {
      H(i, j) = v;
      H(j, i) = v;
    }
    return H;
  }
};

namespace detail {

inline std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] inline void parse_fail(int line, const std::string& what) {
  throw Error(Errc::parse_error, "line " + std::to_string(line) + ": " + what);
}

inline double parse_number(const std::string& tok, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) parse_fail(line, "bad number '" + tok + "'");
    return v;
  } catch (const std::invalid_argument&) {
    parse_fail(line, "bad number '" + tok + "'");
  } catch (const std::out_of_range&) {
    parse_fail(line, "number out of range '" + tok + "'");
  }
}

}  // namespace detail

inline RawQP parse_qps(std::istream& in) {
  enum Section { none, name, rows, columns, rhs, bounds, quadobj, endata };
  static const std::map<std::string, Section> known = {
      {"NAME", name},       {"ROWS", rows},       {"COLUMNS", columns}, {"RHS", rhs},
      {"BOUNDS", bounds},   {"QUADOBJ", quadobj}, {"ENDATA", endata}};
  static const char* unsupported[] = {"RANGES", "OBJSENSE", "OBJSENSE:", "QMATRIX", "QSECTION",
                                      "SOS", "CSECTION", "MARKER"};
  constexpr double inf = std::numeric_limits<double>::infinity();

  RawQP raw;
  std::map<std::string, int> row_index;  // constraint rows only
  std::map<std::string, int> col_index;
  std::map<std::pair<int, int>, int> quad_seen;
  Section section = none;
  std::string line;
  int lineno = 0;

  auto column = [&](const std::string& tok, int ln) {
    const auto it = col_index.find(tok);
    if (it == col_index.end()) detail::parse_fail(ln, "undefined column '" + tok + "'");
    return it->second;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '*') continue;
    const auto tok = detail::split_tokens(line);
    if (tok.empty()) continue;

    const bool header = !std::isspace(static_cast<unsigned char>(line[0]));
    if (header) {
      for (const char* u : unsupported)
        if (tok[0] == u) detail::parse_fail(lineno, std::string("unsupported section ") + tok[0]);
      const auto it = known.find(tok[0]);
      if (it == known.end()) detail::parse_fail(lineno, "unknown section '" + tok[0] + "'");
      if (it->second <= section) detail::parse_fail(lineno, "section " + tok[0] + " out of order");
      section = it->second;
      if (section == name && tok.size() > 1) raw.name = tok[1];
      if (section == endata) break;
      continue;
    }

    switch (section) {
      case rows: {
        if (tok.size() != 2) detail::parse_fail(lineno, "ROWS entry needs a type and a name");
        const std::string& type = tok[0];
        if (type == "N") {
          if (raw.objective_row.empty()) raw.objective_row = tok[1];
          else detail::parse_fail(lineno, "second objective row '" + tok[1] + "'");
          break;
        }
        RowSense sense;
        if (type == "E") sense = RowSense::equal;
        else if (type == "L") sense = RowSense::less;
        else if (type == "G") sense = RowSense::greater;
        else detail::parse_fail(lineno, "unknown row type '" + type + "'");
        if (row_index.count(tok[1]) || tok[1] == raw.objective_row)
          detail::parse_fail(lineno, "duplicate row '" + tok[1] + "'");
        row_index[tok[1]] = raw.num_rows();
        raw.rows.push_back({tok[1], sense});
        raw.rhs.push_back(0.0);
        break;
      }
      case columns: {
        if (tok.size() != 3 && tok.size() != 5)
          detail::parse_fail(lineno, "COLUMNS entry needs 3 or 5 fields");
        auto it = col_index.find(tok[0]);
        int j;
        if (it == col_index.end()) {
          j = raw.num_columns();
          col_index[tok[0]] = j;
          raw.columns.push_back(tok[0]);
          raw.cost.push_back(0.0);
          raw.lower.push_back(0.0);
          raw.upper.push_back(inf);
        } else {
          j = it->second;
          if (j != raw.num_columns() - 1)
            detail::parse_fail(lineno, "column '" + tok[0] + "' is not contiguous");
        }
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          const double v = detail::parse_number(tok[k + 1], lineno);
          if (tok[k] == raw.objective_row) {
            raw.cost[static_cast<std::size_t>(j)] += v;
          } else {
            const auto r = row_index.find(tok[k]);
            if (r == row_index.end()) detail::parse_fail(lineno, "undefined row '" + tok[k] + "'");
            raw.entries.emplace_back(r->second, j, v);
          }
        }
        break;
      }
      case rhs: {
        // The set name is optional; pairs follow it.
        const std::size_t first = tok.size() % 2 == 1 ? 1 : 0;
        if (tok.size() < 2 || tok.size() > 5) detail::parse_fail(lineno, "malformed RHS entry");
        for (std::size_t k = first; k + 1 < tok.size(); k += 2) {
          const double v = detail::parse_number(tok[k + 1], lineno);
          if (tok[k] == raw.objective_row) {
            raw.objective_constant = -v;
          } else {
            const auto r = row_index.find(tok[k]);
            if (r == row_index.end()) detail::parse_fail(lineno, "undefined row '" + tok[k] + "'");
            raw.rhs[static_cast<std::size_t>(r->second)] = v;
          }
        }
        break;
      }
      case bounds: {
        if (tok.size() < 3) detail::parse_fail(lineno, "malformed BOUNDS entry");
        const std::string& type = tok[0];
        const bool valueless = type == "FR" || type == "MI" || type == "PL";
        // With a value: TYPE [SET] COL VALUE; without: TYPE [SET] COL.
        const std::size_t col_pos = valueless ? tok.size() - 1 : tok.size() - 2;
        if (col_pos < 1 || col_pos > 2) detail::parse_fail(lineno, "malformed BOUNDS entry");
        const auto j = static_cast<std::size_t>(column(tok[col_pos], lineno));
        const double v = valueless ? 0.0 : detail::parse_number(tok.back(), lineno);
        if (type == "LO") raw.lower[j] = v;
        else if (type == "UP") raw.upper[j] = v;
        else if (type == "FX") raw.lower[j] = raw.upper[j] = v;
        else if (type == "FR") { raw.lower[j] = -inf; raw.upper[j] = inf; }
        else if (type == "MI") raw.lower[j] = -inf;
        else if (type == "PL") raw.upper[j] = inf;
        else detail::parse_fail(lineno, "unsupported bound type '" + type + "'");
        break;
      }
      case quadobj: {
        if (tok.size() != 3) detail::parse_fail(lineno, "QUADOBJ entry needs 3 fields");
        int i = column(tok[0], lineno);
        int j = column(tok[1], lineno);
        if (i < j) std::swap(i, j);
        if (quad_seen.count({i, j}))
          detail::parse_fail(lineno, "duplicate quadratic entry '" + tok[0] + " " + tok[1] + "'");
        quad_seen[{i, j}] = lineno;
        raw.quadratic.emplace_back(i, j, detail::parse_number(tok[2], lineno));
        break;
      }
      default:
        detail::parse_fail(lineno, "data outside a section");
    }
  }
  if (section != endata) throw Error(Errc::parse_error, "missing ENDATA");
  if (raw.objective_row.empty()) throw Error(Errc::parse_error, "no objective row");
  return raw;
}

inline RawQP parse_qps_text(const std::string& text) {
  std::istringstream in(text);
  return parse_qps(in);
}

inline RawQP parse_qps_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
  return parse_qps(in);
}

// ---------------------------------------------------------------------------
// Standard form

/// Where the standard-form columns and rows come from.
struct StandardFormMap {
  int original_columns = 0;
  std::vector<double> shift;         // x_original = x_standard + shift
  std::vector<int> slack_row;        // per standard column: source row of a slack, -1 otherwise
  std::vector<int> upper_bound_row;  // per original column: its upper-bound row, -1 if none
  double objective_offset = 0.0;     // f_original = f_standard + offset
  bool identity_added = false;

  Vector original_point(const Vector& x) const {
    Vector out(original_columns);
    for (int j = 0; j < original_columns; ++j) out(j) = x(j) + shift[static_cast<std::size_t>(j)];
    return out;
  }
};

struct StandardForm {
  StandardQP qp;
  StandardFormMap map;
};

inline StandardForm to_standard_form(const RawQP& raw) {
  const int n0 = raw.num_columns();
  const int r0 = raw.num_rows();
  for (int j = 0; j < n0; ++j) {
    const double l = raw.lower[static_cast<std::size_t>(j)];
    const double u = raw.upper[static_cast<std::size_t>(j)];
    detail::require(std::isfinite(l), Errc::unsupported,
                    ("free variable '" + raw.columns[static_cast<std::size_t>(j)] + "'").c_str());
    detail::require(l <= u, Errc::invalid_argument,
                    ("lower bound above upper bound for '" + raw.columns[static_cast<std::size_t>(j)] + "'").c_str());
  }

  const Matrix A0 = raw.constraint_matrix();
  const Matrix H0 = raw.hessian();
  Vector c0(n0), l(n0), rhs0(r0);
  for (int j = 0; j < n0; ++j) {
    c0(j) = raw.cost[static_cast<std::size_t>(j)];
    l(j) = raw.lower[static_cast<std::size_t>(j)];
  }
  for (int i = 0; i < r0; ++i) rhs0(i) = raw.rhs[static_cast<std::size_t>(i)];

  std::vector<int> ub_cols;
  for (int j = 0; j < n0; ++j)
    if (std::isfinite(raw.upper[static_cast<std::size_t>(j)])) ub_cols.push_back(j);
  int inequalities = static_cast<int>(ub_cols.size());
  for (const auto& row : raw.rows) inequalities += row.sense != RowSense::equal;

  const int m = r0 + static_cast<int>(ub_cols.size());
  const int n = n0 + inequalities;
  StandardForm out;
  StandardQP& qp = out.qp;
  StandardFormMap& map = out.map;
  qp.name = raw.name;
  qp.H = Matrix::Zero(n, n);
  qp.H.topLeftCorner(n0, n0) = H0;
  qp.A = Matrix::Zero(m, n);
  qp.A.topLeftCorner(r0, n0) = A0;
  qp.b = Vector::Zero(m);
  qp.b.head(r0) = rhs0 - A0 * l;
  qp.c = Vector::Zero(n);
  qp.c.head(n0) = c0 + H0 * l;

  map.original_columns = n0;
  map.shift.assign(l.data(), l.data() + n0);
  map.slack_row.assign(static_cast<std::size_t>(n), -1);
  map.upper_bound_row.assign(static_cast<std::size_t>(n0), -1);
  map.objective_offset = raw.objective_constant + c0.dot(l) + 0.5 * l.dot(H0 * l);

  int col = n0;
  for (int i = 0; i < r0; ++i) {
    const RowSense sense = raw.rows[static_cast<std::size_t>(i)].sense;
    if (sense == RowSense::equal) continue;
    qp.A(i, col) = sense == RowSense::less ? 1.0 : -1.0;
    map.slack_row[static_cast<std::size_t>(col)] = i;
    ++col;
  }
  for (std::size_t k = 0; k < ub_cols.size(); ++k) {
    const int j = ub_cols[k];
    const int row = r0 + static_cast<int>(k);
    qp.A(row, j) = 1.0;
    qp.A(row, col) = 1.0;
    qp.b(row) = raw.upper[static_cast<std::size_t>(j)] - l(j);
    map.slack_row[static_cast<std::size_t>(col)] = row;
    map.upper_bound_row[static_cast<std::size_t>(j)] = row;
    ++col;
  }
  return out;
}

/// Turns a linear program into a strictly convex one on its original
/// columns by adding the identity to the Hessian there.
inline void add_identity_on_original(StandardForm& sf) {
  for (int j = 0; j < sf.map.original_columns; ++j) sf.qp.H(j, j) += 1.0;
  sf.map.identity_added = true;
}

/// Writes a standard-form problem as QPS: equality rows, default bounds,
/// lower-triangle QUADOBJ.
inline std::string write_qps(const StandardQP& qp, const std::string& name = "") {
  const auto m = qp.m();
  const auto n = qp.n();
  std::string out;
  char buf[128];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto row_name = [](Eigen::Index i) { return "R" + std::to_string(i + 1); };
  auto col_name = [](Eigen::Index j) { return "X" + std::to_string(j + 1); };
  out += "NAME          " + (name.empty() ? (qp.name.empty() ? std::string("QP") : qp.name) : name) + "\n";
  out += "ROWS\n N  OBJ\n";
  for (Eigen::Index i = 0; i < m; ++i) out += " E  " + row_name(i) + "\n";
  out += "COLUMNS\n";
  for (Eigen::Index j = 0; j < n; ++j) {
    bool any = false;
    if (qp.c(j) != 0.0) {
      out += "    " + col_name(j) + "  OBJ  " + num(qp.c(j)) + "\n";
      any = true;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      if (qp.A(i, j) == 0.0) continue;
      out += "    " + col_name(j) + "  " + row_name(i) + "  " + num(qp.A(i, j)) + "\n";
      any = true;
    }
    if (!any) out += "    " + col_name(j) + "  OBJ  0\n";
  }
  out += "RHS\n";
  for (Eigen::Index i = 0; i < m; ++i)
    if (qp.b(i) != 0.0) out += "    RHS  " + row_name(i) + "  " + num(qp.b(i)) + "\n";
  out += "QUADOBJ\n";
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i)
      if (qp.H(i, j) != 0.0)
        out += "    " + col_name(i) + "  " + col_name(j) + "  " + num(qp.H(i, j)) + "\n";
  out += "ENDATA\n";
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::io_error, "cannot write '" + path + "'");
  f << text;
  f.flush();
  if (!f) throw Error(Errc::io_error, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Reports

/// One-decimal scientific notation ("1.5e-12"); "nan" for missing values.
inline std::string format_sci(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1e", v);
  return buf;
}

inline std::string format_fixed(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct CrossoverRecord {
  std::string name;
  int m = 0;
  int n = 0;
  double mu_lambda_K = std::numeric_limits<double>::quiet_NaN();
  double mu_K = std::numeric_limits<double>::quiet_NaN();
  int ipm_iterations = 0;
  double active_iterations_per = std::numeric_limits<double>::quiet_NaN();
  double active_iterations_unp = std::numeric_limits<double>::quiet_NaN();
  double feasibility_error_per = std::numeric_limits<double>::quiet_NaN();
  double feasibility_error_unp = std::numeric_limits<double>::quiet_NaN();
  double objective_error_per = std::numeric_limits<double>::quiet_NaN();
  double objective_error_unp = std::numeric_limits<double>::quiet_NaN();

  bool ok() const {
    return !std::isnan(active_iterations_per) && !std::isnan(active_iterations_unp) &&
           !std::isnan(objective_error_per) && !std::isnan(objective_error_unp);
  }
};

inline constexpr const char* kCrossoverHeader =
    "Probs,m,n,mu_lambda_K,mu_K,IPM_Itr,actvItr_Per,actvItr_Unp,feaErr_Per,feaErr_Unp,"
    "relObjErr_Per,relObjErr_Unp";

inline std::string format_count(double v) {
  if (std::isnan(v)) return "nan";
  return std::to_string(static_cast<long long>(std::llround(v)));
}

inline std::string crossover_row(const CrossoverRecord& r) {
  return r.name + "," + std::to_string(r.m) + "," + std::to_string(r.n) + "," +
         format_sci(r.mu_lambda_K) + "," + format_sci(r.mu_K) + "," +
         std::to_string(r.ipm_iterations) + "," + format_count(r.active_iterations_per) + "," +
         format_count(r.active_iterations_unp) + "," + format_sci(r.feasibility_error_per) + "," +
         format_sci(r.feasibility_error_unp) + "," + format_sci(r.objective_error_per) + "," +
         format_sci(r.objective_error_unp);
}

/// Mean of the finite entries, NaN if there are none.
inline double finite_mean(const std::vector<double>& v) {
  double sum = 0.0;
  int count = 0;
  for (double x : v)
    if (std::isfinite(x)) {
      sum += x;
      ++count;
    }
  return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

/// Nearest-rank percentile of the finite entries.
inline double finite_percentile(std::vector<double> v, double pct) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(v.size())));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

struct CrossoverSummary {
  double mu_lambda_K, mu_K, ipm_iterations;
  double active_iterations_per, active_iterations_unp;
  double feasibility_error_per, feasibility_error_unp;
  double objective_error_per, objective_error_unp;
  double objective_error_per_p90, objective_error_unp_p90;
  int failures = 0;
};

/// The value a scientific-notation column reads back as.
inline double as_printed(double v) { return std::isnan(v) ? v : std::stod(format_sci(v)); }

/// Aggregates over the rows where both arms completed, computed from the
/// printed precision so that they can be recomputed from the table.
inline CrossoverSummary summarize(const std::vector<CrossoverRecord>& rows) {
  std::vector<double> v[9];
  CrossoverSummary s{};
  for (const auto& r : rows) {
    if (!r.ok()) {
      ++s.failures;
      continue;
    }
    v[0].push_back(as_printed(r.mu_lambda_K));
    v[1].push_back(as_printed(r.mu_K));
    v[2].push_back(r.ipm_iterations);
    v[3].push_back(r.active_iterations_per);
    v[4].push_back(r.active_iterations_unp);
    v[5].push_back(as_printed(r.feasibility_error_per));
    v[6].push_back(as_printed(r.feasibility_error_unp));
    v[7].push_back(as_printed(r.objective_error_per));
    v[8].push_back(as_printed(r.objective_error_unp));
  }
  s.mu_lambda_K = finite_mean(v[0]);
  s.mu_K = finite_mean(v[1]);
  s.ipm_iterations = finite_mean(v[2]);
  s.active_iterations_per = finite_mean(v[3]);
  s.active_iterations_unp = finite_mean(v[4]);
  s.feasibility_error_per = finite_mean(v[5]);
  s.feasibility_error_unp = finite_mean(v[6]);
  s.objective_error_per = finite_mean(v[7]);
  s.objective_error_unp = finite_mean(v[8]);
  s.objective_error_per_p90 = finite_percentile(v[7], 90.0);
  s.objective_error_unp_p90 = finite_percentile(v[8], 90.0);
  return s;
}

inline std::string format_crossover_csv(const std::vector<CrossoverRecord>& rows,
                                        bool with_summary = false) {
  std::string out = std::string(kCrossoverHeader) + "\n";
  for (const auto& r : rows) out += crossover_row(r) + "\n";
  if (with_summary && !rows.empty()) {
    const CrossoverSummary s = summarize(rows);
    const int ok = static_cast<int>(rows.size()) - s.failures;
    out += "Average," + std::to_string(ok) + ",," + format_sci(s.mu_lambda_K) + "," +
           format_sci(s.mu_K) + "," + format_fixed(s.ipm_iterations, 1) + "," +
           format_fixed(s.active_iterations_per, 1) + "," + format_fixed(s.active_iterations_unp, 1) +
           "," + format_sci(s.feasibility_error_per) + "," + format_sci(s.feasibility_error_unp) + "," +
           format_sci(s.objective_error_per) + "," + format_sci(s.objective_error_unp) + "\n";
    out += "90th Pctl," + std::to_string(ok) + ",,,,,,,,," + format_sci(s.objective_error_per_p90) +
           "," + format_sci(s.objective_error_unp_p90) + "\n";
  }
  return out;
}

inline void write_report_csv(const std::vector<CrossoverRecord>& rows, const std::string& path,
                             bool with_summary = false) {
  write_text_file(path, format_crossover_csv(rows, with_summary));
}

struct RatioCurvePoint {
  int stop_iteration = 0;
  double false_per = 0.0, missed_per = 0.0, correction_per = 0.0;
  double false_unp = 0.0, missed_unp = 0.0, correction_unp = 0.0;
  double log10_residual_per = 0.0, log10_residual_unp = 0.0;
  int n_ok = 0;
};

inline constexpr const char* kRatioHeader =
    "K,falsePer,missPer,corrPer,falseUnp,missUnp,corrUnp,log10ResPer,log10ResUnp,n_ok";

inline std::string format_ratio_csv(const std::vector<RatioCurvePoint>& points) {
  std::string out = std::string(kRatioHeader) + "\n";
  for (const auto& p : points) {
    out += std::to_string(p.stop_iteration) + "," + format_fixed(p.false_per, 6) + "," +
           format_fixed(p.missed_per, 6) + "," + format_fixed(p.correction_per, 6) + "," +
           format_fixed(p.false_unp, 6) + "," + format_fixed(p.missed_unp, 6) + "," +
           format_fixed(p.correction_unp, 6) + "," + format_fixed(p.log10_residual_per, 4) + "," +
           format_fixed(p.log10_residual_unp, 4) + "," + std::to_string(p.n_ok) + "\n";
  }
  return out;
}

}  // namespace cpqp
