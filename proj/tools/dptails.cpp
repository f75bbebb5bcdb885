// dptails: post-processes regression scores so that, beyond a threshold
// alpha, the prediction distribution is identical across sensitive groups,
// with the mass below alpha pinned to a proportion p (fixed or risk-optimal).
//
// Subcommands: calibrate, transform, evaluate, sweep, verify-oracle.
// Exit codes: 0 success, 1 internal failure, 2 I/O or configuration,
// 3 data-contract violation.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dptails/dptails.hpp"

namespace {

using nlohmann::json;

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DPTAILS_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw dptails::ConfigError("DPTAILS_SEED is not a valid integer");
    }
  }
  return 42;
}

double parse_alpha(const std::string& text) {
  if (text == "+inf" || text == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    if (std::isnan(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw dptails::ConfigError("cannot parse alpha '" + text +
                               "' (number, -inf or +inf)");
  }
}

struct ScoreSchema {
  std::string score_column;
  std::string group_column;
  std::optional<std::string> target_column;
};

// --schema score=COL,group=COL[,target=COL]
ScoreSchema parse_schema(const std::string& text) {
  ScoreSchema schema;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) {
      throw dptails::ConfigError("schema entry '" + part +
                                 "' is not key=column");
    }
    const std::string key = part.substr(0, eq);
    const std::string col = part.substr(eq + 1);
    if (key == "score") {
      schema.score_column = col;
    } else if (key == "group") {
      schema.group_column = col;
    } else if (key == "target") {
      schema.target_column = col;
    } else {
      throw dptails::ConfigError("schema key '" + key +
                                 "' is not one of score/group/target");
    }
  }
  if (schema.score_column.empty() || schema.group_column.empty()) {
    throw dptails::ConfigError("schema needs score= and group= columns");
  }
  return schema;
}

struct ScoreRow {
  dptails::GroupId group;
  double score;
  std::optional<double> target;
};

std::vector<ScoreRow> load_score_rows(const std::string& path,
                                      const ScoreSchema& schema) {
  dptails::CsvTable table = dptails::read_csv(path);
  const std::size_t score_idx = table.column_index(schema.score_column);
  const std::size_t group_idx = table.column_index(schema.group_column);
  std::optional<std::size_t> target_idx;
  if (schema.target_column) {
    target_idx = table.column_index(*schema.target_column);
  }
  if (table.rows.empty()) {
    throw dptails::DataError("input '" + path + "' has no data rows");
  }
  std::vector<ScoreRow> rows;
  rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    ScoreRow row;
    row.score = dptails::parse_double(table.rows[r][score_idx], r + 1,
                                      schema.score_column);
    row.group = table.rows[r][group_idx];
    if (target_idx) {
      row.target = dptails::parse_double(table.rows[r][*target_idx], r + 1,
                                         *schema.target_column);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

dptails::GroupedScores group_rows(const std::vector<ScoreRow>& rows) {
  std::map<dptails::GroupId, std::vector<double>> values;
  for (const auto& row : rows) values[row.group].push_back(row.score);
  return dptails::GroupedScores::from_values(std::move(values));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dptails::ConfigError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw dptails::ConfigError("failed writing '" + path + "'");
}

// Alpha grid spec: "a:b:step" (inclusive endpoints) or a comma list that may
// include -inf / +inf sentinels.
std::vector<double> parse_alpha_grid(const std::string& text) {
  std::vector<double> alphas;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    std::stringstream ss(text);
    std::string a, b, step;
    std::getline(ss, a, ':');
    std::getline(ss, b, ':');
    std::getline(ss, step, ':');
    const double lo = parse_alpha(a);
    const double hi = parse_alpha(b);
    const double h = parse_alpha(step);
    if (!(h > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
      throw dptails::ConfigError("bad alpha range '" + text + "'");
    }
    for (double v = lo; v <= hi + 1e-12 * std::abs(h); v += h) {
      alphas.push_back(v);
    }
  } else {
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) alphas.push_back(parse_alpha(part));
  }
  if (alphas.empty()) throw dptails::ConfigError("alpha grid is empty");
  return alphas;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct CalibrateOptions {
  std::string input;
  std::string schema = "score=score,group=group";
  std::string alpha_text;
  std::optional<double> p;
  double xi = 1e-5;
  double sigma = 1e-6;
  std::optional<double> sigma_transform;
  std::uint64_t seed = 0;
  std::string method = "grid";
  std::string out;
};

int run_calibrate(const CalibrateOptions& opt) {
  const ScoreSchema schema = parse_schema(opt.schema);
  const double alpha = parse_alpha(opt.alpha_text);
  const auto rows = load_score_rows(opt.input, schema);
  const auto scores = group_rows(rows);

  dptails::DpTailsParams params;
  params.alpha = alpha;
  params.xi = opt.xi;
  params.sigma = opt.sigma;
  params.sigma_transform = opt.sigma_transform;

  std::string p_source;
  json p_report;
  if (std::isinf(alpha)) {
    params.p = alpha > 0 ? 1.0 : 0.0;
    p_source = "sentinel";
  } else if (opt.p) {
    params.p = *opt.p;
    p_source = "given";
  } else {
    const auto method = opt.method == "brent" ? dptails::OptimizeMethod::brent
                                              : dptails::OptimizeMethod::grid;
    const auto report =
        dptails::optimize_p(scores, alpha, params, method, opt.seed);
    params.p = report.p_hat;
    p_source = "optimized";
    p_report = report.to_json();
  }

  const auto fitted = dptails::fit(scores, params, opt.seed);

  json doc = dptails::to_json(fitted);
  doc["p_source"] = p_source;
  if (!p_report.is_null()) doc["p_optimization"] = p_report;
  write_file(opt.out, doc.dump(2) + "\n");

  const double avg_q = fitted.average_quantile(params.p);
  std::cout << "calibrated " << scores.group_count() << " groups, N="
            << scores.total_size() << ", p=" << dptails::format_double(params.p)
            << " (" << p_source << ")\n";
  std::cout << "regime: alpha " << (fitted.minimum_attained() ? "<=" : ">")
            << " sum_s p_s Q_s(p) = " << dptails::format_double(avg_q)
            << (fitted.minimum_attained()
                    ? " (minimum attained)"
                    : " (no minimum; xi-solution applies)")
            << "\n";
  const double n = static_cast<double>(scores.total_size());
  if (params.xi > 1.0 / std::sqrt(n)) {
    std::cout << "warning: xi=" << dptails::format_double(params.xi)
              << " exceeds N^-1/2=" << dptails::format_double(1.0 / std::sqrt(n))
              << "; the risk guarantee assumes xi of order N^-1/2 or smaller\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// transform
// ---------------------------------------------------------------------------

struct TransformOptions {
  std::string input;
  std::string schema = "score=score,group=group";
  std::string transform_file;
  std::uint64_t seed = 0;
  std::string out;
};

int run_transform(const TransformOptions& opt) {
  const ScoreSchema schema = parse_schema(opt.schema);
  const auto rows = load_score_rows(opt.input, schema);

  std::ifstream in(opt.transform_file);
  if (!in) {
    throw dptails::ConfigError("cannot open transform file '" +
                               opt.transform_file + "'");
  }
  json doc = json::parse(in, nullptr, true);
  const auto fitted = dptails::fitted_transform_from_json(doc);

  std::string out = "group,fair_score\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!fitted.has_group(rows[r].group)) {
      throw dptails::DataError("unknown group '" + rows[r].group +
                               "' at data row " + std::to_string(r + 1));
    }
    auto rng = dptails::substream(opt.seed, "cli-transform", r);
    const double fair = fitted.apply(rows[r].group, rows[r].score, rng);
    out += rows[r].group + "," + dptails::format_double(fair) + "\n";
  }
  write_file(opt.out, out);
  std::cout << "transformed " << rows.size() << " rows\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOptions {
  std::string input;
  std::string schema = "score=score,group=group";
  std::string alpha_text;
  double p = 0.5;
  double xi = 1e-5;
  double sigma = 1e-6;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
};

int run_evaluate(const EvaluateOptions& opt) {
  const ScoreSchema schema = parse_schema(opt.schema);
  const double alpha = parse_alpha(opt.alpha_text);
  const auto rows = load_score_rows(opt.input, schema);
  const auto scores = group_rows(rows);

  std::optional<std::pair<std::vector<double>, std::vector<double>>> truth;
  if (schema.target_column) {
    std::vector<double> targets, predictions;
    for (const auto& row : rows) {
      if (!row.target) continue;
      targets.push_back(*row.target);
      predictions.push_back(row.score);
    }
    if (!targets.empty()) truth = {std::move(targets), std::move(predictions)};
  }

  const auto report = dptails::evaluate_metrics(scores, alpha, opt.p, opt.xi,
                                                opt.sigma, opt.seed, truth);
  if (opt.format == "csv") {
    write_file(opt.out, report.csv_header() + "\n" + report.csv_row() + "\n");
  } else if (opt.format == "json") {
    write_file(opt.out, report.to_json().dump(2) + "\n");
  } else {
    throw dptails::ConfigError("format must be json or csv");
  }
  std::cout << "ks=" << dptails::format_double(report.ks)
            << " tail_unfairness=" << dptails::format_double(report.tail_unfairness)
            << (report.mse ? " mse=" + dptails::format_double(*report.mse) : "")
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOptions {
  std::string alphas_text;
  std::size_t reps = 20;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string method = "grid";
  std::optional<double> p;
  double xi = 1e-5;
  double sigma = 1e-6;
  std::size_t n_train = 10000;
  std::size_t n_calib = 10000;
  std::size_t n_test = 10000;
  std::optional<std::string> input;
  std::string schema = "score=score,group=group";
  std::string out;
};

struct SweepCell {
  double alpha;
  std::size_t rep;
};

struct SweepCellResult {
  bool ok = false;
  std::string error;
  std::optional<double> mse;
  double ks = 0.0;
  double tail_unfairness = 0.0;
};

// One sweep cell on the synthetic model: train the base learner, calibrate on
// fresh unlabeled scores, optimize p unless fixed, transform the test set and
// evaluate. Data seeds depend only on the repetition, so the alpha grid sees
// the same draws.
SweepCellResult run_synthetic_cell(const SweepOptions& opt, const SweepCell& cell) {
  SweepCellResult result;
  try {
    const std::uint64_t rep_seed =
        dptails::substream_seed(opt.seed, "sweep-rep", cell.rep);
    const auto train = dptails::generate_synthetic(
        opt.n_train, dptails::substream_seed(rep_seed, "train"));
    const auto calib = dptails::generate_synthetic(
        opt.n_calib, dptails::substream_seed(rep_seed, "calib"));
    const auto test = dptails::generate_synthetic(
        opt.n_test, dptails::substream_seed(rep_seed, "test"));

    const auto model = dptails::fit_ols(train);
    const auto calib_scores = dptails::predict(model, calib);

    dptails::DpTailsParams params;
    params.alpha = cell.alpha;
    params.xi = opt.xi;
    params.sigma = opt.sigma;
    if (std::isinf(cell.alpha)) {
      params.p = cell.alpha > 0 ? 1.0 : 0.0;
    } else if (opt.p) {
      params.p = *opt.p;
    } else {
      const auto method = opt.method == "brent"
                              ? dptails::OptimizeMethod::brent
                              : dptails::OptimizeMethod::grid;
      params.p = dptails::optimize_p(calib_scores, cell.alpha, params, method,
                                     rep_seed)
                     .p_hat;
    }
    const auto fitted = dptails::fit(calib_scores, params, rep_seed);

    std::vector<double> targets;
    std::vector<double> fair;
    std::map<dptails::GroupId, std::vector<double>> fair_by_group;
    targets.reserve(test.rows.size());
    fair.reserve(test.rows.size());
    for (std::size_t r = 0; r < test.rows.size(); ++r) {
      auto rng = dptails::substream(rep_seed, "test-transform", r);
      const double score = model.predict_row(test.rows[r]);
      const double value = fitted.apply(test.rows[r].group, score, rng);
      fair.push_back(value);
      fair_by_group[test.rows[r].group].push_back(value);
      targets.push_back(*test.rows[r].target);
    }
    const auto fair_grouped =
        dptails::GroupedScores::from_values(std::move(fair_by_group));

    result.mse = dptails::mse(targets, fair);
    result.ks = dptails::ks_unfairness(fair_grouped);
    result.tail_unfairness =
        dptails::tail_unfairness(fair_grouped, cell.alpha);
    result.ok = true;
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  return result;
}

// Input-file mode: per repetition, a random half/half calibration/test split
// of the provided score rows.
SweepCellResult run_input_cell(const SweepOptions& opt,
                               const std::vector<ScoreRow>& rows,
                               const SweepCell& cell) {
  SweepCellResult result;
  try {
    const std::uint64_t rep_seed =
        dptails::substream_seed(opt.seed, "sweep-rep", cell.rep);
    std::vector<std::size_t> idx(rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto rng = dptails::substream(rep_seed, "calib-test-split");
    std::shuffle(idx.begin(), idx.end(), rng);

    std::map<dptails::GroupId, std::vector<double>> calib_values;
    std::vector<const ScoreRow*> test_rows;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i < idx.size() / 2) {
        calib_values[rows[idx[i]].group].push_back(rows[idx[i]].score);
      } else {
        test_rows.push_back(&rows[idx[i]]);
      }
    }
    const auto calib_scores =
        dptails::GroupedScores::from_values(std::move(calib_values));

    dptails::DpTailsParams params;
    params.alpha = cell.alpha;
    params.xi = opt.xi;
    params.sigma = opt.sigma;
    if (std::isinf(cell.alpha)) {
      params.p = cell.alpha > 0 ? 1.0 : 0.0;
    } else if (opt.p) {
      params.p = *opt.p;
    } else {
      const auto method = opt.method == "brent"
                              ? dptails::OptimizeMethod::brent
                              : dptails::OptimizeMethod::grid;
      params.p = dptails::optimize_p(calib_scores, cell.alpha, params, method,
                                     rep_seed)
                     .p_hat;
    }
    const auto fitted = dptails::fit(calib_scores, params, rep_seed);

    std::vector<double> targets;
    std::vector<double> fair_for_mse;
    std::map<dptails::GroupId, std::vector<double>> fair_by_group;
    for (std::size_t r = 0; r < test_rows.size(); ++r) {
      auto cell_rng = dptails::substream(rep_seed, "test-transform", r);
      const double value =
          fitted.apply(test_rows[r]->group, test_rows[r]->score, cell_rng);
      fair_by_group[test_rows[r]->group].push_back(value);
      if (test_rows[r]->target) {
        targets.push_back(*test_rows[r]->target);
        fair_for_mse.push_back(value);
      }
    }
    const auto fair_grouped =
        dptails::GroupedScores::from_values(std::move(fair_by_group));

    if (!targets.empty()) result.mse = dptails::mse(targets, fair_for_mse);
    result.ks = dptails::ks_unfairness(fair_grouped);
    result.tail_unfairness =
        dptails::tail_unfairness(fair_grouped, cell.alpha);
    result.ok = true;
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  return result;
}

int run_sweep(const SweepOptions& opt) {
  const auto alphas = parse_alpha_grid(opt.alphas_text);
  if (opt.reps < 1) throw dptails::ConfigError("--reps must be >= 1");

  std::vector<ScoreRow> input_rows;
  if (opt.input) {
    input_rows = load_score_rows(*opt.input, parse_schema(opt.schema));
  }

  std::vector<SweepCell> cells;
  for (double alpha : alphas) {
    for (std::size_t rep = 0; rep < opt.reps; ++rep) {
      cells.push_back({alpha, rep});
    }
  }

  std::vector<SweepCellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  const std::size_t jobs = std::max<std::size_t>(1, opt.jobs);
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      results[i] = opt.input ? run_input_cell(opt, input_rows, cells[i])
                             : run_synthetic_cell(opt, cells[i]);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::string out = "alpha,seed,mse,ks,tail_unfairness\n";
  std::size_t failed = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!results[i].ok) {
      ++failed;
      std::cerr << "sweep cell (alpha=" << dptails::format_double(cells[i].alpha)
                << ", seed=" << cells[i].rep << ") failed: " << results[i].error
                << "\n";
      continue;
    }
    out += dptails::format_double(cells[i].alpha) + "," +
           std::to_string(cells[i].rep) + "," +
           (results[i].mse ? dptails::format_double(*results[i].mse) : "") +
           "," + dptails::format_double(results[i].ks) + "," +
           dptails::format_double(results[i].tail_unfairness) + "\n";
  }
  write_file(opt.out, out);
  std::cout << "sweep wrote " << (cells.size() - failed) << "/" << cells.size()
            << " cells\n";
  return failed == 0 ? 0 : kExitInternal;
}

// ---------------------------------------------------------------------------
// verify-oracle
// ---------------------------------------------------------------------------

struct VerifyOracleOptions {
  std::uint64_t seed = 0;
  std::size_t instances = 20;
  double grid_step = 1e-3;
  std::optional<double> tol;
  std::optional<std::string> out;
};

int run_verify_oracle(const VerifyOracleOptions& opt) {
  const double tol = opt.tol.value_or(2.0 * opt.grid_step);
  if (!(tol > opt.grid_step)) {
    throw dptails::ConfigError("tol must exceed the grid step");
  }
  const auto battery =
      dptails::builtin_instance_battery(opt.seed, opt.instances);
  bool all_pass = true;
  json doc = json::array();
  std::cout << "instance  check                pass  max_value_dev  objective_dev\n";
  for (std::size_t i = 0; i < battery.size(); ++i) {
    const auto grid = dptails::make_value_grid(battery[i], opt.grid_step);
    for (const auto& report :
         {dptails::verify_closed_form(battery[i], tol, grid),
          dptails::verify_barycenter_identity(battery[i], 1e-9, grid)}) {
      all_pass = all_pass && report.pass;
      std::ostringstream line;
      line.setf(std::ios::left);
      line.width(10);
      line << i;
      line.width(21);
      line << report.check;
      line.width(6);
      line << (report.pass ? "PASS" : "FAIL");
      line << dptails::format_double(report.max_value_deviation) << "  "
           << dptails::format_double(report.objective_deviation);
      std::cout << line.str() << "\n";
      json entry = report.to_json();
      entry["instance"] = i;
      doc.push_back(std::move(entry));
    }
  }
  if (opt.out) write_file(*opt.out, doc.dump(2) + "\n");
  std::cout << (all_pass ? "all checks PASS" : "some checks FAIL") << "\n";
  return all_pass ? 0 : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DP-tails fair post-processing of regression scores"};
  app.require_subcommand(1);

  CalibrateOptions cal;
  TransformOptions tra;
  EvaluateOptions eva;
  SweepOptions swe;
  VerifyOracleOptions ver;
  std::string cal_p, swe_p, cal_sigma_t, swe_input, ver_tol, ver_out;

  auto* c = app.add_subcommand("calibrate",
                               "fit the transform on (score, group) rows");
  c->add_option("--input", cal.input, "input CSV")->required();
  c->add_option("--schema", cal.schema, "score=COL,group=COL[,target=COL]");
  c->add_option("--alpha", cal.alpha_text, "fairness threshold (number|-inf|+inf)")
      ->required();
  c->add_option("--p", cal_p, "unfairness proportion; omitted = optimize");
  c->add_option("--xi", cal.xi, "strict-inequality slack");
  c->add_option("--sigma", cal.sigma, "jitter width");
  c->add_option("--sigma-transform", cal_sigma_t,
                "transform-time jitter width (default: sigma)");
  c->add_option("--seed", cal.seed, "master seed");
  c->add_option("--method", cal.method, "p optimizer: grid|brent")
      ->check(CLI::IsMember({"grid", "brent"}));
  c->add_option("--out", cal.out, "output transform JSON")->required();

  auto* t = app.add_subcommand("transform", "apply a calibrated transform");
  t->add_option("--input", tra.input, "input CSV")->required();
  t->add_option("--schema", tra.schema, "score=COL,group=COL");
  t->add_option("--transform", tra.transform_file, "transform JSON")->required();
  t->add_option("--seed", tra.seed, "master seed");
  t->add_option("--out", tra.out, "output CSV (group,fair_score)")->required();

  auto* e = app.add_subcommand("evaluate", "metrics of (score, group) rows");
  e->add_option("--input", eva.input, "input CSV")->required();
  e->add_option("--schema", eva.schema, "score=COL,group=COL[,target=COL]");
  e->add_option("--alpha", eva.alpha_text, "fairness threshold")->required();
  e->add_option("--p", eva.p, "target proportion for the threshold-mass gap");
  e->add_option("--xi", eva.xi, "echoed in the report");
  e->add_option("--sigma", eva.sigma, "echoed in the report");
  e->add_option("--seed", eva.seed, "echoed in the report");
  e->add_option("--out", eva.out, "output path")->required();
  e->add_option("--format", eva.format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));

  auto* s = app.add_subcommand(
      "sweep", "full pipeline over an alpha grid with repetitions");
  s->add_option("--alphas", swe.alphas_text, "a:b:step or comma list (+/-inf ok)")
      ->required();
  s->add_option("--reps", swe.reps, "repetitions per alpha");
  s->add_option("--seed", swe.seed, "master seed");
  s->add_option("--jobs", swe.jobs, "parallel cells");
  s->add_option("--method", swe.method, "p optimizer: grid|brent")
      ->check(CLI::IsMember({"grid", "brent"}));
  s->add_option("--p", swe_p, "fixed proportion; omitted = optimize per cell");
  s->add_option("--xi", swe.xi, "strict-inequality slack");
  s->add_option("--sigma", swe.sigma, "jitter width");
  s->add_option("--n-train", swe.n_train, "synthetic train size");
  s->add_option("--n-calib", swe.n_calib, "synthetic calibration size");
  s->add_option("--n-test", swe.n_test, "synthetic test size");
  s->add_option("--input", swe_input, "score CSV instead of synthetic data");
  s->add_option("--schema", swe.schema, "score=COL,group=COL[,target=COL]");
  s->add_option("--out", swe.out, "output long CSV")->required();

  auto* v = app.add_subcommand("verify-oracle",
                               "closed form vs brute-force transport search");
  v->add_option("--seed", ver.seed, "battery seed");
  v->add_option("--instances", ver.instances, "number of random instances");
  v->add_option("--grid-step", ver.grid_step, "value grid step");
  v->add_option("--tol", ver_tol, "tolerance (default 2x grid step)");
  v->add_option("--out", ver_out, "optional JSON report path");

  bool seed_given_cal = false, seed_given_tra = false, seed_given_eva = false,
       seed_given_swe = false, seed_given_ver = false;
  c->get_option("--seed")->each([&](const std::string&) { seed_given_cal = true; });
  t->get_option("--seed")->each([&](const std::string&) { seed_given_tra = true; });
  e->get_option("--seed")->each([&](const std::string&) { seed_given_eva = true; });
  s->get_option("--seed")->each([&](const std::string&) { seed_given_swe = true; });
  v->get_option("--seed")->each([&](const std::string&) { seed_given_ver = true; });

  try {
    app.parse(argc, argv);

    if (!seed_given_cal) cal.seed = default_seed();
    if (!seed_given_tra) tra.seed = default_seed();
    if (!seed_given_eva) eva.seed = default_seed();
    if (!seed_given_swe) swe.seed = default_seed();
    if (!seed_given_ver) ver.seed = default_seed();

    if (!cal_p.empty()) cal.p = std::stod(cal_p);
    if (!swe_p.empty()) swe.p = std::stod(swe_p);
    if (!cal_sigma_t.empty()) cal.sigma_transform = std::stod(cal_sigma_t);
    if (!swe_input.empty()) swe.input = swe_input;
    if (!ver_tol.empty()) ver.tol = std::stod(ver_tol);
    if (!ver_out.empty()) ver.out = ver_out;

    if (c->parsed()) return run_calibrate(cal);
    if (t->parsed()) return run_transform(tra);
    if (e->parsed()) return run_evaluate(eva);
    if (s->parsed()) return run_sweep(swe);
    if (v->parsed()) return run_verify_oracle(ver);
    return kExitConfig;
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitConfig;
  } catch (const dptails::ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const dptails::DataError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return kExitInternal;
  }
}
