#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "geoflow/chain.hpp"
#include "geoflow/evt.hpp"
#include "geoflow/excursion.hpp"
#include "geoflow/measure.hpp"
#include "geoflow/model_io.hpp"
#include "geoflow/sim.hpp"

namespace geoflow::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

class AssertionBreach : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open '" + tmp + "' for writing");
    f << content;
    if (!f.flush()) throw Error(ErrorCode::InvalidArgument, "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<double> parse_ys(const std::string& text) {
  std::vector<double> ys;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      ys.push_back(std::stod(item, &used));
      if (used != item.size() && item.find_first_not_of(' ', used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "--ys: '" + item + "' is not a number");
    }
  }
  if (ys.empty()) throw Error(ErrorCode::InvalidArgument, "--ys: empty list");
  return ys;
}

template <Scalar T>
json scalar_json(const T& x) {
  return to_double(x);
}

// ---------------------------------------------------------------- stationary

template <Scalar T>
json stationary_report(const QuotientModel& model, int depth) {
  const Chain<T> chain(model);
  const auto pi = stationary_distribution(chain);
  const auto cls = classify(chain);
  json states = json::array();
  auto add = [&](const ChainState& s) {
    json row{{"id", edge_name(model, s)}, {"mass", scalar_json(pi.mass(s))}};
    if constexpr (is_exact_v<T>) row["mass_exact"] = format_rational(pi.mass(s));
    states.push_back(row);
  };
  for (const auto& s : chain.finite_block()) add(s);
  for (std::uint32_t r = 0; r < model.rays.size(); ++r) {
    for (int i = 2; i <= depth; ++i) {
      add(ChainState::up(r, i));
      add(ChainState::down(r, i));
    }
  }
  json mean_return = json::object();
  for (const auto& [s, m] : cls.mean_return) mean_return[edge_name(model, s)] = scalar_json(m);
  json tails = json::array();
  for (const auto& tail : pi.tail_law) {
    tails.push_back({{"ray", model.rays[tail.ray].id},
                     {"level_one_mass", scalar_json(tail.level_one_mass)},
                     {"ratio", scalar_json(tail.ratio)}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"rho", scalar_json(chain.rho())},
              {"residual", scalar_json(pi.residual)},
              {"total_mass", scalar_json(pi.total_mass())},
              {"period", cls.period},
              {"states", states},
              {"tail_law", tails},
              {"mean_return", mean_return}};
}

template <Scalar T>
json classify_report(const QuotientModel& model) {
  const Chain<T> chain(model);
  const auto cls = classify(chain);
  json mean_return = json::object();
  for (const auto& [s, m] : cls.mean_return) mean_return[edge_name(model, s)] = scalar_json(m);
  return json{{"schema_version", kSchemaVersion},
              {"rho", scalar_json(chain.rho())},
              {"irreducible", cls.irreducible},
              {"period", cls.period},
              {"positive_recurrent", cls.positive_recurrent},
              {"mean_return", mean_return}};
}

// ---------------------------------------------------------------- check-measure

struct CheckRow {
  std::string name;
  std::string instance;
  double residual;
};

template <Scalar T>
void chain_checks(const QuotientModel& model, std::vector<CheckRow>& rows) {
  const Chain<T> chain(model);
  const auto pi = stationary_distribution(chain);
  std::vector<ChainState> probe = chain.finite_block();
  for (std::uint32_t r = 0; r < model.rays.size(); ++r) {
    for (std::uint32_t i = 2; i <= 5; ++i) {
      probe.push_back(ChainState::up(r, i));
      probe.push_back(ChainState::down(r, i));
    }
  }
  for (const auto& s : probe) {
    T sum(0);
    for (const auto& t : chain.successors(s)) sum += t.prob;
    rows.push_back({"row_stochasticity", edge_name(model, s), to_double(abs_value<T>(sum - T(1)))});
  }
  rows.push_back({"stationarity", "finite_block+tail", to_double(pi.residual)});
  rows.push_back({"total_mass", "all", to_double(abs_value<T>(pi.total_mass() - T(1)))});
  for (const auto& s : chain.finite_block()) {
    const T kac = expected_return_time(chain, s) * pi.mass(s) - T(1);
    rows.push_back({"kac", edge_name(model, s), to_double(abs_value<T>(kac))});
  }
  if (model.mode == CoreMode::Matrix) return;

  for (int n = 0; n <= 10; ++n) {
    const T dp = T(1) - max_height_exact(chain, 1, n);
    rows.push_back({"height_tail_vs_chain", "N=" + std::to_string(n),
                    to_double(abs_value<T>(dp - excursion_height_tail(chain.rho(), n)))});
  }

  const CylinderSpace<T> space(model);
  RandomStream stream(trial_seed(1, 0));
  for (int c = 0; c < 100; ++c) {
    std::vector<ChainState> path;
    const auto r = static_cast<std::uint32_t>(stream.next() % model.rays.size());
    const auto level = static_cast<std::uint32_t>(1 + stream.next() % 3);
    path.push_back(stream.next() % 2 ? ChainState::up(r, level) : ChainState::down(r, level));
    const auto len = 1 + stream.next() % 8;
    while (path.size() < len) {
      const auto next = chain.successors(path.back());
      path.push_back(next[stream.next() % next.size()].to);
    }
    const auto [left, right] = space.markov_residuals(path);
    rows.push_back({"markov_left", "cylinder " + std::to_string(c), to_double(left)});
    rows.push_back({"markov_right", "cylinder " + std::to_string(c), to_double(right)});
  }
}

std::vector<CheckRow> check_measure(const QuotientModel& model) {
  std::vector<CheckRow> rows;
  for (int d = 1; d <= 10; ++d) {
    const Rational total = Rational(model.q + 1) * pow_int(Rational(model.q), d - 1) * ball_shadow<Rational>(model.q, d);
    rows.push_back({"ball_shadow_normalization", "d=" + std::to_string(d), to_double(abs_value<Rational>(total - 1))});
  }
  const double rho = model.rho();
  for (int n = 0; n <= 10; ++n) {
    // (q-1) sum_{m>=n} rho^m / ((q-1) sum_{m>=0} rho^m), first 200 terms plus closed-form remainder.
    auto tail_sum = [&](int from) {
      double s = 0.0;
      for (int m = from; m < from + 200; ++m) s += std::pow(rho, m);
      return (model.q - 1) * (s + std::pow(rho, from + 200) / (1.0 - rho));
    };
    rows.push_back({"shadow_ratio_vs_series", "N=" + std::to_string(n),
                    std::abs(shadow_ratio(model.q, model.delta, n) - tail_sum(n) / tail_sum(0))});
  }
  if (model.lattice) {
    chain_checks<Rational>(model, rows);
  } else {
    chain_checks<double>(model, rows);
  }
  return rows;
}

// ---------------------------------------------------------------- helpers

struct HorizonFlags {
  std::optional<double> T;
  std::optional<std::int64_t> k;
};

Horizon make_horizon(const HorizonFlags& flags) {
  if (flags.T.has_value() == flags.k.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "exactly one of --T and --k is required");
  }
  if (flags.T) {
    if (!(*flags.T >= 1.0)) throw Error(ErrorCode::InvalidArgument, "--T must be >= 1");
    return FixedTime{*flags.T};
  }
  if (*flags.k < 1) throw Error(ErrorCode::InvalidArgument, "--k must be >= 1");
  return FixedCount{*flags.k};
}

double reference_level(const QuotientModel& model, const Horizon& horizon) {
  if (const auto* fc = std::get_if<FixedCount>(&horizon)) {
    return std::log(static_cast<double>(fc->k)) / -std::log(model.rho());
  }
  return n_of_t(LimitParams::from_model(model), std::get<FixedTime>(horizon).T);
}

json horizon_json(const Horizon& horizon) {
  if (const auto* fc = std::get_if<FixedCount>(&horizon)) return json{{"fixed_count", fc->k}};
  return json{{"fixed_time", std::get<FixedTime>(horizon).T}};
}

std::string csv_number(double x) { return format_double(x); }

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geodesic-flow excursion statistics on quotients of regular trees", "geoflow"};
  app.require_subcommand(1);

  std::string model_path;
  std::string out_path;
  std::uint64_t seed = 0;
  std::int64_t trials = 0;
  int workers = 1;
  std::string sampler_name = "direct";
  HorizonFlags horizon_flags;
  std::string ys_text;

  auto* validate = app.add_subcommand("validate", "Parse and validate a model file");
  validate->add_option("model", model_path, "Model file")->required();

  int depth = 40;
  auto* stationary = app.add_subcommand("stationary", "Stationary distribution as JSON");
  stationary->add_option("model", model_path, "Model file")->required();
  stationary->add_option("--depth", depth, "Ray levels to list")->check(CLI::Range(1, 100000));
  stationary->add_option("--out", out_path, "Output path (default stdout)");

  auto* classify_cmd = app.add_subcommand("classify", "Irreducibility, period and recurrence as JSON");
  classify_cmd->add_option("model", model_path, "Model file")->required();
  classify_cmd->add_option("--out", out_path, "Output path (default stdout)");

  std::int64_t exact_k = 0;
  int exact_n = 0;
  bool exact_rational = false;
  auto* exact = app.add_subcommand("exact-evt", "P(max of k excursion heights <= N) by dynamic programming");
  exact->add_option("model", model_path, "Model file")->required();
  exact->add_option("--k", exact_k, "Number of excursions")->required()->check(CLI::NonNegativeNumber);
  exact->add_option("--N", exact_n, "Height level")->required()->check(CLI::NonNegativeNumber);
  exact->add_flag("--rational", exact_rational, "Also print the exact fraction (lattice models)");

  std::string summary_path;
  std::string trace_path;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo maximal heights, CSV (trial,h)");
  simulate->add_option("model", model_path, "Model file")->required();
  simulate->add_option("--T", horizon_flags.T, "Time horizon");
  simulate->add_option("--k", horizon_flags.k, "Number of excursions");
  simulate->add_option("--trials", trials, "Number of trials")->required();
  simulate->add_option("--seed", seed, "Master seed")->required();
  simulate->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("--sampler", sampler_name, "walk or direct")->check(CLI::IsMember({"walk", "direct"}));
  simulate->add_option("--out", out_path, "CSV output path (default stdout)");
  simulate->add_option("--summary", summary_path, "JSON summary path");
  simulate->add_option("--trace", trace_path, "Excursion trace CSV path");
  simulate->add_option("--ys", ys_text, "Offsets y for the summary CDF, e.g. \"-1,0,1\"");

  bool do_assert = false;
  double tolerance = 0.02;
  std::optional<int> compare_n;
  auto* compare = app.add_subcommand("evt-compare", "Empirical vs limiting CDF of the maximal height");
  compare->add_option("model", model_path, "Model file")->required();
  compare->add_option("--T", horizon_flags.T, "Time horizon");
  compare->add_option("--k", horizon_flags.k, "Number of excursions");
  compare->add_option("--N", compare_n, "Reference level (with --k)");
  compare->add_option("--ys", ys_text, "Offsets y, e.g. \"-1,0,1,2\"")->required();
  compare->add_option("--trials", trials, "Number of trials")->required();
  compare->add_option("--seed", seed, "Master seed")->required();
  compare->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  compare->add_option("--sampler", sampler_name, "walk or direct")->check(CLI::IsMember({"walk", "direct"}));
  compare->add_option("--out", out_path, "Report path, .csv or .json (default CSV on stdout)");
  compare->add_flag("--assert", do_assert, "Exit 3 when the KS distance exceeds --tolerance");
  compare->add_option("--tolerance", tolerance, "KS threshold for --assert")->check(CLI::NonNegativeNumber);

  std::optional<std::int64_t> mc_cycles;
  auto* cgamma = app.add_subcommand("c-gamma", "Mean compact gap per excursion");
  cgamma->add_option("model", model_path, "Model file")->required();
  cgamma->add_option("--mc", mc_cycles, "Also estimate from this many simulated cycles")->check(CLI::PositiveNumber);
  cgamma->add_option("--seed", seed, "Seed for --mc");

  double measure_tolerance = 1e-9;
  auto* measure = app.add_subcommand("check-measure", "Measure and chain invariants as CSV (check_name,instance,residual)");
  measure->add_option("model", model_path, "Model file")->required();
  measure->add_option("--out", out_path, "Output path (default stdout)");
  measure->add_flag("--assert", do_assert, "Exit 3 when a residual exceeds --tolerance");
  measure->add_option("--tolerance", measure_tolerance, "Residual threshold for --assert")->check(CLI::NonNegativeNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  auto emit = [&](const std::string& content, const std::string& path) {
    if (path.empty()) {
      out << content;
    } else {
      write_atomic(path, content);
    }
  };

  try {
    const QuotientModel model = load_model(model_path);

    if (validate->parsed()) {
      std::ostringstream line;
      line << "valid: q=" << model.q << " delta=" << std::fixed << std::setprecision(6) << model.delta
           << " rays=" << model.rays.size() << '\n';
      out << line.str();
      return kExitOk;
    }

    if (stationary->parsed()) {
      const json report = model.lattice ? stationary_report<Rational>(model, depth) : stationary_report<double>(model, depth);
      emit(report.dump(2) + "\n", out_path);
      if (!out_path.empty()) out << "wrote stationary report to " << out_path << '\n';
      return kExitOk;
    }

    if (classify_cmd->parsed()) {
      const json report = model.lattice ? classify_report<Rational>(model) : classify_report<double>(model);
      emit(report.dump(2) + "\n", out_path);
      if (!out_path.empty()) out << "wrote classification to " << out_path << '\n';
      return kExitOk;
    }

    if (exact->parsed()) {
      if (model.lattice) {
        const Rational p = max_height_exact_rational(model, exact_k, exact_n);
        out << format_double(to_double(p));
        if (exact_rational) out << ' ' << format_rational(p);
        out << '\n';
      } else {
        out << format_double(max_height_exact(model, exact_k, exact_n)) << '\n';
      }
      return kExitOk;
    }

    if (simulate->parsed() || compare->parsed()) {
      RunConfig config;
      config.model = model;
      config.horizon = make_horizon(horizon_flags);
      config.trials = trials;
      config.master_seed = seed;
      config.sampler = parse_sampler(sampler_name);
      config.workers = workers;
      config.record_traces = simulate->parsed() && !trace_path.empty();
      if (!ys_text.empty()) config.ys = parse_ys(ys_text);

      if (compare->parsed()) {
        double level = 0.0;
        if (std::holds_alternative<FixedCount>(config.horizon)) {
          if (!compare_n) throw Error(ErrorCode::InvalidArgument, "--k requires --N");
          level = *compare_n;
        } else {
          if (compare_n) throw Error(ErrorCode::InvalidArgument, "--N is only valid with --k");
          level = reference_level(model, config.horizon);
        }
        const auto params = LimitParams::from_model(model);
        const auto result = run_monte_carlo(config);
        EvtReport report = empirical_cdf_compare(result.h, params, level, config.ys);
        if (const auto* fc = std::get_if<FixedCount>(&config.horizon)) {
          for (auto& row : report.rows) {
            row.exact = row.threshold < 0 ? 0.0 : galambos_cdf(model.q, model.delta, static_cast<double>(row.threshold), fc->k);
          }
        }

        std::string content;
        if (ends_with(out_path, ".json")) {
          json rows = json::array();
          for (const auto& row : report.rows) {
            json r{{"y", row.y},
                   {"threshold", row.threshold},
                   {"empirical", row.empirical},
                   {"theoretical", row.theoretical},
                   {"abs_err", row.abs_err}};
            if (!std::isnan(row.exact)) r["exact"] = row.exact;
            rows.push_back(r);
          }
          const json doc{{"schema_version", kSchemaVersion},
                         {"params", {{"q", params.q}, {"delta", params.delta}, {"c_gamma", params.c_gamma}}},
                         {"mode", horizon_json(config.horizon)},
                         {"level", report.level},
                         {"seed", seed},
                         {"n_samples", report.n_samples},
                         {"ks_distance", report.ks_distance},
                         {"rows", rows}};
          content = doc.dump(2) + "\n";
        } else {
          std::ostringstream csv;
          csv << "y,empirical,theoretical,abs_err\n";
          for (const auto& row : report.rows) {
            csv << csv_number(row.y) << ',' << csv_number(row.empirical) << ',' << csv_number(row.theoretical) << ','
                << csv_number(row.abs_err) << '\n';
          }
          content = csv.str();
        }
        emit(content, out_path);
        std::ostringstream line;
        line << "evt-compare: n=" << report.n_samples << " N=" << format_double(report.level)
             << " ks_distance=" << format_double(report.ks_distance);
        if (do_assert) line << " tolerance=" << format_double(tolerance);
        if (out_path.empty()) {
          err << line.str() << '\n';
        } else {
          out << line.str() << '\n';
        }
        if (do_assert && report.ks_distance > tolerance) {
          throw AssertionBreach("ks_distance " + format_double(report.ks_distance) + " exceeds tolerance " +
                                format_double(tolerance));
        }
        return kExitOk;
      }

      if (!config.ys.empty()) config.level = reference_level(model, config.horizon);
      const auto result = run_monte_carlo(config);
      std::ostringstream csv;
      csv << "trial,h\n";
      for (std::size_t i = 0; i < result.h.size(); ++i) csv << i << ',' << result.h[i] << '\n';
      emit(csv.str(), out_path);
      if (!trace_path.empty()) {
        std::ostringstream trace;
        trace << "trial,n,ray,a_n,t_n,gap,complete\n";
        for (std::size_t i = 0; i < result.traces.size(); ++i) {
          write_trace_rows(trace, static_cast<std::int64_t>(i), result.traces[i], model);
        }
        write_atomic(trace_path, trace.str());
      }
      if (!summary_path.empty()) {
        json cdf = json::array();
        for (const auto& p : result.summary) cdf.push_back({{"y", p.y}, {"threshold", p.threshold}, {"empirical", p.empirical}});
        json doc{{"schema_version", kSchemaVersion},
                 {"trials", trials},
                 {"mode", horizon_json(config.horizon)},
                 {"seed", seed},
                 {"sampler", to_string(config.sampler)}};
        if (config.level) doc["level"] = *config.level;
        doc["cdf"] = cdf;
        write_atomic(summary_path, doc.dump(2) + "\n");
      }
      if (!out_path.empty()) out << "simulated " << trials << " trials to " << out_path << '\n';
      return kExitOk;
    }

    if (cgamma->parsed()) {
      json doc{{"schema_version", kSchemaVersion}};
      try {
        const Rational c = c_gamma_exact(model);
        doc["exact"] = to_double(c);
        doc["exact_rational"] = format_rational(c);
      } catch (const Error& e) {
        doc["exact"] = "not computable";
        doc["reason"] = e.what();
      }
      if (mc_cycles) {
        const auto report = estimate_c_gamma(model, *mc_cycles, seed);
        doc["estimate"] = report.estimate;
        doc["stderr"] = report.stderr_;
        doc["n_cycles"] = report.n_cycles;
      }
      out << doc.dump(2) << '\n';
      return kExitOk;
    }

    if (measure->parsed()) {
      const auto rows = check_measure(model);
      std::ostringstream csv;
      csv << "check_name,instance,residual\n";
      double worst = 0.0;
      std::string worst_name;
      for (const auto& row : rows) {
        csv << row.name << ',' << row.instance << ',' << csv_number(row.residual) << '\n';
        if (row.residual > worst) {
          worst = row.residual;
          worst_name = row.name + " " + row.instance;
        }
      }
      emit(csv.str(), out_path);
      if (!out_path.empty()) out << "checked " << rows.size() << " invariants, max residual " << format_double(worst) << '\n';
      if (do_assert && worst > measure_tolerance) {
        throw AssertionBreach("residual " + format_double(worst) + " (" + worst_name + ") exceeds tolerance " +
                              format_double(measure_tolerance));
      }
      return kExitOk;
    }
  } catch (const AssertionBreach& e) {
    err << "assertion failed: " << e.what() << '\n';
    return kExitAssert;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace geoflow::cli
