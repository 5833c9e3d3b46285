// Command-line front end: distances between samples or Gaussian summaries,
// ROC curves from pseudo-sample pairs, data-driven parameter selection, the
// two-sample test, and the simulation presets.
//
// Exit codes: 0 success, 2 invalid input or parameters, 3 numerical failure,
// 4 no feasible result, 1 unexpected error.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvdiv/mvdiv.hpp"

namespace {

using namespace mvdiv;

// ---------------------------------------------------------------------------
// Shared option blocks.

struct InputOptions {
  std::string x_path;
  std::string y_path;
  bool header = false;
  std::optional<Index> class_column;
  std::string x_label;
  std::string y_label;
  std::string delimiter = ",";
};

struct DistanceOptions {
  std::string family = "";
  std::optional<double> p;
  std::optional<int> k;
  double delta = 1.0;
  std::string floor = "reject";
  double floor_scale = tolerance::floor_scale;
  bool unsafe_negative_p = false;
};

void add_input_options(CLI::App* cmd, InputOptions& opts,
                       bool y_required = true) {
  cmd->add_option("--x", opts.x_path,
                  "first input (.csv sample, or .json summary where allowed)")
      ->required();
  auto* y = cmd->add_option("--y", opts.y_path, "second input");
  if (y_required) y->required();
  cmd->add_flag("--header", opts.header, "first CSV row is a header");
  cmd->add_option("--class-column", opts.class_column,
                  "0-based CSV column holding class labels");
  cmd->add_option("--x-label", opts.x_label,
                  "class label selecting the first sample");
  cmd->add_option("--y-label", opts.y_label,
                  "class label selecting the second sample");
  cmd->add_option("--delimiter", opts.delimiter,
                  "CSV field delimiter (single character, or 'tab')");
}

void add_distance_options(CLI::App* cmd, DistanceOptions& opts,
                          bool family_required = true) {
  auto* fam = cmd->add_option(
      "--family", opts.family,
      "distance family: kl, js, bhattacharyya, logphip-jb, logphip-br, "
      "logphik-jb, logphik-br, energy");
  if (family_required) fam->required();
  cmd->add_option("--p", opts.p, "exponent for the log phi_p families (< 1)");
  cmd->add_option("--k", opts.k,
                  "order for the log Phi_k families (1 <= k <= dimension)");
  cmd->add_option("--delta", opts.delta,
                  "energy-distance exponent in (0, 2], default 1");
  cmd->add_option("--floor", opts.floor,
                  "eigenvalue floor policy for negative matrix powers: "
                  "reject (default) or clamp")
      ->check(CLI::IsMember({"reject", "clamp"}));
  cmd->add_option("--floor-scale", opts.floor_scale,
                  "relative scale of the eigenvalue floor");
  cmd->add_flag("--unsafe-negative-p", opts.unsafe_negative_p,
                "allow p < 0 (very sensitive to small eigenvalues)");
}

// ---------------------------------------------------------------------------
// Parsing helpers.

Family parse_family(const std::string& token) {
  static const std::map<std::string, Family> names = {
      {"kl", Family::KL},
      {"js", Family::JS},
      {"bhattacharyya", Family::Bhattacharyya},
      {"logphip-jb", Family::LogPhiP_JB},
      {"logphip-br", Family::LogPhiP_BR},
      {"logphik-jb", Family::LogSimplicial_JB},
      {"logphik-br", Family::LogSimplicial_BR},
      {"energy", Family::Energy},
      // Shorthands for the Jeffreys-Bregman variants.
      {"logphi-p", Family::LogPhiP_JB},
      {"logphi-k", Family::LogSimplicial_JB}};
  const auto it = names.find(token);
  if (it == names.end())
    throw ParameterError("unknown distance family '" + token +
                         "'; expected one of kl, js, bhattacharyya, "
                         "logphip-jb, logphip-br, logphik-jb, logphik-br, "
                         "energy");
  return it->second;
}

DistanceSpec build_spec(const DistanceOptions& opts) {
  const Family family = parse_family(opts.family);
  DistanceSpec spec = DistanceSpec::kl();
  switch (family) {
    case Family::KL:
    case Family::JS:
    case Family::Bhattacharyya:
      spec = DistanceSpec::with_parameter(family, 0.0);
      break;
    case Family::LogPhiP_JB:
    case Family::LogPhiP_BR:
      if (!opts.p)
        throw ParameterError("family '" + opts.family + "' requires --p");
      spec = DistanceSpec::with_parameter(family, *opts.p,
                                          opts.unsafe_negative_p);
      break;
    case Family::LogSimplicial_JB:
    case Family::LogSimplicial_BR:
      if (!opts.k)
        throw ParameterError("family '" + opts.family + "' requires --k");
      spec = DistanceSpec::with_parameter(family,
                                          static_cast<double>(*opts.k));
      break;
    case Family::Energy:
      spec = DistanceSpec::energy(opts.delta);
      break;
  }
  if (opts.floor == "clamp")
    spec.set_floor(EigenFloor::clamp(opts.floor_scale));
  else
    spec.set_floor(EigenFloor::reject(opts.floor_scale));
  return spec;
}

char parse_delimiter(const std::string& token) {
  if (token == "tab" || token == "\\t") return '\t';
  if (token.size() != 1)
    throw ParameterError("--delimiter must be a single character or 'tab'");
  return token[0];
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Sampled load_side_sample(const std::string& path, const std::string& label,
                         const InputOptions& opts) {
  if (ends_with(path, ".json"))
    throw ValidationError(
        "this operation needs raw observations (.csv), not a summary: " +
        path);
  DatasetCsv cfg;
  cfg.path = path;
  cfg.has_header = opts.header;
  cfg.class_column = opts.class_column;
  cfg.delimiter = parse_delimiter(opts.delimiter);
  auto groups = load_csv(cfg);
  if (!opts.class_column) {
    if (!label.empty())
      throw ParameterError("class labels require --class-column");
    return std::move(groups.front().second);
  }
  if (label.empty()) {
    if (groups.size() == 1) return std::move(groups.front().second);
    std::string available;
    for (const auto& [l, s] : groups)
      available += (available.empty() ? "" : ", ") + l;
    throw ValidationError(path +
                          " holds several classes; select one with a label "
                          "option (available: " +
                          available + ")");
  }
  for (auto& [l, s] : groups)
    if (l == label) return std::move(s);
  std::string available;
  for (const auto& [l, s] : groups)
    available += (available.empty() ? "" : ", ") + l;
  throw ValidationError("class '" + label + "' not found in " + path +
                        " (available: " + available + ")");
}

GaussianSummaryd load_side_summary(const std::string& path,
                                   const std::string& label,
                                   const InputOptions& opts) {
  if (ends_with(path, ".json")) return read_summary_json(path);
  return sample_moments(load_side_sample(path, label, opts));
}

// "a,b,c" with "lo:step:hi" expansions.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string token = text.substr(start, comma - start);
    start = comma + 1;
    if (token.empty()) continue;
    const std::size_t c1 = token.find(':');
    if (c1 == std::string::npos) {
      try {
        values.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw ParameterError("cannot parse grid value '" + token + "'");
      }
      continue;
    }
    const std::size_t c2 = token.find(':', c1 + 1);
    if (c2 == std::string::npos)
      throw ParameterError("range grid entries use lo:step:hi, got '" +
                           token + "'");
    double lo, step, hi;
    try {
      lo = std::stod(token.substr(0, c1));
      step = std::stod(token.substr(c1 + 1, c2 - c1 - 1));
      hi = std::stod(token.substr(c2 + 1));
    } catch (const std::exception&) {
      throw ParameterError("cannot parse grid range '" + token + "'");
    }
    if (!(step > 0.0))
      throw ParameterError("grid range step must be positive in '" + token +
                           "'");
    for (long i = 0;; ++i) {
      const double v = lo + static_cast<double>(i) * step;
      if (v > hi + step * 1e-9) break;
      values.push_back(v);
    }
  }
  if (values.empty()) throw ParameterError("empty parameter grid");
  return values;
}

std::vector<double> default_grid(Family family, Index d) {
  std::vector<double> values;
  if (family == Family::LogSimplicial_JB ||
      family == Family::LogSimplicial_BR) {
    for (Index k = 1; k <= d; ++k) values.push_back(static_cast<double>(k));
  } else {
    for (int i = 0; i < 100; ++i) values.push_back(0.01 * i);
  }
  return values;
}

// "bhattacharyya,logphik-jb:3,logphip-br:0.5,..."
std::vector<DistanceSpec> parse_family_list(const std::string& text) {
  std::vector<DistanceSpec> specs;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string token = text.substr(start, comma - start);
    start = comma + 1;
    if (token.empty()) continue;
    const std::size_t colon = token.find(':');
    const std::string name =
        colon == std::string::npos ? token : token.substr(0, colon);
    const Family family = parse_family(name);
    if (colon == std::string::npos) {
      if (family_has_parameter(family))
        throw ParameterError("family '" + name +
                             "' needs a parameter, e.g. '" + name + ":3'");
      specs.push_back(DistanceSpec::with_parameter(family, 0.0));
    } else {
      double value;
      try {
        value = std::stod(token.substr(colon + 1));
      } catch (const std::exception&) {
        throw ParameterError("cannot parse parameter in '" + token + "'");
      }
      specs.push_back(DistanceSpec::with_parameter(family, value));
    }
  }
  if (specs.empty()) throw ParameterError("empty distance list");
  return specs;
}

SamplingScheme parse_scheme(const std::string& token, Index r) {
  if (token == "subsample") return SamplingScheme::subsample(r);
  if (token == "bootstrap") return SamplingScheme::bootstrap();
  throw ParameterError("unknown scheme '" + token +
                       "'; expected subsample or bootstrap");
}

void emit(const nlohmann::json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot write file: " + out_path);
    out << text;
  }
  std::cout << text;
}

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.')
      out += c;
    else if (c == '(' || c == ')' || c == '=' || c == ',')
      out += '_';
    else
      out += '_';
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "mvdiv: divergences between multivariate normal summaries and "
      "two-sample tests built on them"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "worker threads (0 = hardware concurrency)");

  // ---- dist ----
  auto* dist_cmd = app.add_subcommand(
      "dist", "one distance between two samples or summaries");
  InputOptions dist_in;
  DistanceOptions dist_opts;
  std::string dist_out;
  add_input_options(dist_cmd, dist_in);
  add_distance_options(dist_cmd, dist_opts);
  dist_cmd->add_option("--out", dist_out, "also write the JSON result here");

  // ---- roc ----
  auto* roc_cmd = app.add_subcommand(
      "roc", "ROC of one distance over pseudo-sample pairs");
  InputOptions roc_in;
  DistanceOptions roc_opts;
  std::string roc_out, roc_scheme = "subsample";
  Index roc_pairs = 0, roc_r = 5;
  std::uint64_t roc_seed = 0;
  add_input_options(roc_cmd, roc_in);
  add_distance_options(roc_cmd, roc_opts);
  roc_cmd->add_option("--N", roc_pairs,
                      "pseudo pairs per hypothesis (0 = first sample size)");
  roc_cmd->add_option("--r", roc_r, "rows removed per side when subsampling");
  roc_cmd->add_option("--scheme", roc_scheme, "subsample or bootstrap");
  roc_cmd->add_option("--seed", roc_seed, "random seed")->required();
  roc_cmd->add_option("--out", roc_out, "write the ROC curve CSV here");

  // ---- select ----
  auto* select_cmd = app.add_subcommand(
      "select", "data-driven parameter selection over a grid");
  InputOptions select_in;
  std::string select_family = "logphik-br";
  std::string select_grid_text, select_out, select_scheme = "subsample";
  Index select_pairs = 0, select_r = 5;
  std::uint64_t select_seed = 0;
  add_input_options(select_cmd, select_in);
  select_cmd->add_option("--family", select_family,
                         "parametric family: logphip-jb, logphip-br, "
                         "logphik-jb, logphik-br");
  select_cmd->add_option("--grid", select_grid_text,
                         "grid values 'a,b,c' or ranges 'lo:step:hi' "
                         "(default: k in 1..d, or p in 0:0.01:0.99)");
  select_cmd->add_option("--N", select_pairs,
                         "pseudo pairs per hypothesis (0 = first sample "
                         "size)");
  select_cmd->add_option("--r", select_r,
                         "rows removed per side when subsampling");
  select_cmd->add_option("--scheme", select_scheme,
                         "subsample or bootstrap");
  select_cmd->add_option("--seed", select_seed, "random seed")->required();
  select_cmd->add_option("--out", select_out,
                         "also write the JSON result here");

  // ---- test ----
  auto* test_cmd = app.add_subcommand(
      "test", "two-sample test with calibrated threshold");
  InputOptions test_in;
  DistanceOptions test_opts;
  std::string test_grid_text, test_out, test_scheme = "subsample";
  Index test_pairs = 0, test_r = 5;
  double test_significance = 0.05;
  std::uint64_t test_seed = 0;
  bool test_unbiased = false;
  add_input_options(test_cmd, test_in);
  add_distance_options(test_cmd, test_opts);
  test_cmd->add_option("--grid", test_grid_text,
                       "select the family parameter over this grid instead "
                       "of fixing it ('a,b,c', 'lo:step:hi', or 'default')");
  test_cmd->add_option("--N", test_pairs,
                       "pseudo pairs per hypothesis (0 = first sample size)");
  test_cmd->add_option("--r", test_r,
                       "rows removed per side when subsampling");
  test_cmd->add_option("--scheme", test_scheme, "subsample or bootstrap");
  test_cmd->add_option("--significance", test_significance,
                       "test level in (0, 0.5], default 0.05");
  test_cmd->add_option("--seed", test_seed, "random seed")->required();
  test_cmd->add_flag("--unbiased", test_unbiased,
                     "apply the small-sample correction to log Phi_k "
                     "Burbea-Rao scores");
  test_cmd->add_option("--out", test_out, "also write the JSON result here");

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand(
      "simulate", "benchmark distances on a covariance-shift preset");
  int sim_example = 1;
  double sim_param = 1.4;
  Index sim_n = 200, sim_d = 20, sim_reps = 0;
  double sim_significance = 0.05;
  std::uint64_t sim_seed = 0;
  std::string sim_families, sim_out, sim_roc_prefix;
  sim_cmd->add_option("--example", sim_example, "preset: 1 (scale) or 2 "
                      "(rotation)")
      ->check(CLI::IsMember({1, 2}));
  sim_cmd->add_option("--param", sim_param,
                      "preset parameter: alpha for 1, theta for 2")
      ->required();
  sim_cmd->add_option("--n", sim_n, "observations per sample (default 200)");
  sim_cmd->add_option("--d", sim_d, "dimension (default 20)");
  sim_cmd->add_option("--reps", sim_reps, "replicates")->required();
  sim_cmd->add_option("--families", sim_families,
                      "comma list, parametric entries as name:value, e.g. "
                      "'bhattacharyya,logphik-jb:3,logphip-jb:0.5'")
      ->required();
  sim_cmd->add_option("--significance", sim_significance,
                      "level for the reported fp/tp rates");
  sim_cmd->add_option("--seed", sim_seed, "random seed")->required();
  sim_cmd->add_option("--out", sim_out, "also write the JSON result here");
  sim_cmd->add_option("--roc-prefix", sim_roc_prefix,
                      "write one ROC CSV per distance with this path prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*dist_cmd) {
      const DistanceSpec spec = build_spec(dist_opts);
      double value;
      if (spec.family() == Family::Energy) {
        const Sampled x =
            load_side_sample(dist_in.x_path, dist_in.x_label, dist_in);
        const Sampled y =
            load_side_sample(dist_in.y_path, dist_in.y_label, dist_in);
        value = energy_distance(x, y, spec.delta());
      } else {
        const GaussianSummaryd gx =
            load_side_summary(dist_in.x_path, dist_in.x_label, dist_in);
        const GaussianSummaryd gy =
            load_side_summary(dist_in.y_path, dist_in.y_label, dist_in);
        value = evaluate<double>(spec, gx, gy);
      }
      nlohmann::json j;
      j["distance"] = distance_spec_json(spec);
      j["value"] = value;
      emit(j, dist_out);
    } else if (*roc_cmd) {
      const DistanceSpec spec = build_spec(roc_opts);
      const Sampled x =
          load_side_sample(roc_in.x_path, roc_in.x_label, roc_in);
      const Sampled y =
          load_side_sample(roc_in.y_path, roc_in.y_label, roc_in);
      spec.validate_for_dim(x.dim());
      const SamplingScheme scheme = parse_scheme(roc_scheme, roc_r);
      const Index pairs = roc_pairs == 0 ? x.n() : roc_pairs;
      const auto pairs0 = pseudo_pairs_h0(x, y, scheme, pairs, roc_seed);
      const auto pairs1 = pseudo_pairs_h1(x, y, scheme, pairs, roc_seed);
      std::vector<double> d0, d1;
      d0.reserve(pairs0.size());
      d1.reserve(pairs1.size());
      for (const auto& pr : pairs0)
        d0.push_back(mvdiv::detail::pair_statistic(spec, pr.x, pr.y));
      for (const auto& pr : pairs1)
        d1.push_back(mvdiv::detail::pair_statistic(spec, pr.x, pr.y));
      const RocCurve curve = roc(d0, d1);
      if (!roc_out.empty()) write_roc_csv(roc_out, curve);
      nlohmann::json j;
      j["distance"] = distance_spec_json(spec);
      j["auc"] = curve.auc;
      j["points"] = curve.points.size();
      emit(j, "");
    } else if (*select_cmd) {
      const Sampled x =
          load_side_sample(select_in.x_path, select_in.x_label, select_in);
      const Sampled y =
          load_side_sample(select_in.y_path, select_in.y_label, select_in);
      GridSpec grid;
      grid.family = parse_family(select_family);
      if (!family_has_parameter(grid.family))
        throw ParameterError("family '" + select_family +
                             "' has no parameter to select");
      grid.values = select_grid_text.empty() || select_grid_text == "default"
                        ? default_grid(grid.family, x.dim())
                        : parse_grid(select_grid_text);
      const SamplingScheme scheme = parse_scheme(select_scheme, select_r);
      const Index pairs = select_pairs == 0 ? x.n() : select_pairs;
      const SelectionResult selection =
          select_parameter(x, y, grid, scheme, pairs, select_seed, threads);
      nlohmann::json j = selection_json(selection);
      j["family"] = family_name(grid.family);
      emit(j, select_out);
    } else if (*test_cmd) {
      const Sampled x =
          load_side_sample(test_in.x_path, test_in.x_label, test_in);
      const Sampled y =
          load_side_sample(test_in.y_path, test_in.y_label, test_in);
      TestConfig config;
      config.pseudo_pairs = test_pairs;
      config.scheme = parse_scheme(test_scheme, test_r);
      config.significance = test_significance;
      config.seed = test_seed;
      config.apply_unbiased_correction = test_unbiased;
      config.max_threads = threads;
      DistanceSpec reported = DistanceSpec::kl();
      if (!test_grid_text.empty()) {
        GridSpec grid;
        grid.family = parse_family(test_opts.family);
        if (!family_has_parameter(grid.family))
          throw ParameterError("family '" + test_opts.family +
                               "' has no parameter to select over a grid");
        grid.values = test_grid_text == "default"
                          ? default_grid(grid.family, x.dim())
                          : parse_grid(test_grid_text);
        config.grid = grid;
      } else {
        config.spec = build_spec(test_opts);
      }
      const TestResult result = run_test(x, y, config);
      if (config.grid)
        reported = DistanceSpec::with_parameter(config.grid->family,
                                                *result.selected_param);
      else
        reported = *config.spec;
      emit(test_result_json(result, reported), test_out);
    } else if (*sim_cmd) {
      if (sim_reps < 2) throw ParameterError("--reps must be at least 2");
      const auto preset =
          sim_example == 1 ? ExamplePreset::One : ExamplePreset::Two;
      const auto specs = parse_family_list(sim_families);
      const auto rows =
          simulate_example(preset, sim_param, sim_n, sim_d, sim_reps, specs,
                           sim_seed, sim_significance, threads);
      if (!sim_roc_prefix.empty()) {
        for (const auto& row : rows)
          write_roc_csv(sim_roc_prefix + sanitize_label(row.spec.describe()) +
                            ".csv",
                        row.roc);
      }
      nlohmann::json j;
      j["example"] = sim_example;
      j["param"] = sim_param;
      j["n"] = sim_n;
      j["d"] = sim_d;
      j["reps"] = sim_reps;
      j["results"] = sim_rows_json(rows);
      emit(j, sim_out);
    }
    return 0;
  } catch (const ValidationError& e) {
    nlohmann::json err;
    err["error"] = {{"kind", "validation"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    nlohmann::json err;
    err["error"] = {{"kind", "numerical"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 3;
  } catch (const InfeasibleError& e) {
    nlohmann::json err;
    err["error"] = {{"kind", "infeasible"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 4;
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = {{"kind", "unexpected"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
