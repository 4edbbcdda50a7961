#include <cmath>
#include <memory>
#include <optional>

#include "commands.hpp"
#include "common.hpp"
#include "normlens/numfmt.hpp"
#include "normlens/signflip.hpp"

namespace normlens::cli {

namespace {

constexpr double kFlipFloor = 0.40;
constexpr double kRawNonpositiveCeiling = 0.1;
constexpr std::size_t kSweepSamples = 20000;

struct SignflipOptions {
  OutputOptions out;
  std::size_t d = 256;
  std::optional<double> mu;  // default: corollary threshold 6/D^(1/4) * sigma
  double sigma2 = 1.0;
  std::optional<double> mu_y;
  std::optional<double> sigma2_y;
  std::size_t samples = kDefaultSignFlipSamples;
  std::string standardize = "model";
  // sweep
  std::vector<std::size_t> dims{64, 81, 256, 625, 1024};
  std::vector<double> ratios;                 // explicit mu/sigma values
  std::vector<double> scales{0.5, 1.0, 2.0};  // multiples of 6/D^(1/4)
};

Standardization standardization(const SignflipOptions& o) {
  return o.standardize == "empirical" ? Standardization::EmpiricalPerToken : Standardization::ModelParameters;
}

GaussianTokenModel model_for(const SignflipOptions& o, std::size_t d, double mu_x) {
  if (!(o.sigma2 > 0.0)) throw UsageError("--sigma2 must be > 0");
  const double s2y = o.sigma2_y.value_or(o.sigma2);
  if (!(s2y > 0.0)) throw UsageError("--sigma2-y must be > 0");
  return GaussianTokenModel::shared(d, mu_x, o.sigma2, o.mu_y.value_or(mu_x), s2y);
}

double default_mu(const SignflipOptions& o, std::size_t d) {
  return corollary_ratio_threshold(d) * std::sqrt(o.sigma2);
}

struct Assertion {
  std::string name;
  bool checked = false;
  bool passed = true;
};

nlohmann::ordered_json to_json(const Assertion& a) {
  return {{"name", a.name}, {"checked", a.checked}, {"passed", a.passed}};
}

nlohmann::ordered_json describe_model(const GaussianTokenModel& m, const SignflipOptions& o) {
  const double mx = m.mu_x[0], my = m.mu_y[0];
  const double sx = std::sqrt(m.sigma2_x[0]), sy = std::sqrt(m.sigma2_y[0]);
  const ConditionTerms t = theorem_condition_terms(m);
  nlohmann::ordered_json j;
  j["model"] = {{"D", m.dim()}, {"mu_x", mx}, {"sigma2_x", m.sigma2_x[0]}, {"mu_y", my}, {"sigma2_y", m.sigma2_y[0]}};
  j["dot_mean"] = dot_mean(m);
  j["dot_variance"] = dot_variance(m);
  j["theorem"] = {{"lhs", t.lhs}, {"rhs", t.rhs}, {"holds", t.holds()}};
  j["corollary"] = {{"ratio_x", mx / sx},
                    {"ratio_y", my / sy},
                    {"threshold", corollary_ratio_threshold(m.dim())},
                    {"min_dim", kCorollaryMinDim},
                    {"holds", corollary_condition(mx, sx, my, sy, m.dim())}};
  j["standardize"] = o.standardize;
  return j;
}

int finish(nlohmann::ordered_json j, const std::vector<Assertion>& checks, const OutputOptions& out) {
  bool pass = true;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& a : checks) {
    arr.push_back(to_json(a));
    pass = pass && a.passed;
  }
  j["assertions"] = std::move(arr);
  j["pass"] = pass;
  emit(out.path, dump(j));
  return pass ? kPass : kAssertionFailed;
}

int run_check(const SignflipOptions& o) {
  const auto m = model_for(o, o.d, o.mu.value_or(default_mu(o, o.d)));
  nlohmann::ordered_json j;
  j["command"] = "signflip check";
  j["seed"] = o.out.seed;
  const auto body = describe_model(m, o);
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  Assertion implied{"corollary implies theorem condition"};
  implied.checked = body["corollary"]["holds"].get<bool>();
  implied.passed = !implied.checked || body["theorem"]["holds"].get<bool>();
  if (o.out.csv()) {
    std::string text = csv_preamble("signflip check", o.out.seed);
    text += csv_join({"D", "ratio", "threshold", "lhs", "rhs", "theorem_holds", "corollary_holds"});
    text += csv_join({std::to_string(m.dim()), format_double(body["corollary"]["ratio_x"].get<double>()),
                      format_double(corollary_ratio_threshold(m.dim())),
                      format_double(body["theorem"]["lhs"].get<double>()),
                      format_double(body["theorem"]["rhs"].get<double>()),
                      body["theorem"]["holds"].get<bool>() ? "1" : "0",
                      body["corollary"]["holds"].get<bool>() ? "1" : "0"});
    emit(o.out.path, text);
    return implied.passed ? kPass : kAssertionFailed;
  }
  return finish(std::move(j), {implied}, o.out);
}

struct EstimateRow {
  GaussianTokenModel model;
  bool condition = false;
  SignFlipCounts counts;
  SignFlipEstimate flip;
  SignFlipEstimate raw_nonpositive;
  Assertion flip_floor{"p_hat + 3 std_err >= 0.4 when the condition holds"};
  Assertion raw_ceiling{"Pr(x^T y <= 0) <= 0.1 + 3 std_err when the condition holds"};
};

EstimateRow estimate_row(const SignflipOptions& o, GaussianTokenModel m, Seed seed) {
  EstimateRow r;
  r.model = std::move(m);
  r.condition = theorem_condition(r.model);
  r.counts = count_signflip_events(r.model, o.samples, seed, standardization(o));
  r.flip = proportion(r.counts.flips, r.counts.samples, seed);
  r.raw_nonpositive = proportion(r.counts.raw_nonpositive, r.counts.samples, seed);
  r.flip_floor.checked = r.raw_ceiling.checked = r.condition;
  if (r.condition) {
    r.flip_floor.passed = r.flip.p_hat + 3.0 * r.flip.std_err >= kFlipFloor;
    r.raw_ceiling.passed =
        r.raw_nonpositive.p_hat <= kRawNonpositiveCeiling + 3.0 * r.raw_nonpositive.std_err;
  }
  return r;
}

int run_estimate(const SignflipOptions& o) {
  if (o.samples == 0) throw UsageError("--samples must be >= 1");
  const auto r = estimate_row(o, model_for(o, o.d, o.mu.value_or(default_mu(o, o.d))), o.out.seed);
  const bool pass = r.flip_floor.passed && r.raw_ceiling.passed;
  if (o.out.csv()) {
    std::string text = csv_preamble("signflip estimate", o.out.seed);
    text += csv_join({"D", "ratio", "condition_holds", "p_hat", "std_err", "p_raw_nonpositive"});
    text += csv_join({std::to_string(r.model.dim()),
                      format_double(r.model.mu_x[0] / std::sqrt(r.model.sigma2_x[0])),
                      r.condition ? "1" : "0", format_double(r.flip.p_hat), format_double(r.flip.std_err),
                      format_double(r.raw_nonpositive.p_hat)});
    emit(o.out.path, text);
    return pass ? kPass : kAssertionFailed;
  }
  nlohmann::ordered_json j;
  j["command"] = "signflip estimate";
  j["seed"] = o.out.seed;
  const auto body = describe_model(r.model, o);
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  j["samples"] = r.counts.samples;
  j["flips"] = r.counts.flips;
  j["p_hat"] = r.flip.p_hat;
  j["std_err"] = r.flip.std_err;
  j["raw_nonpositive"] = r.counts.raw_nonpositive;
  j["p_raw_nonpositive"] = r.raw_nonpositive.p_hat;
  j["p_raw_nonpositive_std_err"] = r.raw_nonpositive.std_err;
  j["normalized_positive"] = r.counts.normalized_positive;
  j["p_normalized_positive"] = static_cast<double>(r.counts.normalized_positive) /
                               static_cast<double>(r.counts.samples);
  return finish(std::move(j), {r.flip_floor, r.raw_ceiling}, o.out);
}

int run_sweep(const SignflipOptions& o) {
  if (o.samples == 0) throw UsageError("--samples must be >= 1");
  if (o.dims.empty()) throw UsageError("--Ds is empty");
  const double sigma = std::sqrt(o.sigma2);
  std::vector<std::pair<std::size_t, double>> grid;  // (D, mu/sigma)
  for (std::size_t d : o.dims) {
    if (d == 0) throw UsageError("--Ds entries must be >= 1");
    if (!o.ratios.empty()) {
      for (double r : o.ratios) grid.emplace_back(d, r);
    } else {
      for (double s : o.scales) grid.emplace_back(d, s * corollary_ratio_threshold(d));
    }
  }

  std::vector<EstimateRow> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Seed seed = Rng::derive(o.out.seed, i).next_u64();
    rows.push_back(estimate_row(o, model_for(o, grid[i].first, grid[i].second * sigma), seed));
  }
  bool pass = true;
  for (const auto& r : rows) pass = pass && r.flip_floor.passed && r.raw_ceiling.passed;

  if (o.out.csv()) {
    std::string text = csv_preamble("signflip sweep", o.out.seed);
    text += csv_join({"D", "ratio", "condition_holds", "p_hat", "std_err"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      text += csv_join({std::to_string(grid[i].first), format_double(grid[i].second),
                        rows[i].condition ? "1" : "0", format_double(rows[i].flip.p_hat),
                        format_double(rows[i].flip.std_err)});
    }
    emit(o.out.path, text);
    return pass ? kPass : kAssertionFailed;
  }
  nlohmann::ordered_json j;
  j["command"] = "signflip sweep";
  j["seed"] = o.out.seed;
  j["samples_per_point"] = o.samples;
  j["standardize"] = o.standardize;
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    arr.push_back({{"D", grid[i].first},
                   {"ratio", grid[i].second},
                   {"seed", rows[i].flip.seed},
                   {"condition_holds", rows[i].condition},
                   {"p_hat", rows[i].flip.p_hat},
                   {"std_err", rows[i].flip.std_err},
                   {"p_raw_nonpositive", rows[i].raw_nonpositive.p_hat},
                   {"pass", rows[i].flip_floor.passed && rows[i].raw_ceiling.passed}});
  }
  j["points"] = std::move(arr);
  j["pass"] = pass;
  emit(o.out.path, dump(j));
  return pass ? kPass : kAssertionFailed;
}

void add_model_options(CLI::App* cmd, SignflipOptions& o) {
  cmd->add_option("--D", o.d, "Feature dimension")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--mu", o.mu, "Shared mean of x (default 6/D^(1/4) * sigma)");
  cmd->add_option("--sigma2", o.sigma2, "Shared variance of x")->capture_default_str();
  cmd->add_option("--mu-y", o.mu_y, "Shared mean of y (default: same as x)");
  cmd->add_option("--sigma2-y", o.sigma2_y, "Shared variance of y (default: same as x)");
}

void add_sampling_options(CLI::App* cmd, SignflipOptions& o) {
  cmd->add_option("--samples", o.samples, "Monte Carlo pairs")->capture_default_str();
  cmd->add_option("--standardize", o.standardize, "model: true parameters; empirical: per-token statistics")
      ->check(CLI::IsMember({"model", "empirical"}))
      ->capture_default_str();
}

}  // namespace

void register_signflip(CLI::App& app, int& rc) {
  auto o = std::make_shared<SignflipOptions>();
  auto* sf = app.add_subcommand("signflip", "Dot-product sign flips under standardization (default: estimate)");
  add_output_options(sf, o->out);
  add_model_options(sf, *o);
  add_sampling_options(sf, *o);
  sf->fallthrough();

  auto* check = sf->add_subcommand("check", "Evaluate the mean-variance condition and its corollary");
  add_model_options(check, *o);
  auto* estimate = sf->add_subcommand("estimate", "Monte Carlo sign-flip probability");
  add_model_options(estimate, *o);
  add_sampling_options(estimate, *o);
  auto* sweep = sf->add_subcommand("sweep", "Sign-flip probability over a (D, mu/sigma) grid");
  sweep->add_option("--sigma2", o->sigma2, "Shared variance")->capture_default_str();
  add_sampling_options(sweep, *o);
  sweep->add_option("--Ds", o->dims, "Dimensions")->delimiter(',')->capture_default_str();
  sweep->add_option("--ratios", o->ratios, "Explicit mu/sigma values")->delimiter(',');
  sweep->add_option("--scales", o->scales, "Multiples of 6/D^(1/4) when --ratios is absent")
      ->delimiter(',')
      ->capture_default_str();

  check->callback([o, &rc] { rc = run_check(*o); });
  estimate->callback([o, &rc] { rc = run_estimate(*o); });
  sweep->callback([o, sweep, &rc] {
    if (sweep->count("--samples") == 0 && o->samples == kDefaultSignFlipSamples) o->samples = kSweepSamples;
    rc = run_sweep(*o);
  });
  sf->callback([o, sf, &rc] {
    if (sf->get_subcommands().empty()) rc = run_estimate(*o);
  });
}

}  // namespace normlens::cli
