#include <algorithm>
#include <memory>

#include "commands.hpp"
#include "common.hpp"
#include "normlens/gradcheck.hpp"
#include "normlens/numfmt.hpp"

namespace normlens::cli {

namespace {

struct GradcheckOptions {
  OutputOptions out;
  std::size_t trials = 100;
};

int run_gradcheck(const GradcheckOptions& o) {
  if (o.trials == 0) throw UsageError("--trials must be >= 1");
  const GradcheckReport rep = run_gradcheck_trials(o.trials, o.out.seed);
  const bool pass = rep.all_pass();

  if (o.out.csv()) {
    std::string text = csv_preamble("gradcheck", o.out.seed);
    text += csv_join({"trial", "d_in", "d_out", "k", "alpha", "jacobian_fd_rel_err", "jx_max_abs", "j_asymmetry",
                      "grad_w_fd_rel_err", "grad_b_fd_rel_err", "grad_v_fd_rel_err", "output_max_abs_diff",
                      "grad_w_scaling_rel_err", "grad_b_scaling_rel_err", "grad_v_scaling_rel_err", "pass"});
    for (const auto& t : rep.trials) {
      text += csv_join({std::to_string(t.index), std::to_string(t.d_in), std::to_string(t.d_out),
                        format_double(t.k), format_double(t.alpha), format_double(t.jacobian_fd_rel_err),
                        format_double(t.jx_max_abs), format_double(t.j_asymmetry),
                        format_double(t.grad_w_fd_rel_err), format_double(t.grad_b_fd_rel_err),
                        format_double(t.grad_v_fd_rel_err), format_double(t.scaling.output_max_abs_diff),
                        format_double(t.scaling.grad_w_rel_err), format_double(t.scaling.grad_b_rel_err),
                        format_double(t.scaling.grad_v_rel_err), rep.trial_passes(t) ? "1" : "0"});
    }
    emit(o.out.path, text);
    return pass ? kPass : kAssertionFailed;
  }

  auto max_of = [&](auto field) {
    double m = 0.0;
    for (const auto& t : rep.trials) m = std::max(m, field(t));
    return m;
  };
  nlohmann::ordered_json j;
  j["command"] = "gradcheck";
  j["seed"] = o.out.seed;
  j["trials"] = o.trials;
  j["thresholds"] = {{"fd_rel", rep.thresholds.fd_rel},
                     {"null_space", rep.thresholds.null_space},
                     {"output_invariance", kOutputInvarianceTol},
                     {"grad_scaling_rel", kGradScalingRelTol}};
  j["max"] = {
      {"jacobian_fd_rel_err", max_of([](const GradcheckTrial& t) { return t.jacobian_fd_rel_err; })},
      {"grad_w_fd_rel_err", max_of([](const GradcheckTrial& t) { return t.grad_w_fd_rel_err; })},
      {"grad_b_fd_rel_err", max_of([](const GradcheckTrial& t) { return t.grad_b_fd_rel_err; })},
      {"grad_v_fd_rel_err", max_of([](const GradcheckTrial& t) { return t.grad_v_fd_rel_err; })},
      {"jx_max_abs", max_of([](const GradcheckTrial& t) { return t.jx_max_abs; })},
      {"j_asymmetry", max_of([](const GradcheckTrial& t) { return t.j_asymmetry; })},
      {"output_max_abs_diff", max_of([](const GradcheckTrial& t) { return t.scaling.output_max_abs_diff; })},
      {"grad_w_scaling_rel_err", max_of([](const GradcheckTrial& t) { return t.scaling.grad_w_rel_err; })},
      {"grad_b_scaling_rel_err", max_of([](const GradcheckTrial& t) { return t.scaling.grad_b_rel_err; })},
      {"grad_v_scaling_rel_err", max_of([](const GradcheckTrial& t) { return t.scaling.grad_v_rel_err; })}};
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : rep.trials) {
    arr.push_back({{"trial", t.index},
                   {"d_in", t.d_in},
                   {"d_out", t.d_out},
                   {"k", t.k},
                   {"alpha", t.alpha},
                   {"jacobian_fd_rel_err", t.jacobian_fd_rel_err},
                   {"jx_max_abs", t.jx_max_abs},
                   {"j_asymmetry", t.j_asymmetry},
                   {"upstream_jx", t.upstream_jx},
                   {"grad_w_fd_rel_err", t.grad_w_fd_rel_err},
                   {"grad_b_fd_rel_err", t.grad_b_fd_rel_err},
                   {"grad_v_fd_rel_err", t.grad_v_fd_rel_err},
                   {"output_max_abs_diff", t.scaling.output_max_abs_diff},
                   {"grad_w_scaling_rel_err", t.scaling.grad_w_rel_err},
                   {"grad_b_scaling_rel_err", t.scaling.grad_b_rel_err},
                   {"grad_v_scaling_rel_err", t.scaling.grad_v_rel_err},
                   {"pass", rep.trial_passes(t)}});
  }
  j["results"] = std::move(arr);
  j["pass"] = pass;
  emit(o.out.path, dump(j));
  return pass ? kPass : kAssertionFailed;
}

}  // namespace

void register_gradcheck(CLI::App& app, int& rc) {
  auto o = std::make_shared<GradcheckOptions>();
  auto* g = app.add_subcommand("gradcheck", "UnitNorm gradient identities against finite differences");
  add_output_options(g, o->out);
  g->add_option("--trials", o->trials, "Random instances")->capture_default_str();
  g->callback([o, &rc] { rc = run_gradcheck(*o); });
}

}  // namespace normlens::cli
