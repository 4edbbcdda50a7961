#include <filesystem>
#include <memory>

#include "commands.hpp"
#include "common.hpp"
#include "normlens/numfmt.hpp"

namespace normlens::cli {

namespace {

struct ShiftOptions {
  OutputOptions out;
  SourceOptions src;
  std::vector<std::string> methods{"UnitNorm", "RMSNorm", "LayerNormPractice", "LayerNormTheory", "BatchNorm"};
  double k = kDefaultUnitNormK;
  double eps = kDefaultEps;
  bool strict = false;
  std::size_t sets = 10;
  std::string out_dir;
};

// "UnitNorm(k=1.5)" -> "UnitNorm_k1.5"
std::string file_stem(const NormConfig& cfg) {
  std::string label(to_string(cfg.method));
  if (cfg.method == NormMethod::UnitNorm) label += "_k" + format_double(cfg.k);
  return label;
}

std::string summary_csv(const ShiftStudy& s) {
  std::string text = csv_preamble("shift study", s.seed);
  text += csv_join({"method", "anchors", "median_chebyshev", "median_cosine", "median_kl", "kl_infinite",
                    "median_entropy_orig", "median_entropy_norm"});
  for (const auto& m : s.methods) {
    text += csv_join({method_label(m.config), std::to_string(m.chebyshev.count),
                      format_double(m.chebyshev.median), format_double(m.cosine.median),
                      format_double(m.kl.median), std::to_string(m.kl_infinite),
                      format_double(m.entropy_original.median), format_double(m.entropy_normalized.median)});
  }
  return text;
}

int run_shift_study_cmd(const ShiftOptions& o) {
  std::vector<NormConfig> configs;
  for (const auto& name : o.methods) configs.push_back(make_norm_config(name, o.k, o.eps, o.strict));
  if (!o.src.synthetic() && o.src.d == 0 && o.src.input_format == "rawf32") {
    throw UsageError("--D is required for rawf32 input");
  }

  const ShiftStudy study = run_shift_study(o.src.source(), configs, o.sets, o.out.seed);

  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    for (const auto& m : study.methods) {
      for (std::size_t s = 0; s < m.sets.size(); ++s) {
        const auto stem = file_stem(m.config) + "_set" + std::to_string(s);
        const auto path = (std::filesystem::path(o.out_dir) / stem).string();
        if (o.out.csv()) {
          emit(path + ".csv", csv_preamble("shift study", study.set_seeds[s]) + to_csv(m.sets[s]));
        } else {
          nlohmann::ordered_json j;
          j["command"] = "shift study";
          j["seed"] = study.set_seeds[s];
          j["set"] = s;
          j["report"] = to_json(m.sets[s]);
          emit(path + ".json", dump(j));
        }
      }
    }
  }

  const std::string violation = study.check_invariants();
  if (o.out.csv()) {
    emit(o.out.path, summary_csv(study));
  } else {
    nlohmann::ordered_json j;
    j["command"] = "shift study";
    j["seed"] = o.out.seed;
    j["source"] = o.src.describe();
    auto body = to_json(study);
    for (auto it = body.begin(); it != body.end(); ++it) {
      if (it.key() != "seed") j[it.key()] = it.value();
    }
    j["invariants_ok"] = violation.empty();
    if (!violation.empty()) j["invariant_violation"] = violation;
    emit(o.out.path, dump(j));
  }
  return violation.empty() ? kPass : kAssertionFailed;
}

}  // namespace

void register_shift(CLI::App& app, int& rc) {
  auto* shift = app.add_subcommand("shift", "Attention-shift analysis");
  shift->require_subcommand(1);
  auto o = std::make_shared<ShiftOptions>();
  auto* study = shift->add_subcommand("study", "Compare attention shift across normalization methods");
  add_output_options(study, o->out);
  add_source_options(study, o->src);
  study->add_option("--methods", o->methods, "Comma-separated methods")->delimiter(',')->capture_default_str();
  study->add_option("--k", o->k, "UnitNorm modulus")->capture_default_str();
  study->add_option("--eps", o->eps, "Variance regularizer")->capture_default_str();
  study->add_flag("--strict", o->strict, "Fail on zero-norm tokens");
  study->add_option("--sets", o->sets, "Independent sets")->check(CLI::PositiveNumber)->capture_default_str();
  study->add_option("--out-dir", o->out_dir, "Also write one report per (method, set) here");
  study->callback([o, &rc] { rc = run_shift_study_cmd(*o); });
}

}  // namespace normlens::cli
