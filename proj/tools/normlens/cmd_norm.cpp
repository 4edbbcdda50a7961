#include <memory>

#include "commands.hpp"
#include "common.hpp"
#include "normlens/ingest.hpp"
#include "normlens/numfmt.hpp"
#include "normlens/report.hpp"

namespace normlens::cli {

namespace {

struct NormApplyOptions {
  OutputOptions out;
  SourceOptions src;
  std::string method = "UnitNorm";
  double k = kDefaultUnitNormK;
  double eps = kDefaultEps;
  bool strict = false;
  std::vector<double> gamma;
  std::vector<double> beta;
  bool sample = false;  // --N/--L given with --input
};

int run_norm_apply(const NormApplyOptions& o) {
  NormConfig cfg = make_norm_config(o.method, o.k, o.eps, o.strict);

  TokenBatch x = [&] {
    if (o.src.synthetic()) {
      return gaussian_batch(o.src.n, o.src.l, o.src.mu_vector(), o.src.sigma2_vector(), o.out.seed);
    }
    TokenBatch pool = o.src.load_pool();
    if (!o.sample) return pool;
    return sample_sequences(pool, o.src.n, o.src.l, o.out.seed);
  }();

  if (!o.gamma.empty() || !o.beta.empty()) {
    Affine a;
    a.gamma = o.gamma.empty() ? std::vector<double>(x.d(), 1.0) : broadcast(o.gamma, x.d(), "gamma");
    a.beta = o.beta.empty() ? std::vector<double>(x.d(), 0.0) : broadcast(o.beta, x.d(), "beta");
    cfg.affine = std::move(a);
  }
  validate(cfg, x.d());
  const TokenBatch y = normalize(x, cfg);
  const auto norms = token_l2_norms(y);

  if (o.out.csv()) {
    std::string text = csv_preamble("norm apply", o.out.seed);
    std::vector<std::string> header{"n", "l", "norm"};
    for (std::size_t d = 0; d < y.d(); ++d) header.push_back("x" + std::to_string(d));
    text += csv_join(header);
    for (std::size_t n = 0; n < y.n(); ++n) {
      for (std::size_t l = 0; l < y.l(); ++l) {
        std::vector<std::string> row{std::to_string(n), std::to_string(l),
                                     format_double(norms[n * y.l() + l])};
        for (double v : y.token(n, l)) row.push_back(format_double(v));
        text += csv_join(row);
      }
    }
    emit(o.out.path, text);
    return kPass;
  }

  nlohmann::ordered_json j;
  j["command"] = "norm apply";
  j["seed"] = o.out.seed;
  j["source"] = o.src.describe();
  j["normalization"] = to_json(cfg);
  j["shape"] = {{"N", y.n()}, {"L", y.l()}, {"D", y.d()}};
  j["token_norms"] = norms;
  auto tokens = nlohmann::ordered_json::array();
  for (std::size_t n = 0; n < y.n(); ++n)
    for (std::size_t l = 0; l < y.l(); ++l) {
      const auto t = y.token(n, l);
      tokens.push_back(std::vector<double>(t.begin(), t.end()));
    }
  j["tokens"] = std::move(tokens);
  emit(o.out.path, dump(j));
  return kPass;
}

}  // namespace

void register_norm(CLI::App& app, int& rc) {
  auto* norm = app.add_subcommand("norm", "Normalization kernels");
  norm->require_subcommand(1);
  auto o = std::make_shared<NormApplyOptions>();
  o->src.n = 1;
  o->src.l = 8;
  auto* apply = norm->add_subcommand("apply", "Normalize a token batch and write the result");
  add_output_options(apply, o->out);
  add_source_options(apply, o->src);
  apply->add_option("--method", o->method, "BatchNorm, LayerNormTheory, LayerNormPractice, RMSNorm or UnitNorm")
      ->capture_default_str();
  apply->add_option("--k", o->k, "UnitNorm modulus")->capture_default_str();
  apply->add_option("--eps", o->eps, "Variance regularizer")->capture_default_str();
  apply->add_flag("--strict", o->strict, "Fail on zero-norm tokens instead of flooring the norm");
  apply->add_option("--gamma", o->gamma, "Affine scale, scalar or comma list")->delimiter(',');
  apply->add_option("--beta", o->beta, "Affine shift, scalar or comma list")->delimiter(',');
  apply->callback([o, apply, &rc] {
    o->sample = apply->count("--N") + apply->count("--L") > 0;
    rc = run_norm_apply(*o);
  });
}

}  // namespace normlens::cli
