// Acceptance suite: one line per criterion, exit status 0 only if every
// selected criterion passes within its time budget.
//
//   acceptance [--only N] [--cli PATH]

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "normlens/attention.hpp"
#include "normlens/elb.hpp"
#include "normlens/gradcheck.hpp"
#include "normlens/norm.hpp"
#include "normlens/numfmt.hpp"
#include "normlens/parallel.hpp"
#include "normlens/rng.hpp"
#include "normlens/signflip.hpp"
#include "normlens/study.hpp"

using namespace normlens;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // <= 0: no budget
  std::function<Outcome()> run;
};

std::string cli_path;

std::string fmt(double v) { return format_double(v); }

const std::size_t kSignflipDims[] = {81, 256, 625};

GaussianTokenModel corollary_model(std::size_t d) {
  const double mu = corollary_ratio_threshold(d);
  return GaussianTokenModel::shared(d, mu, 1.0, mu, 1.0);
}

Outcome ac1_signflip_bound() {
  Outcome o;
  double worst = 1.0;
  for (std::size_t d : kSignflipDims) {
    const double mu = corollary_ratio_threshold(d);
    o.require(corollary_condition(mu, 1.0, mu, 1.0, d), "corollary condition false at D=" + std::to_string(d));
    const auto m = corollary_model(d);
    o.require(theorem_condition(m), "theorem condition false at D=" + std::to_string(d));
    for (Seed seed : {11u, 22u, 33u}) {
      const auto e = estimate_signflip(m, 100000, seed);
      const double bound = e.p_hat + 3.0 * e.std_err;
      worst = std::min(worst, bound);
      o.require(bound >= 0.40, "D=" + std::to_string(d) + " seed=" + std::to_string(seed) +
                                   " p_hat+3se=" + fmt(bound));
    }
  }
  if (o.pass) o.detail = "min p_hat+3se = " + fmt(worst);
  return o;
}

Outcome ac2_proof_subbound() {
  Outcome o;
  double worst = 0.0;
  for (std::size_t d : kSignflipDims) {
    const auto c = count_signflip_events(corollary_model(d), 100000, 2000 + d);
    const auto p = proportion(c.raw_nonpositive, c.samples, 0);
    worst = std::max(worst, p.p_hat);
    o.require(p.p_hat <= 0.1 + 3.0 * p.std_err,
              "D=" + std::to_string(d) + " Pr(x^T y <= 0) = " + fmt(p.p_hat));
  }
  if (o.pass) o.detail = "max Pr(x^T y <= 0) = " + fmt(worst);
  return o;
}

Outcome ac3_moments() {
  constexpr std::size_t kModels = 20;
  constexpr std::size_t kSamples = 1000000;
  struct Row {
    double mean_z = 0.0, var_z = 0.0;
  };
  std::vector<Row> rows(kModels);
  parallel_for(kModels, [&](std::size_t i) {
    Rng r = Rng::derive(314159, i);
    const std::size_t d = 1 + r.below(12);
    GaussianTokenModel m;
    for (std::size_t j = 0; j < d; ++j) {
      m.mu_x.push_back(r.uniform(-2.0, 2.0));
      m.mu_y.push_back(r.uniform(-2.0, 2.0));
      m.sigma2_x.push_back(r.uniform(0.1, 3.0));
      m.sigma2_y.push_back(r.uniform(0.1, 3.0));
    }
    std::vector<double> sx(d), sy(d);
    for (std::size_t j = 0; j < d; ++j) {
      sx[j] = std::sqrt(m.sigma2_x[j]);
      sy[j] = std::sqrt(m.sigma2_y[j]);
    }
    // shifted sums around the closed-form mean keep the moments well conditioned
    const double mu0 = dot_mean(m);
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (std::size_t t = 0; t < kSamples; ++t) {
      double p = 0.0;
      for (std::size_t j = 0; j < d; ++j) p += r.normal(m.mu_x[j], sx[j]) * r.normal(m.mu_y[j], sy[j]);
      const double z = p - mu0;
      s1 += z;
      s2 += z * z;
      s3 += z * z * z;
      s4 += z * z * z * z;
    }
    const double n = static_cast<double>(kSamples);
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    const double m4 = s4 / n - 4.0 * mean * s3 / n + 6.0 * mean * mean * s2 / n - 3.0 * std::pow(mean, 4.0);
    rows[i].mean_z = std::abs(mean) / std::sqrt(var / n);
    rows[i].var_z = std::abs(var - dot_variance(m)) / std::sqrt((m4 - var * var) / n);
  });
  Outcome o;
  double worst = 0.0;
  for (std::size_t i = 0; i < kModels; ++i) {
    worst = std::max({worst, rows[i].mean_z, rows[i].var_z});
    o.require(rows[i].mean_z < 4.0, "model " + std::to_string(i) + " mean off by " + fmt(rows[i].mean_z) + " se");
    o.require(rows[i].var_z < 4.0, "model " + std::to_string(i) + " variance off by " + fmt(rows[i].var_z) + " se");
  }
  if (o.pass) o.detail = "max deviation = " + fmt(worst) + " se";
  return o;
}

Outcome ac4_elb_correctness() {
  Outcome o;
  double worst = 0.0;
  int bad = 0, cells = 0;
  for (std::size_t l : {2u, 3u, 4u})
    for (double k : {-1.0, 0.0, 1.0, 1.5})
      for (std::size_t d : {1u, 4u, 64u}) {
        const SearchMode mode = l <= 3 ? SearchMode::Exhaustive : SearchMode::EndpointReduced;
        const auto b = elb_bruteforce(k, l, d, 2001, mode);
        const double err = std::abs(b.entropy - elb(k, l, d));
        worst = std::max(worst, err);
        const std::string at = " at L=" + std::to_string(l) + " k=" + fmt(k) + " D=" + std::to_string(d);
        o.require(err <= 1e-6, "|elb - bruteforce| = " + fmt(err) + at);
        bool corner = true;
        for (double c : b.context) corner = corner && c == -1.0;
        o.require(corner, "grid minimum not at c_j = -1" + at);
        ++cells;
        if (err > 1e-6 || !corner) ++bad;
      }
  if (bad) o.detail = std::to_string(bad) + "/" + std::to_string(cells) + " cells off; first: " + o.detail;
  for (std::size_t l : {2u, 3u, 4u, 1024u}) {
    const double lo = elb(-50.0, l, 512), hi = elb(5.0, l, 512);
    o.require(std::abs(lo - std::log(static_cast<double>(l))) <= 1e-6,
              "elb(k=-50, L=" + std::to_string(l) + ") = " + fmt(lo));
    o.require(std::abs(hi) <= 1e-6, "elb(k=5, L=" + std::to_string(l) + ") = " + fmt(hi));
  }
  if (o.pass) o.detail = "max |elb - bruteforce| = " + fmt(worst);
  return o;
}

Outcome ac5_monotone_bounds() {
  Outcome o;
  Rng r(55);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t l = 2 + r.below(4095);
    const std::size_t d = 2 + r.below(1023);
    const double gap = std::exp(r.uniform(std::log(0.05), std::log(300.0)));
    const double k = 0.5 + std::log(gap / 2.0) / std::log(static_cast<double>(d));
    const double step = r.uniform(1e-3, 0.5);
    const double e0 = elb(k, l, d), e1 = elb(k + step, l, d);
    const double log_l = std::log(static_cast<double>(l));
    const std::string at = " at L=" + std::to_string(l) + " D=" + std::to_string(d) + " k=" + fmt(k);
    o.require(e0 > 0.0 && e0 < log_l, "ELB outside (0, log L)" + at);
    o.require(e1 < e0, "ELB not strictly decreasing" + at);
    o.require(elb_dk(k, l, d) < 0.0, "dELB/dk >= 0" + at);
  }
  if (o.pass) o.detail = "10000 points";
  return o;
}

Outcome ac6_k50() {
  Outcome o;
  double worst = 0.0;
  for (std::size_t l : {64u, 256u, 1024u})
    for (std::size_t d : {64u, 256u, 1024u}) {
      const double k = k50(l, d);
      const double res = std::abs(elb(k, l, d) - 0.5 * std::log(static_cast<double>(l)));
      worst = std::max(worst, res);
      o.require(res <= 1e-9, "residual " + fmt(res) + " at L=" + std::to_string(l) + " D=" + std::to_string(d));
    }
  double lo_l = INFINITY, hi_l = -INFINITY, lo_d = INFINITY, hi_d = -INFINITY;
  for (std::size_t v : {64u, 128u, 256u, 512u, 1024u}) {
    const double a = k50(v, 512), b = k50(512, v);
    lo_l = std::min(lo_l, a);
    hi_l = std::max(hi_l, a);
    lo_d = std::min(lo_d, b);
    hi_d = std::max(hi_d, b);
  }
  o.require(hi_l - lo_l < hi_d - lo_d,
            "k50 spread over L (" + fmt(hi_l - lo_l) + ") not below spread over D (" + fmt(hi_d - lo_d) + ")");
  if (o.pass) {
    o.detail = "max residual " + fmt(worst) + ", spread L " + fmt(hi_l - lo_l) + " < D " + fmt(hi_d - lo_d);
  }
  return o;
}

Outcome ac7_gradients() {
  const auto rep = run_gradcheck_trials(100, 7);
  Outcome o;
  double fd = 0.0;
  for (const auto& t : rep.trials) {
    const std::string at = " in trial " + std::to_string(t.index);
    o.require(t.scaling.output_max_abs_diff <= 1e-12, "output not alpha-invariant" + at);
    o.require(t.scaling.grad_w_rel_err <= 1e-10, "grad_W scaling off" + at);
    o.require(t.scaling.grad_b_rel_err <= 1e-10, "grad_b scaling off" + at);
    o.require(t.scaling.grad_v_rel_err <= 1e-10, "grad_v not alpha-invariant" + at);
    o.require(t.jacobian_fd_rel_err < 1e-6, "Jacobian vs finite differences" + at);
    o.require(t.grad_w_fd_rel_err < 1e-6 && t.grad_b_fd_rel_err < 1e-6 && t.grad_v_fd_rel_err < 1e-6,
              "gradient vs finite differences" + at);
    o.require(t.jx_max_abs <= 1e-12, "J x != 0" + at);
    fd = std::max({fd, t.jacobian_fd_rel_err, t.grad_w_fd_rel_err, t.grad_b_fd_rel_err, t.grad_v_fd_rel_err});
  }
  if (o.pass) o.detail = "max fd rel err " + fmt(fd);
  return o;
}

Outcome ac8_shift_direction() {
  NormConfig un, rms, lnp, bn;
  un.method = NormMethod::UnitNorm;
  un.k = 1.5;
  rms.method = NormMethod::RMSNorm;
  lnp.method = NormMethod::LayerNormPractice;
  bn.method = NormMethod::BatchNorm;
  const auto study = run_shift_study(gaussian_source(32, 64, std::vector<double>(256, 1.5), std::vector<double>(256, 1.0)),
                                     {un, rms, lnp, bn}, 10, 8);
  const double c_un = study.methods[0].chebyshev.median, c_rms = study.methods[1].chebyshev.median;
  const double c_lnp = study.methods[2].chebyshev.median, c_bn = study.methods[3].chebyshev.median;
  const double h_un = study.methods[0].entropy_normalized.median;
  const double h_lnp = study.methods[2].entropy_normalized.median;

  Outcome o;
  o.require(study.check_invariants().empty(), study.check_invariants());
  o.require(c_un <= c_rms, "chebyshev UnitNorm " + fmt(c_un) + " > RMSNorm " + fmt(c_rms));
  o.require(c_rms < c_lnp && c_rms < c_bn, "chebyshev RMSNorm " + fmt(c_rms) + " not below LayerNormPractice " +
                                               fmt(c_lnp) + " / BatchNorm " + fmt(c_bn));
  o.require(c_un < c_lnp && c_un < c_bn, "chebyshev UnitNorm " + fmt(c_un) + " not below LayerNormPractice " +
                                             fmt(c_lnp) + " / BatchNorm " + fmt(c_bn));
  o.require(h_un > h_lnp, "entropy UnitNorm " + fmt(h_un) + " <= LayerNormPractice " + fmt(h_lnp));
  if (o.pass) o.detail = "chebyshev UN " + fmt(c_un) + " RMS " + fmt(c_rms) + " LNP " + fmt(c_lnp);
  return o;
}

Outcome ac9_softmax_transforms() {
  Outcome o;
  Rng r(9);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> v(2 + r.below(63));
    for (double& a : v) a = 3.0 * r.normal();
    const auto s = softmax_order_invariance(v, SoftmaxTransform::stretch(std::pow(10.0, r.uniform(-2.0, 2.0))));
    o.require(s.preserved, "stretch changed the order in vector " + std::to_string(t));
    const auto tr = softmax_order_invariance(v, SoftmaxTransform::translate(r.uniform(-100.0, 100.0)));
    o.require(tr.preserved, "translate changed the order in vector " + std::to_string(t));
    const auto rf = softmax_order_invariance(v, SoftmaxTransform::reflect());
    o.require(rf.reversed && !rf.preserved, "reflection did not reverse vector " + std::to_string(t));
  }
  if (o.pass) o.detail = "3 x 1000 vectors";
  return o;
}

Outcome ac10_kernel_identities() {
  Outcome o;
  double worst_rms = 0.0, worst_norm = 0.0, worst_ln = 0.0;
  for (Seed s = 0; s < 100; ++s) {
    Rng r = Rng::derive(1010, s);
    const std::size_t n = 1 + r.below(4), l = 1 + r.below(16), d = 2 + r.below(255);
    std::vector<double> mu(d), s2(d);
    for (std::size_t j = 0; j < d; ++j) {
      mu[j] = r.uniform(-2.0, 2.0);
      s2[j] = r.uniform(0.1, 4.0);
    }
    const auto x = gaussian_batch(n, l, mu, s2, r.next_u64());

    NormConfig rms, un1, un, ln;
    rms.method = NormMethod::RMSNorm;
    un1.method = NormMethod::UnitNorm;
    un1.k = 1.0;
    un.method = NormMethod::UnitNorm;
    un.k = r.uniform(0.5, 2.0);
    ln.method = NormMethod::LayerNormPractice;
    ln.eps = 0.0;

    const auto a = normalize(x, rms), b = normalize(x, un1);
    for (std::size_t i = 0; i < a.size(); ++i) worst_rms = std::max(worst_rms, std::abs(a.data()[i] - b.data()[i]));

    const double target = std::pow(static_cast<double>(d), un.k / 2.0);
    for (double nrm : token_l2_norms(normalize(x, un))) worst_norm = std::max(worst_norm, std::abs(nrm - target));

    const auto st = axis_stats(normalize(x, ln), {Axis::Feature});
    for (double m : st.mean) worst_ln = std::max(worst_ln, std::abs(m));
    for (double v : st.variance) worst_ln = std::max(worst_ln, std::abs(v - 1.0));
  }
  o.require(worst_rms <= 1e-12, "UnitNorm(k=1) vs RMSNorm differ by " + fmt(worst_rms));
  o.require(worst_norm <= 1e-9, "UnitNorm norm off D^(k/2) by " + fmt(worst_norm));
  o.require(worst_ln <= 1e-12, "LayerNormPractice mean/variance off by " + fmt(worst_ln));
  if (o.pass) o.detail = "max dev rms " + fmt(worst_rms) + ", norm " + fmt(worst_norm) + ", ln " + fmt(worst_ln);
  return o;
}

struct Capture {
  int code = -1;
  std::string out;
};

Capture capture(const std::string& args, const char* threads) {
  setenv("NORMLENS_THREADS", threads, 1);
  Capture c;
  FILE* p = popen((cli_path + " " + args + " 2>&1").c_str(), "r");
  if (!p) return c;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) c.out.append(buf, got);
  const int status = pclose(p);
  c.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return c;
}

Outcome ac11_determinism() {
  Outcome o;
  if (cli_path.empty()) {
    o.require(false, "no --cli path given");
    return o;
  }
  const std::vector<std::string> commands{
      "norm apply --method UnitNorm --N 4 --L 6 --D 8 --seed 3",
      "norm apply --method BatchNorm --N 4 --L 6 --D 8 --seed 3 --format csv",
      "shift study --N 8 --L 16 --D 32 --sets 3 --seed 5",
      "shift study --N 8 --L 16 --D 32 --sets 2 --seed 5 --format csv --methods UnitNorm,LayerNormPractice",
      "signflip check --D 256",
      "signflip estimate --D 100 --samples 20000 --seed 4",
      "signflip estimate --D 100 --samples 20000 --seed 4 --standardize empirical --format csv",
      "signflip sweep --Ds 81,128 --samples 5000 --seed 6",
      "signflip sweep --Ds 81 --samples 5000 --seed 6 --format csv",
      "elb curve --L 32 --D 128 --steps 21",
      "elb k50 --L 1024 --D 512",
      "elb landscape --Ls 64,256 --Ds 64,1024 --format csv",
      "elb verify --Ls 2,3 --ks 0,1.5 --Ds 4 --grid 301",
      "gradcheck --trials 20 --seed 2",
      "gradcheck --trials 20 --seed 2 --format csv",
  };
  for (const auto& cmd : commands) {
    const auto a = capture(cmd, "1");
    const auto b = capture(cmd, "4");
    const auto c = capture(cmd, "0");
    o.require(a.code == 0, "'" + cmd + "' exited with " + std::to_string(a.code));
    o.require(!a.out.empty() && a.out == b.out && a.out == c.out, "'" + cmd + "' output differs across runs");
  }
  unsetenv("NORMLENS_THREADS");
  if (o.pass) o.detail = std::to_string(commands.size()) + " commands x 3 thread settings";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (a == "--cli" && i + 1 < argc) {
      cli_path = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only N] [--cli PATH]\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "sign-flip probability bound", 30.0, ac1_signflip_bound},
      {2, "raw dot-product sub-bound", 10.0, ac2_proof_subbound},
      {3, "dot-product moment formulas", 60.0, ac3_moments},
      {4, "ELB against grid search and limits", 20.0, ac4_elb_correctness},
      {5, "ELB monotone and bounded", 5.0, ac5_monotone_bounds},
      {6, "k50 solver and L-insensitivity", 5.0, ac6_k50},
      {7, "UnitNorm gradient identities", 10.0, ac7_gradients},
      {8, "attention-shift direction", 60.0, ac8_shift_direction},
      {9, "softmax transform table", 2.0, ac9_softmax_transforms},
      {10, "normalization kernel identities", 5.0, ac10_kernel_identities},
      {11, "CLI determinism across runs and threads", 0.0, ac11_determinism},
  };

  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs >= c.budget_s) {
      if (out.pass) out.detail = "over time budget of " + fmt(c.budget_s) + " s";
      out.pass = false;
    }
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.2fs", secs);
    std::cout << "AC" << c.id << (c.id < 10 ? "  " : " ") << (out.pass ? "PASS" : "FAIL") << "  " << c.name
              << "  [" << timing << "]  " << out.detail << "\n";
    std::cout.flush();
    failures += out.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::cerr << "no criterion " << only << "\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
