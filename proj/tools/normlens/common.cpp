#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include "normlens/ingest.hpp"

namespace normlens::cli {

void add_output_options(CLI::App* cmd, OutputOptions& out, Seed default_seed) {
  out.seed = default_seed;
  cmd->add_option("-o,--out", out.path, "Report path (default: stdout)");
  cmd->add_option("--format", out.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  cmd->add_option("--seed", out.seed, "Random seed")->capture_default_str();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw std::runtime_error("failed writing to stdout");
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
  f.close();
  if (!f) throw std::runtime_error("failed writing " + path);
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::string csv_preamble(const std::string& command, Seed seed) {
  return "# command=" + command + "\n# seed=" + std::to_string(seed) + "\n";
}

std::string csv_join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out + "\n";
}

void add_source_options(CLI::App* cmd, SourceOptions& src) {
  cmd->add_option("--input", src.input, "Embedding file (default: synthetic Gaussian tokens)");
  cmd->add_option("--input-format", src.input_format, "Embedding file format")
      ->check(CLI::IsMember({"csv", "rawf32"}))
      ->capture_default_str();
  cmd->add_option("--limit", src.limit, "Read at most this many embeddings (0 = all)");
  cmd->add_option("--N", src.n, "Batches per set")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--L", src.l, "Sequence length")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--D", src.d, "Feature dimension (default 256 synthetic; inferred for csv)");
  cmd->add_option("--mu", src.mu, "Synthetic mean, scalar or comma list (default 6/D^(1/4))")
      ->delimiter(',');
  cmd->add_option("--sigma2", src.sigma2, "Synthetic variance, scalar or comma list (default 1)")
      ->delimiter(',');
}

std::vector<double> broadcast(const std::vector<double>& v, std::size_t d, const char* name) {
  if (v.size() == 1) return std::vector<double>(d, v[0]);
  if (v.size() != d) {
    throw UsageError(std::string("--") + name + " has " + std::to_string(v.size()) +
                     " values; expected 1 or D = " + std::to_string(d));
  }
  return v;
}

TokenBatch SourceOptions::load_pool() const {
  EmbeddingFile file;
  file.path = input;
  file.format = input_format == "rawf32" ? EmbeddingFormat::RawF32 : EmbeddingFormat::Csv;
  file.dim = d;
  if (limit) file.limit = limit;
  return ingest(file);
}

std::vector<double> SourceOptions::mu_vector() const {
  const std::size_t dim = synthetic_dim();
  if (mu.empty()) return std::vector<double>(dim, 6.0 / std::pow(static_cast<double>(dim), 0.25));
  return broadcast(mu, dim, "mu");
}

std::vector<double> SourceOptions::sigma2_vector() const {
  const std::size_t dim = synthetic_dim();
  if (sigma2.empty()) return std::vector<double>(dim, 1.0);
  return broadcast(sigma2, dim, "sigma2");
}

BatchSource SourceOptions::source() const {
  if (synthetic()) return gaussian_source(n, l, mu_vector(), sigma2_vector());
  if (!mu.empty() || !sigma2.empty()) throw UsageError("--mu/--sigma2 only apply to synthetic input");
  return pool_source(load_pool(), n, l);
}

nlohmann::ordered_json SourceOptions::describe() const {
  nlohmann::ordered_json j;
  if (synthetic()) {
    const auto m = mu_vector();
    const auto s = sigma2_vector();
    j["kind"] = "gaussian";
    // Scalars stay scalars in the report.
    if (std::all_of(m.begin(), m.end(), [&](double v) { return v == m[0]; }))
      j["mu"] = m[0];
    else
      j["mu"] = m;
    if (std::all_of(s.begin(), s.end(), [&](double v) { return v == s[0]; }))
      j["sigma2"] = s[0];
    else
      j["sigma2"] = s;
  } else {
    j["kind"] = "embedding";
    j["path"] = input;
    j["format"] = input_format;
    if (limit) j["limit"] = limit;
  }
  return j;
}

NormConfig make_norm_config(const std::string& method, double k, double eps, bool strict) {
  const auto m = parse_norm_method(method);
  if (!m) {
    throw UsageError("unknown normalization '" + method +
                     "' (expected BatchNorm, LayerNormTheory, LayerNormPractice, RMSNorm or UnitNorm)");
  }
  NormConfig cfg;
  cfg.method = *m;
  cfg.k = k;
  cfg.eps = eps;
  cfg.zero_norm = strict ? ZeroNormPolicy::Strict : ZeroNormPolicy::Guard;
  return cfg;
}

}  // namespace normlens::cli
