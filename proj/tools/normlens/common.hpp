#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "normlens/norm.hpp"
#include "normlens/rng.hpp"
#include "normlens/study.hpp"
#include "normlens/tensor.hpp"

namespace normlens::cli {

enum ExitCode : int { kPass = 0, kAssertionFailed = 1, kUsageError = 2 };

inline constexpr Seed kDefaultSeed = 1;

// Thrown for bad flag combinations found after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --out / --format / --seed, shared by every subcommand.
struct OutputOptions {
  std::string path;  // empty = stdout
  std::string format = "json";
  Seed seed = kDefaultSeed;

  bool csv() const { return format == "csv"; }
};

void add_output_options(CLI::App* cmd, OutputOptions& out, Seed default_seed = kDefaultSeed);

// Writes to out.path (or stdout). IO failure throws std::runtime_error.
void emit(const std::string& path, const std::string& text);
std::string dump(const nlohmann::ordered_json& j);
// "# key=value" lines that open every CSV report.
std::string csv_preamble(const std::string& command, Seed seed);
std::string csv_join(const std::vector<std::string>& fields);

// Token source: an embedding file or a synthetic Gaussian.
struct SourceOptions {
  std::string input;
  std::string input_format = "csv";
  std::size_t limit = 0;  // 0 = all tokens
  std::size_t n = 32;
  std::size_t l = 64;
  std::size_t d = 0;  // 0: 256 for synthetic input, inferred for csv
  std::vector<double> mu;      // scalar or per-feature; empty = 6 / D^(1/4)
  std::vector<double> sigma2;  // scalar or per-feature; empty = 1

  bool synthetic() const { return input.empty(); }
  std::size_t synthetic_dim() const { return d ? d : 256; }
  // Pool from --input, with D checked against the file.
  TokenBatch load_pool() const;
  std::vector<double> mu_vector() const;
  std::vector<double> sigma2_vector() const;
  BatchSource source() const;
  nlohmann::ordered_json describe() const;
};

void add_source_options(CLI::App* cmd, SourceOptions& src);

// Method name as printed by to_string(NormMethod), plus the shared knobs.
NormConfig make_norm_config(const std::string& method, double k, double eps, bool strict);

// Broadcast a scalar or check the length of a per-feature list.
std::vector<double> broadcast(const std::vector<double>& v, std::size_t d, const char* name);

}  // namespace normlens::cli
