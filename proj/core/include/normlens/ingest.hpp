#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "normlens/rng.hpp"
#include "normlens/tensor.hpp"

namespace normlens {

enum class EmbeddingFormat {
  Csv,     // one token per line, D comma-separated decimals, '#' comment lines
  RawF32,  // little-endian IEEE-754 float32, row-major, no header
};

struct EmbeddingFile {
  std::filesystem::path path;
  EmbeddingFormat format = EmbeddingFormat::Csv;
  std::size_t dim = 0;  // 0: infer from the first CSV row (CSV only)
  std::optional<std::size_t> limit;  // keep at most this many tokens
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Token pools come back as a (1, count, D) batch.
TokenBatch parse_csv_embeddings(std::istream& in, std::size_t dim,
                                std::optional<std::size_t> limit = std::nullopt);
TokenBatch parse_rawf32_embeddings(std::span<const std::byte> bytes, std::size_t dim,
                                   std::optional<std::size_t> limit = std::nullopt);
TokenBatch ingest(const EmbeddingFile& file);

/// Draws n sequences of l distinct pool tokens (without replacement within
/// a sequence). Sequence b uses stream derive(seed, b).
TokenBatch sample_sequences(const TokenBatch& pool, std::size_t n, std::size_t l, Seed seed);

}  // namespace normlens
