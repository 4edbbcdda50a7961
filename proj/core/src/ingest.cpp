#include "normlens/ingest.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "normlens/numfmt.hpp"
#include "normlens/parallel.hpp"

namespace normlens {

namespace {

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

TokenBatch parse_csv_embeddings(std::istream& in, std::size_t dim, std::optional<std::size_t> limit) {
  std::vector<double> values;
  std::size_t tokens = 0;
  std::size_t line_no = 0;
  std::string line;
  while ((!limit || tokens < *limit) && std::getline(in, line)) {
    ++line_no;
    std::string_view rest(line);
    const auto first = rest.find_first_not_of(" \t");
    if (blank(rest) || (first != std::string_view::npos && rest[first] == '#')) continue;

    std::size_t fields = 0;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view field = rest.substr(0, comma);
      double v = 0.0;
      try {
        v = parse_double(field);
      } catch (const std::invalid_argument&) {
        throw ParseError(line_no, "field " + std::to_string(fields + 1) + " is not a number: '" +
                                      std::string(field) + "'");
      }
      if (!std::isfinite(v)) throw ParseError(line_no, "non-finite value");
      values.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (dim == 0) dim = fields;
    if (fields != dim) {
      throw ParseError(line_no, "expected " + std::to_string(dim) + " fields, found " +
                                    std::to_string(fields));
    }
    ++tokens;
  }
  if (tokens == 0) throw ParseError(line_no, "no embedding rows found");
  return TokenBatch(1, tokens, dim, std::move(values));
}

TokenBatch parse_rawf32_embeddings(std::span<const std::byte> bytes, std::size_t dim,
                                   std::optional<std::size_t> limit) {
  if (dim == 0) throw std::invalid_argument("rawf32: D must be given");
  const std::size_t row_bytes = 4 * dim;
  if (bytes.size() % row_bytes != 0) {
    throw std::invalid_argument("rawf32: byte length " + std::to_string(bytes.size()) +
                                " is not a multiple of 4*D = " + std::to_string(row_bytes));
  }
  std::size_t tokens = bytes.size() / row_bytes;
  if (limit) tokens = std::min(tokens, *limit);
  if (tokens == 0) throw std::invalid_argument("rawf32: no tokens");

  std::vector<double> values(tokens * dim);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto* p = bytes.data() + 4 * i;
    const std::uint32_t u = std::to_integer<std::uint32_t>(p[0]) |
                            (std::to_integer<std::uint32_t>(p[1]) << 8) |
                            (std::to_integer<std::uint32_t>(p[2]) << 16) |
                            (std::to_integer<std::uint32_t>(p[3]) << 24);
    values[i] = static_cast<double>(std::bit_cast<float>(u));
  }
  return TokenBatch(1, tokens, dim, std::move(values));
}

TokenBatch ingest(const EmbeddingFile& file) {
  if (file.format == EmbeddingFormat::Csv) {
    std::ifstream in(file.path);
    if (!in) throw std::runtime_error("cannot open " + file.path.string());
    return parse_csv_embeddings(in, file.dim, file.limit);
  }
  std::ifstream in(file.path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_rawf32_embeddings(std::as_bytes(std::span<const char>(raw)), file.dim, file.limit);
}

TokenBatch sample_sequences(const TokenBatch& pool, std::size_t n, std::size_t l, Seed seed) {
  const std::size_t size = pool.n() * pool.l();
  if (l > size) {
    throw std::invalid_argument("sample_sequences: L = " + std::to_string(l) + " exceeds pool of " +
                                std::to_string(size));
  }
  const std::size_t d = pool.d();
  TokenBatch out(n, l, d);
  parallel_for(n, [&](std::size_t b) {
    Rng rng = Rng::derive(seed, b);
    // Sparse Fisher-Yates: only displaced slots are stored.
    std::unordered_map<std::size_t, std::size_t> moved;
    auto at = [&](std::size_t i) {
      auto it = moved.find(i);
      return it == moved.end() ? i : it->second;
    };
    for (std::size_t t = 0; t < l; ++t) {
      const std::size_t j = t + rng.below(size - t);
      const std::size_t pick = at(j);
      moved[j] = at(t);
      const auto src = pool.token(pick / pool.l(), pick % pool.l());
      std::copy(src.begin(), src.end(), out.token(b, t).begin());
    }
  });
  return out;
}

}  // namespace normlens
