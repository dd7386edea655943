#include "nqg/dataset.h"

#include <fstream>
#include <sstream>

#include "nqg/funql.h"

namespace nqg {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void check_utf8(std::string_view text, const std::string& provenance) {
  std::size_t i = 0, line = 1;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (c == '\n') ++line;
    std::size_t extra = 0;
    if (c < 0x80)
      extra = 0;
    else if ((c >> 5) == 0x6)
      extra = 1;
    else if ((c >> 4) == 0xe)
      extra = 2;
    else if ((c >> 3) == 0x1e)
      extra = 3;
    else
      throw DataError(provenance + " line " + std::to_string(line) + ": invalid UTF-8 byte");
    for (std::size_t k = 1; k <= extra; ++k) {
      if (i + k >= text.size() || (static_cast<unsigned char>(text[i + k]) >> 6) != 0x2)
        throw DataError(provenance + " line " + std::to_string(line) + ": invalid UTF-8 sequence");
    }
    i += extra + 1;
  }
}

}  // namespace

Dataset parse_tsv(std::string_view text, const std::string& provenance) {
  check_utf8(text, provenance);
  Dataset dataset;
  dataset.provenance = provenance;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw DataError(provenance + " line " + std::to_string(line_no) + ": missing tab separator");
    if (line.find('\t', tab + 1) != std::string_view::npos)
      throw DataError(provenance + " line " + std::to_string(line_no) +
                      ": more than one tab separator");
    Example ex;
    ex.source = intern_tokens(line.substr(0, tab));
    ex.target = intern_tokens(line.substr(tab + 1));
    if (ex.source.empty())
      throw DataError(provenance + " line " + std::to_string(line_no) + ": empty source field");
    if (ex.target.empty())
      throw DataError(provenance + " line " + std::to_string(line_no) + ": empty target field");
    ex.id = static_cast<std::int32_t>(dataset.examples.size());
    dataset.examples.push_back(std::move(ex));
  }
  return dataset;
}

Dataset load_tsv(const std::string& path) { return parse_tsv(read_file(path), path); }

std::string dataset_tsv(const Dataset& dataset) {
  std::string out;
  for (const Example& ex : dataset.examples) {
    out += tokens_text(ex.source);
    out += '\t';
    out += tokens_text(ex.target);
    out += '\n';
  }
  return out;
}

void save_tsv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << dataset_tsv(dataset);
}

Dataset parse_scan(std::string_view text, const std::string& provenance) {
  if (text.find("IN:") == std::string_view::npos) return parse_tsv(text, provenance);
  check_utf8(text, provenance);
  Dataset dataset;
  dataset.provenance = provenance;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto in_pos = line.find("IN:");
    const auto out_pos = line.find("OUT:");
    if (in_pos == std::string_view::npos || out_pos == std::string_view::npos ||
        out_pos < in_pos)
      throw DataError(provenance + " line " + std::to_string(line_no) +
                      ": expected 'IN: ... OUT: ...'");
    Example ex;
    ex.source = intern_tokens(line.substr(in_pos + 3, out_pos - in_pos - 3));
    ex.target = intern_tokens(line.substr(out_pos + 4));
    if (ex.source.empty() || ex.target.empty())
      throw DataError(provenance + " line " + std::to_string(line_no) +
                      ": empty command or action sequence");
    ex.id = static_cast<std::int32_t>(dataset.examples.size());
    dataset.examples.push_back(std::move(ex));
  }
  if (dataset.empty()) throw DataError(provenance + ": empty dataset");
  return dataset;
}

Dataset load_scan(const std::string& path) { return parse_scan(read_file(path), path); }

void renumber(Dataset& dataset) {
  for (std::size_t i = 0; i < dataset.examples.size(); ++i)
    dataset.examples[i].id = static_cast<std::int32_t>(i);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t dataset_hash(const Dataset& dataset) { return fnv1a64(dataset_tsv(dataset)); }

FunqlReport validate_funql(const Dataset& dataset) {
  FunqlReport report;
  for (const Example& ex : dataset.examples) {
    try {
      parse_funql(std::span<const Token>(ex.target));
    } catch (const TreeParseError& e) {
      report.failures.push_back({ex.id, e.position, e.what()});
    }
  }
  return report;
}

}  // namespace nqg
