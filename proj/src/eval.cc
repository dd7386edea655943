#include "nqg/eval.h"

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace nqg {

FallbackPredictor FallbackPredictor::from_file(
    const std::string& path, const std::vector<std::vector<Token>>& required_sources) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open fallback predictions file: " + path);
  FallbackPredictor p;
  p.kind_ = Kind::file;
  std::map<std::vector<Token>, std::vector<Token>> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + " line " + std::to_string(line_no) +
                               ": missing tab separator");
    table[intern_tokens(std::string_view(line).substr(0, tab))] =
        intern_tokens(std::string_view(line).substr(tab + 1));
  }
  for (const auto& src : required_sources) {
    if (!table.count(src))
      throw std::runtime_error("fallback predictions file does not cover source: " +
                               tokens_text(src));
  }
  p.table_.assign(table.begin(), table.end());
  return p;
}

FallbackPredictor FallbackPredictor::from_command(const std::string& command) {
  FallbackPredictor p;
  p.kind_ = Kind::command;
  p.command_ = command;
  return p;
}

FallbackPredictor FallbackPredictor::echo() { return FallbackPredictor(); }

std::vector<std::vector<Token>> FallbackPredictor::predict(
    const std::vector<std::vector<Token>>& sources) const {
  std::vector<std::vector<Token>> out;
  out.reserve(sources.size());
  if (kind_ == Kind::echo_kind) {
    for (const auto& s : sources) out.push_back(s);
    return out;
  }
  if (kind_ == Kind::file) {
    std::map<std::vector<Token>, std::vector<Token>> table(table_.begin(), table_.end());
    for (const auto& s : sources) {
      auto it = table.find(s);
      if (it == table.end())
        throw std::runtime_error("fallback has no prediction for source: " + tokens_text(s));
      out.push_back(it->second);
    }
    return out;
  }

  // external command, invoked once in batch mode
  const std::string in_path = "/tmp/nqg-fallback-in-" + std::to_string(::getpid()) + ".txt";
  const std::string out_path = "/tmp/nqg-fallback-out-" + std::to_string(::getpid()) + ".txt";
  {
    std::ofstream in_file(in_path, std::ios::binary);
    for (const auto& s : sources) in_file << tokens_text(s) << '\n';
  }
  const std::string cmd = command_ + " < " + in_path + " > " + out_path;
  const int rc = std::system(cmd.c_str());
  if (rc != 0) throw std::runtime_error("fallback command failed: " + command_);
  std::ifstream result(out_path, std::ios::binary);
  std::string line;
  while (std::getline(result, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(intern_tokens(line));
  }
  std::remove(in_path.c_str());
  std::remove(out_path.c_str());
  if (out.size() != sources.size())
    throw std::runtime_error("fallback command wrote " + std::to_string(out.size()) +
                             " predictions for " + std::to_string(sources.size()) + " sources");
  return out;
}

std::vector<Token> hybrid_predict(const std::optional<std::vector<Token>>& nqg_output,
                                  const std::vector<Token>& fallback_output) {
  return nqg_output.has_value() ? *nqg_output : fallback_output;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["exact_match"] = exact_match;
  j["coverage"] = coverage;
  if (precision.has_value())
    j["precision"] = *precision;
  else
    j["precision"] = nullptr;
  j["dataset_size"] = dataset_size;
  j["nqg_output_count"] = nqg_output_count;
  j["nqg_correct_count"] = nqg_correct_count;
  j["hybrid_correct_count"] = hybrid_correct_count;
  if (grammar_rule_count > 0) {
    j["grammar_rule_count"] = grammar_rule_count;
    j["rule_ratio"] = rule_ratio;
  }
  return j.dump(2);
}

EvalReport evaluate(const Dataset& gold,
                    const std::vector<std::optional<std::vector<Token>>>& nqg_predictions,
                    const std::vector<std::vector<Token>>& hybrid_predictions,
                    std::vector<PerExampleRecord>* per_example) {
  if (nqg_predictions.size() != gold.size() || hybrid_predictions.size() != gold.size())
    throw std::invalid_argument("predictions are misaligned with the gold dataset");

  EvalReport report;
  report.dataset_size = gold.size();
  if (per_example) per_example->clear();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Example& ex = gold.examples[i];
    const auto& nqg = nqg_predictions[i];
    const auto& hybrid = hybrid_predictions[i];
    const bool nqg_correct = nqg.has_value() && *nqg == ex.target;
    const bool hybrid_correct = hybrid == ex.target;
    if (nqg.has_value()) ++report.nqg_output_count;
    if (nqg_correct) ++report.nqg_correct_count;
    if (hybrid_correct) ++report.hybrid_correct_count;
    if (per_example) {
      PerExampleRecord rec;
      rec.id = ex.id;
      rec.source = tokens_text(ex.source);
      rec.gold = tokens_text(ex.target);
      if (nqg.has_value()) rec.nqg = tokens_text(*nqg);
      rec.hybrid = tokens_text(hybrid);
      rec.nqg_correct = nqg_correct;
      rec.hybrid_correct = hybrid_correct;
      per_example->push_back(std::move(rec));
    }
  }
  const double n = static_cast<double>(gold.size());
  report.exact_match = n > 0 ? report.hybrid_correct_count / n : 0;
  report.coverage = n > 0 ? report.nqg_output_count / n : 0;
  if (report.nqg_output_count > 0)
    report.precision = static_cast<double>(report.nqg_correct_count) /
                       static_cast<double>(report.nqg_output_count);
  return report;
}

GrammarStats grammar_stats(const Grammar& grammar, const Dataset& dataset) {
  GrammarStats s;
  s.examples = dataset.size();
  s.rules = grammar.size();
  s.ratio = s.rules > 0 ? static_cast<double>(s.examples) / static_cast<double>(s.rules) : 0;
  return s;
}

}  // namespace nqg
