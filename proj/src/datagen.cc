#include "nqg/datagen.h"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

namespace nqg {

namespace {

struct Phrase {
  std::string src;
  std::string tgt;
};

std::string repeat(const std::string& s, int times) {
  std::string out = s;
  for (int i = 1; i < times; ++i) out += " " + s;
  return out;
}

// The 34 single-action phrases of the SCAN command language.
std::vector<Phrase> scan_verb_phrases() {
  const std::vector<Phrase> prim = {
      {"walk", "I_WALK"}, {"look", "I_LOOK"}, {"run", "I_RUN"}, {"jump", "I_JUMP"}};
  const std::vector<Phrase> dirs = {{"left", "I_TURN_LEFT"}, {"right", "I_TURN_RIGHT"}};
  std::vector<Phrase> v;
  for (const auto& p : prim) v.push_back(p);
  for (const auto& d : dirs) v.push_back({"turn " + d.src, d.tgt});
  for (const auto& p : prim)
    for (const auto& d : dirs) v.push_back({p.src + " " + d.src, d.tgt + " " + p.tgt});
  for (const auto& d : dirs) v.push_back({"turn opposite " + d.src, d.tgt + " " + d.tgt});
  for (const auto& p : prim)
    for (const auto& d : dirs)
      v.push_back({p.src + " opposite " + d.src, d.tgt + " " + d.tgt + " " + p.tgt});
  for (const auto& d : dirs) v.push_back({"turn around " + d.src, repeat(d.tgt, 4)});
  for (const auto& p : prim)
    for (const auto& d : dirs)
      v.push_back({p.src + " around " + d.src, repeat(d.tgt + " " + p.tgt, 4)});
  return v;
}

std::vector<Phrase> scan_simple_commands() {
  std::vector<Phrase> s;
  for (const Phrase& v : scan_verb_phrases()) {
    s.push_back(v);
    s.push_back({v.src + " twice", repeat(v.tgt, 2)});
    s.push_back({v.src + " thrice", repeat(v.tgt, 3)});
  }
  return s;  // 102
}

Dataset dataset_from(const std::vector<Phrase>& phrases, const std::string& provenance) {
  Dataset d;
  d.provenance = provenance;
  for (const Phrase& p : phrases) {
    Example ex;
    ex.source = intern_tokens(p.src);
    ex.target = intern_tokens(p.tgt);
    ex.id = static_cast<std::int32_t>(d.examples.size());
    d.examples.push_back(std::move(ex));
  }
  return d;
}

std::vector<Phrase> scan_all_commands() {
  const auto simple = scan_simple_commands();
  std::vector<Phrase> all = simple;
  for (const Phrase& a : simple)
    for (const Phrase& b : simple) all.push_back({a.src + " and " + b.src, a.tgt + " " + b.tgt});
  for (const Phrase& a : simple)
    for (const Phrase& b : simple) all.push_back({a.src + " after " + b.src, b.tgt + " " + a.tgt});
  return all;  // 102 + 2 * 102^2 = 20910
}

bool contains_word(const std::string& text, const std::string& word) {
  std::istringstream in(text);
  std::string tok;
  while (in >> tok)
    if (tok == word) return true;
  return false;
}

bool contains_bigram(const std::string& text, const std::string& a, const std::string& b) {
  std::istringstream in(text);
  std::string prev, tok;
  while (in >> tok) {
    if (prev == a && tok == b) return true;
    prev = tok;
  }
  return false;
}

SplitFiles primitive_split(const std::vector<Phrase>& all, const Phrase& primitive,
                           const std::function<bool(const Phrase&)>& uses_primitive,
                           const std::string& name) {
  std::vector<Phrase> train, test;
  for (const Phrase& p : all) {
    if (!uses_primitive(p) || p.src == primitive.src)
      train.push_back(p);
    else
      test.push_back(p);
  }
  return {dataset_from(train, "scan#" + name + "-train"),
          dataset_from(test, "scan#" + name + "-test")};
}

}  // namespace

Dataset scan_dataset() { return dataset_from(scan_all_commands(), "scan#all"); }

SplitFiles scan_jump_split() {
  return primitive_split(
      scan_all_commands(), {"jump", "I_JUMP"},
      [](const Phrase& p) { return contains_word(p.src, "jump"); }, "jump");
}

SplitFiles scan_turn_left_split() {
  return primitive_split(
      scan_all_commands(), {"turn left", "I_TURN_LEFT"},
      [](const Phrase& p) { return contains_bigram(p.src, "turn", "left"); }, "turn-left");
}

SplitFiles scan_length_split() {
  std::vector<Phrase> train, test;
  for (const Phrase& p : scan_all_commands()) {
    std::istringstream in(p.tgt);
    std::string tok;
    std::size_t len = 0;
    while (in >> tok) ++len;
    (len <= 22 ? train : test).push_back(p);
  }
  return {dataset_from(train, "scan#length-train"), dataset_from(test, "scan#length-test")};
}

TargetCfg scan_target_cfg() {
  return TargetCfg::parse_text(
      "S -> A S\n"
      "S -> A\n"
      "A -> I_WALK\n"
      "A -> I_LOOK\n"
      "A -> I_RUN\n"
      "A -> I_JUMP\n"
      "A -> I_TURN_LEFT\n"
      "A -> I_TURN_RIGHT\n");
}

namespace {

const char* kSynthGrammar =
    "what is the largest NT_1 ### answer ( largest ( NT_1 ) )\n"
    "what is the smallest NT_1 ### answer ( smallest ( NT_1 ) )\n"
    "how many NT_1 are there ### answer ( count ( NT_1 ) )\n"
    "NT_1 located in NT_2 ### intersection ( NT_1 , loc_2 ( NT_2 ) )\n"
    "NT_1 bordering NT_2 ### intersection ( NT_1 , next_to_2 ( NT_2 ) )\n"
    "rivers ### river\n"
    "cities ### city\n"
    "states ### state\n"
    "lakes ### lake\n"
    "mountains ### mountain\n"
    "m0 ### m0\n"
    "m1 ### m1\n";

struct SynthEntity {
  std::string src, tgt;
};

}  // namespace

Grammar synth_funql_grammar() { return Grammar::parse_text(kSynthGrammar); }

TargetCfg synth_funql_target_cfg() {
  return TargetCfg::parse_text(
      "Q -> answer ( AGG )\n"
      "AGG -> largest ( E )\n"
      "AGG -> smallest ( E )\n"
      "AGG -> count ( E )\n"
      "E -> CAT\n"
      "E -> ENT\n"
      "E -> intersection ( E , MOD )\n"
      "MOD -> loc_2 ( E )\n"
      "MOD -> next_to_2 ( E )\n"
      "CAT -> river\n"
      "CAT -> city\n"
      "CAT -> state\n"
      "CAT -> lake\n"
      "CAT -> mountain\n"
      "ENT -> m0\n"
      "ENT -> m1\n");
}

Dataset synth_funql_corpus(const SynthConfig& config) {
  const std::vector<SynthEntity> categories = {{"rivers", "river"},
                                               {"cities", "city"},
                                               {"states", "state"},
                                               {"lakes", "lake"},
                                               {"mountains", "mountain"}};
  const std::vector<SynthEntity> entities = {{"m0", "m0"}, {"m1", "m1"}};
  const std::vector<std::pair<std::string, std::string>> wrappers = {
      {"what is the largest @ ", "answer ( largest ( @ ) )"},
      {"what is the smallest @", "answer ( smallest ( @ ) )"},
      {"how many @ are there", "answer ( count ( @ ) )"}};
  const std::vector<std::pair<std::string, std::string>> modifiers = {
      {"located in", "loc_2"}, {"bordering", "next_to_2"}};

  std::mt19937_64 rng(config.seed);
  auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  Dataset d;
  d.provenance = "synth-funql#" + std::to_string(config.seed);
  std::set<std::string> seen_sources;
  const std::size_t max_attempts = config.size * 200 + 1000;
  for (std::size_t attempt = 0; attempt < max_attempts && d.size() < config.size; ++attempt) {
    // entity expression: category with a chain of modifiers applied
    const auto& cat = categories[pick(categories.size())];
    std::string src = cat.src;
    std::string tgt = cat.tgt;
    const int depth = static_cast<int>(pick(static_cast<std::size_t>(config.max_modifier_depth) + 1));
    for (int k = 0; k < depth; ++k) {
      const auto& mod = modifiers[pick(modifiers.size())];
      const bool entity = pick(10) < 7;
      const auto& arg = entity ? entities[pick(entities.size())] : categories[pick(categories.size())];
      src = src + " " + mod.first + " " + arg.src;
      tgt = "intersection ( " + tgt + " , " + mod.second + " ( " + arg.tgt + " ) )";
    }
    const auto& wrap = wrappers[pick(wrappers.size())];
    std::string full_src = wrap.first;
    full_src.replace(full_src.find('@'), 1, src);
    // tidy possible double spaces from the template
    std::string clean;
    std::istringstream in(full_src);
    std::string tok;
    while (in >> tok) {
      if (!clean.empty()) clean += ' ';
      clean += tok;
    }
    std::string full_tgt = wrap.second;
    full_tgt.replace(full_tgt.find('@'), 1, tgt);

    if (!seen_sources.insert(clean).second) continue;
    Example ex;
    ex.source = intern_tokens(clean);
    ex.target = intern_tokens(full_tgt);
    ex.id = static_cast<std::int32_t>(d.examples.size());
    d.examples.push_back(std::move(ex));
  }
  return d;
}

Grammar toy_generator_grammar() {
  return Grammar::parse_text(
      "the big NT_1 ### big ( NT_1 )\n"
      "the small NT_1 ### small ( NT_1 )\n"
      "NT_1 and NT_2 ### pair ( NT_1 , NT_2 )\n"
      "cat ### CAT\n"
      "dog ### DOG\n"
      "fox ### FOX\n");
}

Dataset toy_corpus(std::size_t size, std::uint64_t seed) {
  const std::vector<SynthEntity> nouns = {{"cat", "CAT"}, {"dog", "DOG"}, {"fox", "FOX"}};
  const std::vector<std::pair<std::string, std::string>> sizes = {{"the big", "big"},
                                                                  {"the small", "small"}};
  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  Dataset d;
  d.provenance = "toy#" + std::to_string(seed);
  std::set<std::string> seen;
  auto add = [&](const std::string& src, const std::string& tgt) {
    if (d.size() >= size) return;
    if (!seen.insert(src).second) return;
    Example ex;
    ex.source = intern_tokens(src);
    ex.target = intern_tokens(tgt);
    ex.id = static_cast<std::int32_t>(d.examples.size());
    d.examples.push_back(std::move(ex));
  };

  for (const auto& n : nouns) add(n.src, n.tgt);  // leaves always present

  // simple noun phrase: noun with optional size wrapper
  auto np = [&](int allow_depth) {
    std::pair<std::string, std::string> out;
    const auto& n = nouns[pick(nouns.size())];
    out = {n.src, n.tgt};
    int wraps = static_cast<int>(pick(static_cast<std::size_t>(allow_depth) + 1));
    for (int i = 0; i < wraps; ++i) {
      const auto& s = sizes[pick(sizes.size())];
      out = {s.first + " " + out.first, s.second + " ( " + out.second + " )"};
    }
    return out;
  };

  const std::size_t max_attempts = size * 100 + 100;
  for (std::size_t attempt = 0; attempt < max_attempts && d.size() < size; ++attempt) {
    auto left = np(2);
    if (pick(2) == 0) {
      add(left.first, left.second);
    } else {
      auto right = np(1);
      add(left.first + " and " + right.first,
          "pair ( " + left.second + " , " + right.second + " )");
    }
  }
  return d;
}

}  // namespace nqg
