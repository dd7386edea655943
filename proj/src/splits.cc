#include "nqg/splits.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "nqg/funql.h"
#include "nqg/parallel.h"

namespace nqg {

namespace {

constexpr double kAlpha = 0.1;

void collect_atoms(const TreeNode& node, Counts& out) {
  out[node.label] += 1;
  for (const TreeNode& c : node.children) collect_atoms(c, out);
}

std::string slot(const TreeNode& child) {
  return child.is_leaf() ? child.label : child.label + "(_)";
}

// parent with one child shown, the rest wildcards: exclude(longest(_),_)
std::string render_edge(const TreeNode& parent, std::size_t pos) {
  std::string out = parent.label + "(";
  for (std::size_t k = 0; k < parent.children.size(); ++k) {
    if (k) out += ",";
    out += (k == pos) ? slot(parent.children[k]) : "_";
  }
  return out + ")";
}

// grandparent chain with both hops shown
std::string render_chain(const TreeNode& gp, std::size_t gpos, std::size_t pos) {
  const TreeNode& parent = gp.children[gpos];
  std::string mid = parent.label + "(";
  for (std::size_t k = 0; k < parent.children.size(); ++k) {
    if (k) mid += ",";
    mid += (k == pos) ? slot(parent.children[k]) : "_";
  }
  mid += ")";
  std::string out = gp.label + "(";
  for (std::size_t k = 0; k < gp.children.size(); ++k) {
    if (k) out += ",";
    out += (k == gpos) ? mid : "_";
  }
  return out + ")";
}

void collect_compounds(const TreeNode& node, int order, Counts& out) {
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    out[render_edge(node, i)] += 1;
    if (order >= 2) {
      const TreeNode& child = node.children[i];
      for (std::size_t j = 0; j < child.children.size(); ++j)
        out[render_chain(node, i, j)] += 1;
    }
    collect_compounds(node.children[i], order, out);
  }
}

TreeNode parse_target(std::span<const Token> target, const Extractor& extractor) {
  if (extractor.kind == ExtractorKind::funql_tree) return parse_funql(target);
  return parse_bracketed(target);
}

Counts normalized(const Counts& counts) {
  double total = 0;
  for (const auto& [k, v] : counts) total += v;
  Counts out;
  if (total <= 0) return out;
  for (const auto& [k, v] : counts) out[k] = v / total;
  return out;
}

}  // namespace

Counts extract_atoms(std::span<const Token> target, const Extractor& extractor) {
  Counts out;
  if (extractor.kind == ExtractorKind::token) {
    for (Token t : target) out[token_text(t)] += 1;
    return out;
  }
  collect_atoms(parse_target(target, extractor), out);
  return out;
}

Counts extract_compounds(std::span<const Token> target, const Extractor& extractor) {
  Counts out;
  if (extractor.kind == ExtractorKind::token) {
    for (std::size_t i = 0; i + 1 < target.size(); ++i)
      out[token_text(target[i]) + " " + token_text(target[i + 1])] += 1;
    return out;
  }
  collect_compounds(parse_target(target, extractor), extractor.order, out);
  return out;
}

namespace {

CompoundProfile profile_from_counts(const std::vector<Counts>& atoms,
                                    const std::vector<Counts>& compounds) {
  Counts atom_total, compound_total;
  for (const Counts& a : atoms)
    for (const auto& [k, v] : a) atom_total[k] += v;
  for (const Counts& c : compounds)
    for (const auto& [k, v] : c) compound_total[k] += v;
  CompoundProfile p;
  p.atom_freqs = normalized(atom_total);
  p.compound_freqs = normalized(compound_total);
  return p;
}

}  // namespace

CompoundProfile build_profile_serial(const Dataset& dataset, const Extractor& extractor) {
  std::vector<Counts> atoms(dataset.size()), compounds(dataset.size());
  serial_for(dataset.size(), [&](std::size_t i) {
    const auto tgt = std::span<const Token>(dataset.examples[i].target);
    atoms[i] = extract_atoms(tgt, extractor);
    compounds[i] = extract_compounds(tgt, extractor);
  });
  return profile_from_counts(atoms, compounds);
}

CompoundProfile build_profile(const Dataset& dataset, const Extractor& extractor) {
  std::vector<Counts> atoms(dataset.size()), compounds(dataset.size());
  parallel_for(dataset.size(), [&](std::size_t i) {
    const auto tgt = std::span<const Token>(dataset.examples[i].target);
    atoms[i] = extract_atoms(tgt, extractor);
    compounds[i] = extract_compounds(tgt, extractor);
  });
  return profile_from_counts(atoms, compounds);
}

double chernoff(const Counts& p, const Counts& q, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("chernoff alpha must lie in (0, 1)");
  double sp = 0, sq = 0;
  for (const auto& [k, v] : p) {
    if (v < 0) throw std::invalid_argument("negative weight in distribution");
    sp += v;
  }
  for (const auto& [k, v] : q) {
    if (v < 0) throw std::invalid_argument("negative weight in distribution");
    sq += v;
  }
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6)
    throw std::invalid_argument("chernoff inputs must be normalized distributions");
  double c = 0;
  for (const auto& [k, pv] : p) {
    if (pv == 0) continue;
    auto it = q.find(k);
    if (it == q.end() || it->second == 0) continue;
    c += std::pow(pv, alpha) * std::pow(it->second, 1.0 - alpha);
  }
  return c;
}

double compound_divergence(const Dataset& train, const Dataset& test,
                           const Extractor& extractor) {
  const CompoundProfile ftr = build_profile(train, extractor);
  const CompoundProfile fte = build_profile(test, extractor);
  if (ftr.compound_freqs.empty() || fte.compound_freqs.empty()) return 0.0;
  return 1.0 - chernoff(ftr.compound_freqs, fte.compound_freqs, kAlpha);
}

namespace {

double missing_atom_fraction_of(const std::vector<Counts>& test_atoms,
                                const Counts& train_atoms) {
  if (test_atoms.empty()) return 0.0;
  std::size_t missing = 0;
  for (const Counts& a : test_atoms) {
    for (const auto& [k, v] : a) {
      auto it = train_atoms.find(k);
      if (it == train_atoms.end() || it->second <= 0) {
        ++missing;
        break;
      }
    }
  }
  return static_cast<double>(missing) / static_cast<double>(test_atoms.size());
}

void finalize(SplitResult& r, const Extractor& extractor) {
  renumber(r.train);
  renumber(r.test);
  if (r.train.empty() || r.test.empty()) {
    r.divergence = 0;
    r.missing_atom_fraction = 0;
    return;
  }
  r.divergence = compound_divergence(r.train, r.test, extractor);
  std::vector<Counts> test_atoms(r.test.size());
  parallel_for(r.test.size(), [&](std::size_t i) {
    test_atoms[i] = extract_atoms(std::span<const Token>(r.test.examples[i].target), extractor);
  });
  Counts train_atoms;
  for (const Example& ex : r.train.examples)
    for (const auto& [k, v] : extract_atoms(std::span<const Token>(ex.target), extractor))
      train_atoms[k] += v;
  r.missing_atom_fraction = missing_atom_fraction_of(test_atoms, train_atoms);
}

void check_sizes(const Dataset& dataset, std::size_t train_size, std::size_t test_size) {
  if (train_size + test_size > dataset.size())
    throw std::invalid_argument("split sizes exceed the dataset");
  if (train_size + test_size < dataset.size())
    throw std::invalid_argument("split sizes must cover the dataset exactly");
}

}  // namespace

SplitResult random_split(const Dataset& dataset, std::size_t train_size, std::size_t test_size,
                         std::uint64_t seed, const Extractor& extractor) {
  check_sizes(dataset, train_size, test_size);
  std::vector<std::size_t> ids(dataset.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  SplitResult r;
  r.seed = seed;
  r.train.provenance = dataset.provenance + "#random-train";
  r.test.provenance = dataset.provenance + "#random-test";
  for (std::size_t i = 0; i < train_size; ++i) r.train.examples.push_back(dataset.examples[ids[i]]);
  for (std::size_t i = train_size; i < train_size + test_size; ++i)
    r.test.examples.push_back(dataset.examples[ids[i]]);
  finalize(r, extractor);
  return r;
}

SplitResult length_split(const Dataset& dataset, LengthMeasure measure, double test_fraction,
                         const Extractor& extractor) {
  if (dataset.empty()) throw std::invalid_argument("cannot split an empty dataset");
  auto measure_of = [measure](const Example& ex) {
    return measure == LengthMeasure::source_tokens ? ex.source.size() : ex.target.size();
  };
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return measure_of(dataset.examples[a]) < measure_of(dataset.examples[b]);
  });

  const std::size_t n = dataset.size();
  const auto test_count = static_cast<std::size_t>(std::llround(test_fraction * n));
  std::size_t cut = n - std::min(test_count, n);
  if (cut < n && cut > 0 &&
      measure_of(dataset.examples[order[cut - 1]]) == measure_of(dataset.examples[order[cut]])) {
    // boundary ties go wholly to train
    const std::size_t tie = measure_of(dataset.examples[order[cut]]);
    while (cut < n && measure_of(dataset.examples[order[cut]]) == tie) ++cut;
  }

  SplitResult r;
  r.train.provenance = dataset.provenance + "#length-train";
  r.test.provenance = dataset.provenance + "#length-test";
  for (std::size_t i = 0; i < cut; ++i) r.train.examples.push_back(dataset.examples[order[i]]);
  for (std::size_t i = cut; i < n; ++i) r.test.examples.push_back(dataset.examples[order[i]]);
  if (r.test.empty() && test_count > 0)
    r.note = "empty test set: every example ties with the boundary length";
  finalize(r, extractor);
  return r;
}

TemplateFn default_anonymizer() {
  return [](const Example& ex) {
    std::string out;
    for (Token t : ex.target) {
      const std::string& text = token_text(t);
      bool placeholder = false;
      if (text.size() >= 2 && text[0] == 'm') {
        placeholder = true;
        for (std::size_t i = 1; i < text.size(); ++i)
          if (!std::isdigit(static_cast<unsigned char>(text[i]))) placeholder = false;
      }
      bool number = !text.empty();
      for (char c : text)
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.' && c != '-') number = false;
      if (!out.empty()) out += ' ';
      out += (placeholder || number) ? "_" : text;
    }
    return out;
  };
}

SplitResult template_split(const Dataset& dataset, std::size_t train_size, std::uint64_t seed,
                           const Extractor& extractor, const TemplateFn& anonymizer) {
  if (dataset.empty()) throw std::invalid_argument("cannot split an empty dataset");
  const TemplateFn anon = anonymizer ? anonymizer : default_anonymizer();
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    groups[anon(dataset.examples[i])].push_back(i);

  std::vector<const std::vector<std::size_t>*> order;
  order.reserve(groups.size());
  for (const auto& [tmpl, ids] : groups) order.push_back(&ids);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  SplitResult r;
  r.seed = seed;
  r.train.provenance = dataset.provenance + "#template-train";
  r.test.provenance = dataset.provenance + "#template-test";
  std::size_t assigned = 0;
  for (const auto* ids : order) {
    Dataset& side = assigned < train_size ? r.train : r.test;
    for (std::size_t i : *ids) side.examples.push_back(dataset.examples[i]);
    if (assigned < train_size) assigned += ids->size();
  }
  finalize(r, extractor);
  return r;
}

namespace {

double pow_term(double a, double b) {
  if (a <= 0 || b <= 0) return 0;
  return std::pow(a, kAlpha) * std::pow(b, 1.0 - kAlpha);
}

// Mutable split state for the swap search: raw counts and the separable
// Chernoff sum S = sum_k train_k^a test_k^(1-a), so a candidate swap costs
// only the keys of the two examples involved.
struct SwapState {
  const std::vector<Counts>& atoms;
  const std::vector<Counts>& compounds;
  std::vector<std::size_t> train, test;  // example indices
  Counts atom_train;                      // raw atom counts on the train side
  Counts comp_train, comp_test;
  double total_train = 0, total_test = 0;
  double s = 0;

  void rebuild() {
    atom_train.clear();
    comp_train.clear();
    comp_test.clear();
    total_train = total_test = 0;
    for (std::size_t i : train) {
      for (const auto& [k, v] : atoms[i]) atom_train[k] += v;
      for (const auto& [k, v] : compounds[i]) {
        comp_train[k] += v;
        total_train += v;
      }
    }
    for (std::size_t i : test)
      for (const auto& [k, v] : compounds[i]) {
        comp_test[k] += v;
        total_test += v;
      }
    s = 0;
    for (const auto& [k, v] : comp_train) {
      auto it = comp_test.find(k);
      if (it != comp_test.end()) s += pow_term(v, it->second);
    }
  }

  double coefficient() const {
    if (total_train <= 0 || total_test <= 0) return 0;
    return s / (std::pow(total_train, kAlpha) * std::pow(total_test, 1.0 - kAlpha));
  }

  double count(const Counts& m, const std::string& k) const {
    auto it = m.find(k);
    return it == m.end() ? 0.0 : it->second;
  }

  // Chernoff coefficient if train[ti] and test[si] were exchanged.
  double coefficient_after_swap(std::size_t ti, std::size_t si) const {
    const Counts& out = compounds[train[ti]];
    const Counts& in = compounds[test[si]];
    std::set<std::string> keys;
    double out_total = 0, in_total = 0;
    for (const auto& [k, v] : out) {
      keys.insert(k);
      out_total += v;
    }
    for (const auto& [k, v] : in) {
      keys.insert(k);
      in_total += v;
    }
    double s2 = s;
    for (const std::string& k : keys) {
      const double tr = count(comp_train, k);
      const double te = count(comp_test, k);
      const double d_out = count(out, k);
      const double d_in = count(in, k);
      s2 -= pow_term(tr, te);
      s2 += pow_term(tr - d_out + d_in, te + d_out - d_in);
    }
    const double t_tr = total_train - out_total + in_total;
    const double t_te = total_test + out_total - in_total;
    if (t_tr <= 0 || t_te <= 0) return 1.0;
    return s2 / (std::pow(t_tr, kAlpha) * std::pow(t_te, 1.0 - kAlpha));
  }

  // Would the atom constraint survive exchanging train[ti] and test[si]?
  bool swap_keeps_atoms(std::size_t ti, std::size_t si) const {
    const Counts& out = atoms[train[ti]];
    const Counts& in = atoms[test[si]];
    for (const auto& [k, v] : out) {
      const double left = count(atom_train, k) - v + count(in, k);
      if (left <= 0) return false;
    }
    return true;
  }

  void swap(std::size_t ti, std::size_t si) {
    std::swap(train[ti], test[si]);
    rebuild();  // exact recompute at each accepted swap keeps drift out
  }
};

}  // namespace

SplitResult tmcd_split(const Dataset& dataset, const Extractor& extractor,
                       const TmcdConfig& config) {
  check_sizes(dataset, config.train_size, config.test_size);
  if (config.train_size == 0 || config.test_size == 0)
    throw std::invalid_argument("tmcd needs non-empty train and test sides");

  const std::size_t n = dataset.size();
  std::vector<Counts> atoms(n), compounds(n);
  parallel_for(n, [&](std::size_t i) {
    const auto tgt = std::span<const Token>(dataset.examples[i].target);
    atoms[i] = extract_atoms(tgt, extractor);
    compounds[i] = extract_compounds(tgt, extractor);
  });

  std::mt19937_64 rng(config.seed);

  // phase 1: random split
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), rng);
  SwapState state{atoms, compounds, {}, {}, {}, {}, {}, 0, 0, 0};
  state.train.assign(ids.begin(), ids.begin() + config.train_size);
  state.test.assign(ids.begin() + config.train_size, ids.end());
  state.rebuild();

  // phase 2: swap until every atom appears in the training set
  for (std::size_t guard = 0; guard <= 10 * n + 100; ++guard) {
    std::string missing;
    std::size_t carrier = state.test.size();
    std::size_t carrier_missing = 0;
    for (std::size_t si = 0; si < state.test.size(); ++si) {
      std::size_t count = 0;
      for (const auto& [k, v] : atoms[state.test[si]])
        if (state.count(state.atom_train, k) <= 0) {
          ++count;
          if (missing.empty() || k < missing) missing = k;
        }
      if (count > carrier_missing) {
        carrier_missing = count;
        carrier = si;
      }
    }
    if (carrier == state.test.size()) break;  // constraint satisfied
    bool swapped = false;
    for (std::size_t ti = 0; ti < state.train.size(); ++ti) {
      if (!state.swap_keeps_atoms(ti, carrier)) continue;
      state.swap(ti, carrier);
      swapped = true;
      break;
    }
    if (!swapped)
      throw AtomConstraintError("no split satisfies the atom constraint: atom '" + missing +
                                "' cannot be covered by the training set");
  }

  // phase 3: sampled swaps that strictly increase compound divergence
  SplitResult r;
  r.seed = config.seed;
  int iterations = 0;
  double current = 1.0 - state.coefficient();
  r.divergence_trace.push_back(current);
  while (iterations < config.max_iterations) {
    double best_gain = 1e-12;
    std::size_t best_ti = 0, best_si = 0;
    bool found = false;
    for (int c = 0; c < config.candidates_per_iteration; ++c) {
      const std::size_t ti = rng() % state.train.size();
      const std::size_t si = rng() % state.test.size();
      const double divergence = 1.0 - state.coefficient_after_swap(ti, si);
      const double gain = divergence - current;
      if (gain > best_gain && state.swap_keeps_atoms(ti, si)) {
        best_gain = gain;
        best_ti = ti;
        best_si = si;
        found = true;
      }
    }
    if (!found) break;
    state.swap(best_ti, best_si);
    current = 1.0 - state.coefficient();
    r.divergence_trace.push_back(current);
    ++iterations;
    // audit: the constraint must hold at every accepted state
    for (std::size_t si = 0; si < state.test.size(); ++si)
      for (const auto& [k, v] : atoms[state.test[si]])
        if (state.count(state.atom_train, k) <= 0) {
          ++r.atom_violations;
          si = state.test.size() - 1;
          break;
        }
  }

  r.iterations = iterations;
  r.train.provenance = dataset.provenance + "#tmcd-train";
  r.test.provenance = dataset.provenance + "#tmcd-test";
  for (std::size_t i : state.train) r.train.examples.push_back(dataset.examples[i]);
  for (std::size_t i : state.test) r.test.examples.push_back(dataset.examples[i]);
  finalize(r, extractor);
  return r;
}

}  // namespace nqg
