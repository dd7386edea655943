#include "nqg/model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nqg/parallel.h"
#include "nqg/parser.h"

namespace nqg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void matvec(const Tensor& m, const double* x, double* y) {
  const std::size_t rows = m.rows(), cols = m.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* w = m.row(i);
    double acc = 0;
    for (std::size_t j = 0; j < cols; ++j) acc += w[j] * x[j];
    y[i] = acc;
  }
}

// y += m^T x, for backward passes
void matvec_t_add(const Tensor& m, const double* x, double* y) {
  const std::size_t rows = m.rows(), cols = m.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* w = m.row(i);
    const double xi = x[i];
    for (std::size_t j = 0; j < cols; ++j) y[j] += xi * w[j];
  }
}

void outer_add(Tensor& m, const double* x, const double* y) {
  const std::size_t rows = m.rows(), cols = m.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    double* w = m.row(i);
    const double xi = x[i];
    for (std::size_t j = 0; j < cols; ++j) w[j] += xi * y[j];
  }
}

std::vector<double> position_features(std::size_t len, int pos_dim) {
  std::vector<double> pe(len * pos_dim);
  for (std::size_t i = 0; i < len; ++i) {
    for (int k = 0; k < pos_dim; k += 2) {
      const double rate = std::pow(10000.0, static_cast<double>(k) / pos_dim);
      pe[i * pos_dim + k] = std::sin(static_cast<double>(i) / rate);
      if (k + 1 < pos_dim) pe[i * pos_dim + k + 1] = std::cos(static_cast<double>(i) / rate);
    }
  }
  return pe;
}

}  // namespace

void ModelParams::add_tensor(const std::string& name, Tensor t) {
  tensor_index_[name] = tensors_.size();
  tensors_.emplace_back(name, std::move(t));
}

Tensor& ModelParams::tensor(const std::string& name) {
  auto it = tensor_index_.find(name);
  if (it == tensor_index_.end()) throw std::out_of_range("no tensor named " + name);
  return tensors_[it->second].second;
}

const Tensor& ModelParams::tensor(const std::string& name) const {
  auto it = tensor_index_.find(name);
  if (it == tensor_index_.end()) throw std::out_of_range("no tensor named " + name);
  return tensors_[it->second].second;
}

void ModelParams::rebuild_vocab_index() {
  vocab_index_.clear();
  for (std::size_t i = 0; i < vocab_.size(); ++i) vocab_index_[vocab_[i]] = i;
}

std::size_t ModelParams::embedding_row(Token token) const {
  auto it = vocab_index_.find(token_text(token));
  return it == vocab_index_.end() ? 0 : it->second;
}

ModelParams ModelParams::init(const Grammar& grammar, const Dataset& dataset,
                              const ModelConfig& config, std::uint64_t seed) {
  ModelParams p;
  p.config_ = config;
  p.rule_count_ = grammar.size();

  std::set<std::string> tokens;
  for (const Rule& r : grammar.rules()) {
    for (Symbol s : r.source())
      if (s.is_terminal()) tokens.insert(s.text());
    for (Symbol s : r.target())
      if (s.is_terminal()) tokens.insert(s.text());
  }
  for (const Example& ex : dataset.examples) {
    for (Token t : ex.source) tokens.insert(token_text(t));
    for (Token t : ex.target) tokens.insert(token_text(t));
  }
  p.vocab_.push_back("<unk>");
  p.vocab_.insert(p.vocab_.end(), tokens.begin(), tokens.end());
  p.rebuild_vocab_index();

  const std::size_t v = p.vocab_.size();
  const std::size_t de = config.d_enc;
  const std::size_t d = config.d;
  const std::size_t ctx = 3 * de + static_cast<std::size_t>(config.pos_dim);
  p.add_tensor("embedding", Tensor::zeros({v, de}));
  p.add_tensor("mix_w", Tensor::zeros({de, ctx}));
  p.add_tensor("mix_b", Tensor::zeros({de}));
  p.add_tensor("fr_w1", Tensor::zeros({d, 2 * de}));
  p.add_tensor("fr_b1", Tensor::zeros({d}));
  p.add_tensor("fr_w2", Tensor::zeros({d, d}));
  p.add_tensor("fr_b2", Tensor::zeros({d}));
  p.add_tensor("fs_w1", Tensor::zeros({d, 2 * de}));
  p.add_tensor("fs_b1", Tensor::zeros({d}));
  p.add_tensor("fs_v", Tensor::zeros({d}));
  p.add_tensor("fs_b0", Tensor::zeros({1}));
  p.add_tensor("rule_emb", Tensor::zeros({grammar.size(), d}));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.1, 0.1);
  for (auto& [name, t] : p.tensors_)
    for (double& x : t.data) x = uniform(rng);
  return p;
}

ModelParams ModelParams::like_zeros() const {
  ModelParams p = *this;
  for (auto& [name, t] : p.tensors_) t.fill(0.0);
  return p;
}

void ModelParams::zero() {
  for (auto& [name, t] : tensors_) t.fill(0.0);
}

void ModelParams::axpy(double a, const ModelParams& other) {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto& dst = tensors_[i].second.data;
    const auto& src = other.tensors_[i].second.data;
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += a * src[k];
  }
}

std::string ModelParams::metadata(const std::string& key) const {
  auto it = metadata_.find(key);
  return it == metadata_.end() ? std::string() : it->second;
}

void ModelParams::set_metadata(const std::string& key, const std::string& value) {
  metadata_[key] = value;
}

std::string ModelParams::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "nqg-params";
  j["version"] = 1;
  j["config"] = {{"d_enc", config_.d_enc}, {"d", config_.d}, {"pos_dim", config_.pos_dim}};
  j["rule_count"] = rule_count_;
  j["metadata"] = metadata_;
  j["vocab"] = vocab_;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
  for (const auto& [name, t] : tensors_) {
    tensors[name] = {{"shape", t.shape}, {"data", t.data}};
  }
  j["tensors"] = std::move(tensors);
  return j.dump();
}

ModelParams ModelParams::from_json(const std::string& text) {
  const auto j = nlohmann::ordered_json::parse(text);
  if (j.value("format", "") != "nqg-params" || j.value("version", 0) != 1)
    throw std::runtime_error("unrecognized params container");
  ModelParams p;
  p.config_.d_enc = j["config"]["d_enc"].get<int>();
  p.config_.d = j["config"]["d"].get<int>();
  p.config_.pos_dim = j["config"]["pos_dim"].get<int>();
  p.rule_count_ = j["rule_count"].get<std::size_t>();
  p.metadata_ = j["metadata"].get<std::map<std::string, std::string>>();
  p.vocab_ = j["vocab"].get<std::vector<std::string>>();
  p.rebuild_vocab_index();
  for (const auto& [name, jt] : j["tensors"].items()) {
    Tensor t;
    t.shape = jt["shape"].get<std::vector<std::size_t>>();
    t.data = jt["data"].get<std::vector<double>>();
    p.add_tensor(name, std::move(t));
  }
  return p;
}

void ModelParams::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write params file: " + path);
  out << to_json() << '\n';
}

ModelParams ModelParams::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open params file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

SpanEncoding encode_source(const ModelParams& params, std::span<const Token> source) {
  const ModelConfig& cfg = params.config();
  const std::size_t n = source.size();
  const std::size_t de = cfg.d_enc;
  const std::size_t ctx = 3 * de + static_cast<std::size_t>(cfg.pos_dim);
  const Tensor& emb = params.tensor("embedding");
  const Tensor& mix_w = params.tensor("mix_w");
  const Tensor& mix_b = params.tensor("mix_b");
  const auto pe = position_features(n, cfg.pos_dim);

  SpanEncoding enc;
  enc.len = n;
  enc.dim = de;
  enc.w.assign(n * de, 0.0);
  enc.token_rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) enc.token_rows[i] = params.embedding_row(source[i]);

  std::vector<double> c(ctx);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(c.begin(), c.end(), 0.0);
    if (i > 0) std::copy(emb.row(enc.token_rows[i - 1]), emb.row(enc.token_rows[i - 1]) + de,
                         c.begin());
    std::copy(emb.row(enc.token_rows[i]), emb.row(enc.token_rows[i]) + de, c.begin() + de);
    if (i + 1 < n)
      std::copy(emb.row(enc.token_rows[i + 1]), emb.row(enc.token_rows[i + 1]) + de,
                c.begin() + 2 * de);
    std::copy(pe.begin() + i * cfg.pos_dim, pe.begin() + (i + 1) * cfg.pos_dim,
              c.begin() + 3 * de);
    double* w = enc.w.data() + i * de;
    matvec(mix_w, c.data(), w);
    for (std::size_t k = 0; k < de; ++k) w[k] = std::tanh(w[k] + mix_b.at(k));
  }
  return enc;
}

namespace {

// Per-span forward intermediates shared by every rule anchored there.
struct SpanData {
  std::vector<double> u;    // [w_i, w_j]
  std::vector<double> hr;   // tanh(fr_w1 u + fr_b1)
  std::vector<double> frv;  // fr_w2 hr + fr_b2
  std::vector<double> hs;   // tanh(fs_w1 u + fs_b1)
  double fsv = 0;           // fs_v . hs + fs_b0
};

struct SpanCache {
  const ModelParams& params;
  const SpanEncoding& enc;
  std::map<std::pair<std::int32_t, std::int32_t>, SpanData> spans;

  SpanData& get(std::int32_t begin, std::int32_t end) {
    auto it = spans.find({begin, end});
    if (it != spans.end()) return it->second;
    SpanData sd;
    const std::size_t de = enc.dim;
    const std::size_t d = params.config().d;
    sd.u.resize(2 * de);
    std::copy(enc.row(begin), enc.row(begin) + de, sd.u.begin());
    std::copy(enc.row(end - 1), enc.row(end - 1) + de, sd.u.begin() + de);
    sd.hr.resize(d);
    matvec(params.tensor("fr_w1"), sd.u.data(), sd.hr.data());
    const Tensor& fr_b1 = params.tensor("fr_b1");
    for (std::size_t k = 0; k < d; ++k) sd.hr[k] = std::tanh(sd.hr[k] + fr_b1.at(k));
    sd.frv.resize(d);
    matvec(params.tensor("fr_w2"), sd.hr.data(), sd.frv.data());
    const Tensor& fr_b2 = params.tensor("fr_b2");
    for (std::size_t k = 0; k < d; ++k) sd.frv[k] += fr_b2.at(k);
    sd.hs.resize(d);
    matvec(params.tensor("fs_w1"), sd.u.data(), sd.hs.data());
    const Tensor& fs_b1 = params.tensor("fs_b1");
    for (std::size_t k = 0; k < d; ++k) sd.hs[k] = std::tanh(sd.hs[k] + fs_b1.at(k));
    const Tensor& fs_v = params.tensor("fs_v");
    sd.fsv = params.tensor("fs_b0").at(0);
    for (std::size_t k = 0; k < d; ++k) sd.fsv += fs_v.at(k) * sd.hs[k];
    return spans.emplace(std::make_pair(begin, end), std::move(sd)).first->second;
  }

  double phi(std::size_t rule, std::int32_t begin, std::int32_t end) {
    const SpanData& sd = get(begin, end);
    const Tensor& rule_emb = params.tensor("rule_emb");
    if (rule >= rule_emb.rows()) throw std::out_of_range("unknown rule id in scorer");
    const double* er = rule_emb.row(rule);
    double dot = 0;
    const std::size_t d = params.config().d;
    for (std::size_t k = 0; k < d; ++k) dot += er[k] * sd.frv[k];
    return sd.fsv + dot;
  }
};

}  // namespace

double score_anchored_rule(const ModelParams& params, std::size_t rule, std::size_t i,
                           std::size_t j, const SpanEncoding& enc) {
  if (i > j || j >= enc.len) throw std::out_of_range("anchored span out of range");
  if (rule >= params.tensor("rule_emb").rows())
    throw std::out_of_range("unknown rule id " + std::to_string(rule));
  SpanCache cache{params, enc, {}};
  return cache.phi(rule, static_cast<std::int32_t>(i), static_cast<std::int32_t>(j) + 1);
}

double derivation_score(const ModelParams& params, const Grammar& grammar, const Derivation& d,
                        const SpanEncoding& enc) {
  SpanCache cache{params, enc, {}};
  double total = 0;
  for (const AnchoredRule& a : anchored_applications(d, grammar))
    total += cache.phi(a.rule, a.begin, a.end);
  return total;
}

double log_marginal(const ParseForest& forest, const ModelParams& params,
                    const SpanEncoding& enc) {
  if (!forest.parseable()) return kNegInf;
  SpanCache cache{params, enc, {}};
  return forest_log_partition(
      forest, [&](std::int32_t r, std::int32_t b, std::int32_t e) { return cache.phi(r, b, e); });
}

namespace {

// Accumulates d(loss)/d(phi) per anchored (rule, span), then runs one
// backward pass through the shared network.
struct PhiGradient {
  std::map<std::tuple<std::int32_t, std::int32_t, std::int32_t>, double> weights;

  void add(const ParseForest& f, const std::vector<std::vector<double>>& post, double sign) {
    for (std::size_t v = 0; v < f.nodes.size(); ++v) {
      const ForestNode& node = f.nodes[v];
      for (std::size_t ei = 0; ei < node.edges.size(); ++ei) {
        const double p = post[v][ei];
        if (p == 0) continue;
        weights[{node.edges[ei].rule, node.begin, node.end}] += sign * p;
      }
    }
  }
};

void backprop_phi(const ModelParams& params, const SpanEncoding& enc, SpanCache& cache,
                  const PhiGradient& phi_grad, std::span<const Token> source,
                  ModelParams& grads) {
  const std::size_t de = enc.dim;
  const std::size_t d = params.config().d;

  // stage 1: per-span accumulation of upstream gradients
  struct SpanGrad {
    double gs = 0;                // weight on fsv
    std::vector<double> dfrv;     // weight on frv
  };
  std::map<std::pair<std::int32_t, std::int32_t>, SpanGrad> span_grads;
  Tensor& g_rule_emb = grads.tensor("rule_emb");
  const Tensor& rule_emb = params.tensor("rule_emb");
  for (const auto& [key, g] : phi_grad.weights) {
    const auto [rule, begin, end] = key;
    const SpanData& sd = cache.get(begin, end);
    auto& sg = span_grads[{begin, end}];
    if (sg.dfrv.empty()) sg.dfrv.assign(d, 0.0);
    sg.gs += g;
    double* ge = g_rule_emb.row(rule);
    const double* er = rule_emb.row(rule);
    for (std::size_t k = 0; k < d; ++k) {
      ge[k] += g * sd.frv[k];
      sg.dfrv[k] += g * er[k];
    }
  }

  // stage 2: per-span backward through f_s and f_r into dw
  std::vector<double> dw(enc.len * de, 0.0);
  std::vector<double> dz(d), du(2 * de);
  for (auto& [span, sg] : span_grads) {
    const SpanData& sd = cache.get(span.first, span.second);
    std::fill(du.begin(), du.end(), 0.0);

    // f_s path
    if (sg.gs != 0) {
      Tensor& g_fs_v = grads.tensor("fs_v");
      const Tensor& fs_v = params.tensor("fs_v");
      grads.tensor("fs_b0").at(0) += sg.gs;
      for (std::size_t k = 0; k < d; ++k) {
        g_fs_v.at(k) += sg.gs * sd.hs[k];
        dz[k] = sg.gs * fs_v.at(k) * (1.0 - sd.hs[k] * sd.hs[k]);
      }
      outer_add(grads.tensor("fs_w1"), dz.data(), sd.u.data());
      Tensor& g_fs_b1 = grads.tensor("fs_b1");
      for (std::size_t k = 0; k < d; ++k) g_fs_b1.at(k) += dz[k];
      matvec_t_add(params.tensor("fs_w1"), dz.data(), du.data());
    }

    // f_r path
    outer_add(grads.tensor("fr_w2"), sg.dfrv.data(), sd.hr.data());
    Tensor& g_fr_b2 = grads.tensor("fr_b2");
    for (std::size_t k = 0; k < d; ++k) g_fr_b2.at(k) += sg.dfrv[k];
    std::vector<double> dhr(d, 0.0);
    matvec_t_add(params.tensor("fr_w2"), sg.dfrv.data(), dhr.data());
    for (std::size_t k = 0; k < d; ++k) dz[k] = dhr[k] * (1.0 - sd.hr[k] * sd.hr[k]);
    outer_add(grads.tensor("fr_w1"), dz.data(), sd.u.data());
    Tensor& g_fr_b1 = grads.tensor("fr_b1");
    for (std::size_t k = 0; k < d; ++k) g_fr_b1.at(k) += dz[k];
    matvec_t_add(params.tensor("fr_w1"), dz.data(), du.data());

    const std::size_t i = span.first;
    const std::size_t j = span.second - 1;
    for (std::size_t k = 0; k < de; ++k) {
      dw[i * de + k] += du[k];
      dw[j * de + k] += du[de + k];
    }
  }

  // stage 3: encoder backward
  const ModelConfig& cfg = params.config();
  const std::size_t ctx = 3 * de + static_cast<std::size_t>(cfg.pos_dim);
  const Tensor& emb = params.tensor("embedding");
  const auto pe = position_features(enc.len, cfg.pos_dim);
  std::vector<double> c(ctx), dzw(de), dc(ctx);
  Tensor& g_emb = grads.tensor("embedding");
  Tensor& g_mix_b = grads.tensor("mix_b");
  for (std::size_t i = 0; i < enc.len; ++i) {
    bool any = false;
    for (std::size_t k = 0; k < de; ++k) any |= dw[i * de + k] != 0;
    if (!any) continue;
    std::fill(c.begin(), c.end(), 0.0);
    if (i > 0)
      std::copy(emb.row(enc.token_rows[i - 1]), emb.row(enc.token_rows[i - 1]) + de, c.begin());
    std::copy(emb.row(enc.token_rows[i]), emb.row(enc.token_rows[i]) + de, c.begin() + de);
    if (i + 1 < enc.len)
      std::copy(emb.row(enc.token_rows[i + 1]), emb.row(enc.token_rows[i + 1]) + de,
                c.begin() + 2 * de);
    std::copy(pe.begin() + i * cfg.pos_dim, pe.begin() + (i + 1) * cfg.pos_dim,
              c.begin() + 3 * de);
    const double* w = enc.row(i);
    for (std::size_t k = 0; k < de; ++k) dzw[k] = dw[i * de + k] * (1.0 - w[k] * w[k]);
    outer_add(grads.tensor("mix_w"), dzw.data(), c.data());
    for (std::size_t k = 0; k < de; ++k) g_mix_b.at(k) += dzw[k];
    std::fill(dc.begin(), dc.end(), 0.0);
    matvec_t_add(params.tensor("mix_w"), dzw.data(), dc.data());
    if (i > 0) {
      double* row = g_emb.row(enc.token_rows[i - 1]);
      for (std::size_t k = 0; k < de; ++k) row[k] += dc[k];
    }
    {
      double* row = g_emb.row(enc.token_rows[i]);
      for (std::size_t k = 0; k < de; ++k) row[k] += dc[de + k];
    }
    if (i + 1 < enc.len) {
      double* row = g_emb.row(enc.token_rows[i + 1]);
      for (std::size_t k = 0; k < de; ++k) row[k] += dc[2 * de + k];
    }
  }
  (void)source;
}

}  // namespace

double mml_loss(const ModelParams& params, const ParseForest& constrained,
                const ParseForest& full, const SpanEncoding& enc, ModelParams* grads) {
  if (!constrained.parseable())
    throw std::invalid_argument("gold target unreachable: constrained forest has no roots");
  if (!full.parseable()) throw std::invalid_argument("full forest has no roots");
  SpanCache cache{params, enc, {}};
  auto score = [&](std::int32_t r, std::int32_t b, std::int32_t e) { return cache.phi(r, b, e); };

  if (!grads) {
    const double z_full = forest_log_partition(full, score);
    const double z_gold = forest_log_partition(constrained, score);
    return z_full - z_gold;
  }

  std::vector<std::vector<double>> post_full, post_gold;
  const double z_full = forest_edge_posteriors(full, score, post_full);
  const double z_gold = forest_edge_posteriors(constrained, score, post_gold);

  PhiGradient phi_grad;
  phi_grad.add(full, post_full, 1.0);
  phi_grad.add(constrained, post_gold, -1.0);
  backprop_phi(params, enc, cache, phi_grad, {}, *grads);
  return z_full - z_gold;
}

std::vector<ExampleForests> build_forests_serial(const Grammar& grammar, const Dataset& dataset) {
  std::vector<ExampleForests> out(dataset.size());
  serial_for(dataset.size(), [&](std::size_t i) {
    const Example& ex = dataset.examples[i];
    out[i].full = parse_source(grammar, std::span<const Token>(ex.source));
    out[i].constrained = parse_constrained(grammar, std::span<const Token>(ex.source),
                                           std::span<const Token>(ex.target));
    out[i].reachable = out[i].full.parseable() && out[i].constrained.parseable();
  });
  return out;
}

std::vector<ExampleForests> build_forests(const Grammar& grammar, const Dataset& dataset) {
  std::vector<ExampleForests> out(dataset.size());
  parallel_for(dataset.size(), [&](std::size_t i) {
    const Example& ex = dataset.examples[i];
    out[i].full = parse_source(grammar, std::span<const Token>(ex.source));
    out[i].constrained = parse_constrained(grammar, std::span<const Token>(ex.source),
                                           std::span<const Token>(ex.target));
    out[i].reachable = out[i].full.parseable() && out[i].constrained.parseable();
  });
  return out;
}

TrainResult train(const Grammar& grammar, const Dataset& dataset, const TrainConfig& tc,
                  const ModelConfig& mc, bool verbose) {
  TrainResult result;
  result.params = ModelParams::init(grammar, dataset, mc, tc.seed);

  const auto forests = build_forests(grammar, dataset);
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < forests.size(); ++i) {
    if (forests[i].reachable)
      usable.push_back(i);
    else
      ++result.dropped_examples;
  }
  if (usable.empty()) throw std::runtime_error("no training example is derivable under the grammar");
  if (verbose && result.dropped_examples > 0)
    std::cerr << "[train] dropped " << result.dropped_examples
              << " examples with unreachable gold targets\n";

  std::mt19937_64 rng(tc.seed);
  ModelParams grads = result.params.like_zeros();
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  for (int step = 0; step < tc.steps; ++step) {
    if (cursor == order.size()) {
      order = usable;
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const Example& ex = dataset.examples[order[cursor]];
    const ExampleForests& f = forests[order[cursor]];
    ++cursor;

    const SpanEncoding enc = encode_source(result.params, std::span<const Token>(ex.source));
    grads.zero();
    const double loss = mml_loss(result.params, f.constrained, f.full, enc, &grads);
    result.params.axpy(-tc.lr, grads);
    result.losses.push_back(loss);
    if (verbose && (step % 50 == 0 || step + 1 == tc.steps))
      std::cerr << "[train] step " << step + 1 << "/" << tc.steps << " loss " << loss << "\n";
  }
  return result;
}

namespace {

bool shortlex_less(const std::vector<Token>& a, const std::vector<Token>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    return token_text(a[i]) < token_text(b[i]);
  }
  return false;
}

}  // namespace

Prediction predict(const Grammar& grammar, const ModelParams& params, const TargetCfg& cfg,
                   std::span<const Token> source) {
  Prediction pred;
  if (source.empty()) return pred;
  const ParseForest forest = parse_source(grammar, source);
  if (!forest.parseable()) return pred;
  pred.parsed = true;

  const SpanEncoding enc = encode_source(params, source);
  SpanCache cache{params, enc, {}};

  // Viterbi with the tie rule: equal scores prefer the shortest, then
  // lexicographically smallest, target yield. Shortlex ordering is
  // preserved under composition, so the root choice is globally minimal.
  std::vector<double> best(forest.nodes.size(), kNegInf);
  std::vector<std::vector<Token>> yields(forest.nodes.size());
  std::vector<Token> composed;
  for (std::size_t v = 0; v < forest.nodes.size(); ++v) {
    const ForestNode& node = forest.nodes[v];
    for (const ForestEdge& e : node.edges) {
      double s = cache.phi(e.rule, node.begin, node.end);
      for (int c = 0; c < e.arity; ++c) s += best[e.child[c]];
      if (s < best[v]) continue;
      composed.clear();
      for (Symbol sym : grammar.rule(e.rule).target()) {
        if (sym.is_terminal())
          composed.push_back(sym.token());
        else {
          const auto& cy = yields[e.child[sym.index() - 1]];
          composed.insert(composed.end(), cy.begin(), cy.end());
        }
      }
      if (s > best[v] || shortlex_less(composed, yields[v])) {
        best[v] = s;
        yields[v] = composed;
      }
    }
  }

  std::int32_t root = forest.roots[0];
  for (std::int32_t r : forest.roots)
    if (best[r] > best[root] || (best[r] == best[root] && shortlex_less(yields[r], yields[root])))
      root = r;
  pred.score = best[root];
  if (!cfg.accepts(std::span<const Token>(yields[root]))) return pred;  // abstain
  pred.target = yields[root];
  return pred;
}

}  // namespace nqg
