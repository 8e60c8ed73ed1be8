// Copyright 2026 The Radka Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: fixture generation, store building, retrieval,
// recall evaluation, graph encoding and aggregation.
//
// Exit codes: 0 success, 1 domain/config/usage error, 2 format or I/O error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "radka/radka.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using namespace radka;

// ---- small parsers ---------------------------------------------------------

std::size_t parse_size(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || s[0] == '-') throw ConfigError("bad " + what + ": '" + s + "'");
  return static_cast<std::size_t>(v);
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& s, const std::string& what) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    const std::size_t v = parse_size(s, what);
    return {v, v};
  }
  return {parse_size(s.substr(0, dots), what), parse_size(s.substr(dots + 2), what)};
}

/// "1..50", "1,5,10" or a mix such as "1..5,10".
std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part.empty()) continue;
    const auto [lo, hi] = parse_range(part, what);
    if (lo > hi) throw ConfigError("bad " + what + ": '" + part + "'");
    for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty " + what);
  return out;
}

synthetic::Dims parse_dims(const std::string& s) {
  synthetic::Dims d;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("bad dims entry '" + part + "'");
    const std::string key = part.substr(0, eq);
    const auto v = static_cast<std::uint32_t>(parse_size(part.substr(eq + 1), "dim"));
    if (key == "dt") d.d_text = v;
    else if (key == "st") d.s_text = v;
    else if (key == "wt") d.w_text = v;
    else if (key == "sa") d.s_audio = v;
    else if (key == "wa") d.w_audio = v;
    else if (key == "spk") d.speaker = v;
    else throw ConfigError("unknown dims key '" + key + "' (expected dt, st, wt, sa, wa, spk)");
  }
  return d;
}

std::string dims_string(const BundleDims& d) {
  std::ostringstream o;
  o << "sem=" << d.sem << ",sty=" << d.sty << ",dt=" << d.d_text << ",st=" << d.s_text << ",wt=" << d.w_text
    << ",da=" << d.d_audio << ",sa=" << d.s_audio << ",wa=" << d.w_audio;
  return o.str();
}

std::set<std::string> split_ids(const std::string& s) {
  std::set<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (!part.empty()) out.insert(part);
  }
  return out;
}

// ---- JSON config files -----------------------------------------------------

void flatten(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
  for (const auto& [key, val] : j.items()) {
    if (val.is_object()) {
      auto p = parents;
      p.push_back(key);
      flatten(val, p, out);
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    auto str = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (val.is_array()) {
      for (const auto& e : val) item.inputs.push_back(str(e));
    } else {
      item.inputs.push_back(str(val));
    }
    out.push_back(std::move(item));
  }
}

ordered_json resolved(const CLI::App* app) {
  ordered_json j = ordered_json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (opt->get_type_size() == 0) j[name] = true;
      else j[name] = r.size() == 1 ? ordered_json(r.front()) : ordered_json(r);
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  for (const CLI::App* sub : app->get_subcommands()) j[sub->get_name()] = resolved(sub);
  return j;
}

/// Reads nested JSON objects; a key holding an object addresses the
/// subcommand of that name.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool, bool, std::string) const override {
    return resolved(app).dump(1);
  }
  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError(std::string("config file is not valid JSON: ") + e.what(), 0);
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }
};

// ---- shared loading --------------------------------------------------------

struct Db {
  SdssdStore store;
  fs::path dir;
};

fs::path store_file(const fs::path& dir) { return dir / "store.sdss"; }
fs::path db_bundles_file(const fs::path& dir) { return dir / "bundles.sdeb"; }

Db open_db(const fs::path& dir) { return Db{load_store(store_file(dir)), dir}; }

struct CurrentSet {
  BundleFile bundles;
  std::map<std::string, DialogueRecord> records;

  std::vector<const EmbeddingBundle*> select(const std::optional<std::string>& id) const {
    std::vector<const EmbeddingBundle*> out;
    for (const auto& b : bundles.bundles) {
      if (!id || b.entry_id == *id) out.push_back(&b);
    }
    if (out.empty()) throw ConfigError(id ? "no current dialogue with id '" + *id + "'" : "current-dialogue file is empty");
    return out;
  }

  std::vector<std::string> speakers(const EmbeddingBundle& b) const {
    auto it = records.find(b.entry_id);
    if (it == records.end()) throw BundleError("no metadata record for current dialogue '" + b.entry_id + "'");
    return speakers_of(it->second.utterances, b.n_sentences());
  }
};

CurrentSet open_current(const fs::path& bundles, const fs::path& meta_path) {
  CurrentSet cs{read_bundle_file(bundles), {}};
  for (auto& r : meta::read_meta_file(meta_path).records) cs.records.emplace(r.id, std::move(r));
  return cs;
}

std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// ---- subcommands -----------------------------------------------------------

struct GenOpts {
  std::size_t entries = 50;
  std::string turns = "2..6";
  std::string words = "1..8";
  std::string dims = "dt=32,st=24,wt=16,sa=20,wa=12,spk=8";
  std::uint64_t seed = 0;
  std::string out;
  std::size_t clusters = 8;
  std::optional<std::size_t> cd_cluster_size;
  double noise = 0.3;
  std::optional<double> text_noise;
  double vector_noise = 0.05;
  double speaker_scale = 0.1;
  std::size_t queries = 1;
  std::size_t gt_size = 10;
  std::size_t model_dim = 256;
  double weight_scale = 0.1;
  std::uint64_t weight_seed = 0;
  bool zero_weights = false;
  bool shared_text = false;
};

int cmd_gen_synthetic(const GenOpts& o) {
  synthetic::Spec s;
  s.entries = o.entries;
  std::tie(s.turns_min, s.turns_max) = parse_range(o.turns, "turns range");
  std::tie(s.words_min, s.words_max) = parse_range(o.words, "words range");
  s.dims = parse_dims(o.dims);
  s.seed = o.seed;
  s.clusters = o.clusters;
  s.cd_cluster_size = o.cd_cluster_size;
  s.noise = o.noise;
  s.text_noise = o.text_noise;
  s.vector_noise = o.vector_noise;
  s.speaker_scale = o.speaker_scale;
  s.queries = o.queries;
  s.gt_size = o.gt_size;
  s.shared_text = o.shared_text;
  const synthetic::Corpus c = synthetic::generate(s);

  synthetic::WeightSpec wspec;
  wspec.model_dim = o.model_dim;
  wspec.scale = o.zero_weights ? 0.0 : o.weight_scale;
  wspec.seed = o.weight_seed;
  const WeightSet ws = synthetic::reference_weights(s.dims, wspec);

  const fs::path out(o.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  write_bundle_file(out / "bundles.sdeb", c.bundles);
  meta::write_meta_file(out / "meta.json", c.meta);
  write_bundle_file(out / "cd.sdeb", c.queries);
  write_bundle_file(out / "cd_full.sdeb", c.queries_full);
  meta::write_meta_file(out / "cd.meta.json", meta::MetaFile{c.meta.speaker_table, c.query_records});
  write_ground_truth(out / "gt.jsonl", c.ground_truth);
  write_weights_file(out / "weights.sdwt", ws);

  if (!c.query_cluster.empty()) {
    const auto cluster = c.query_cluster.front();
    if (std::count(c.entry_cluster.begin(), c.entry_cluster.end(), cluster) > 0) {
      write_vector_file(out / "gt_style.sdfv", synthetic::cluster_style_target(c, ModelWeights::load(ws), cluster));
    }
  }
  std::cout << "entries=" << c.bundles.bundles.size() << " queries=" << c.queries.bundles.size()
            << " clusters=" << s.clusters << " dims=" << dims_string(c.bundles.dims) << '\n';
  return 0;
}

struct BuildOpts {
  std::string bundles, meta, out;
  bool normalize = true;
};

int cmd_build_db(const BuildOpts& o) {
  const BundleFile bundles = read_bundle_file(o.bundles);
  const meta::MetaFile m = meta::read_meta_file(o.meta);
  if (!m.speaker_table) throw ConfigError(o.meta + " has no speaker_table");
  const SdssdStore store = build_store(m.records, bundles, *m.speaker_table, StoreConfig{o.normalize});

  const fs::path out(o.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  save_store(store, store_file(out));
  write_bundle_file(db_bundles_file(out), bundles);
  const auto bytes = binio::read_file(store_file(out));
  std::cout << "entries=" << store.size() << " sem_dim=" << store.manifest().sem_dim
            << " sty_dim=" << store.manifest().sty_dim << " normalized=" << (store.manifest().normalized ? 1 : 0)
            << " checksum=" << binio::hex64(binio::fnv1a64(bytes)) << '\n';
  return 0;
}

struct QueryOpts {
  std::string db, cd, cd_meta;
  std::optional<std::string> cd_id;
  std::string scheme = "rs1";
  std::size_t k = 5;
  std::optional<std::size_t> z;
  std::optional<std::size_t> pool;
  std::optional<std::string> weights;
  std::optional<std::string> gt;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string exclude;
  bool exclude_cd = false;
  bool fold_an = false;
};

int cmd_query(const QueryOpts& o) {
  const Db db = open_db(o.db);
  const CurrentSet cs = open_current(o.cd, o.cd_meta);
  std::optional<ModelWeights> model;
  if (o.weights) model = ModelWeights::load(read_weights_file(*o.weights));
  if (o.fold_an && !(model && model->predictor)) throw ConfigError("--fold-an needs --weights with a predictor");
  std::map<std::string, std::vector<std::string>> gts;
  if (o.gt) {
    for (auto& g : read_ground_truth(*o.gt)) gts[g.query_id] = std::move(g.gt);
  }

  RetrievalConfig base;
  base.scheme = parse_scheme(o.scheme);
  base.k = o.z.value_or(o.k);
  if (o.z) base.z = *o.z;
  base.stage1_pool = o.pool;
  base.seed = o.seed;
  base.exclude_ids = split_ids(o.exclude);

  for (const EmbeddingBundle* cd : cs.select(o.cd_id)) {
    const auto spk = cs.speakers(*cd);
    const CdQuery q = query_cd_vectors(*cd, spk, db.store.speakers(),
                                       model && model->predictor ? &*model->predictor : nullptr,
                                       QueryOptions{o.fold_an});
    RetrievalConfig cfg = base;
    if (o.exclude_cd) cfg.exclude_ids.insert(cd->entry_id);
    if (cfg.scheme == Scheme::Rs7) {
      auto it = gts.find(cd->entry_id);
      if (it == gts.end()) throw ConfigError("rs7 needs --gt with a line for '" + cd->entry_id + "'");
      cfg.ground_truth = it->second;
    }
    for (const auto& h : retrieve(db.store, q.sem, q.sty, cfg, o.threads)) {
      ordered_json j;
      j["query_id"] = cd->entry_id;
      j["scheme"] = scheme_name(cfg.scheme);
      j["rank"] = h.rank;
      j["id"] = h.entry_id;
      j["sem_sim"] = h.sem_sim;
      j["sty_sim"] = h.sty_sim;
      j["combined"] = h.combined;
      j["display_similarity"] = h.display_similarity();
      std::cout << j.dump() << '\n';
    }
  }
  return 0;
}

struct RecallOpts {
  std::string results, gt;
  std::string ks = "1,2,3,4,5,10";
  std::string mode = "hit";
};

int cmd_eval_recall(const RecallOpts& o) {
  const auto ks = parse_size_list(o.ks, "k list");
  const RecallMode mode = parse_recall_mode(o.mode);
  const auto gts = read_ground_truth(o.gt);

  // scheme -> query -> (rank, id)
  std::map<std::string, std::map<std::string, std::vector<std::pair<std::size_t, std::string>>>> runs;
  std::ifstream in(o.results);
  if (!in) throw IoError("cannot open " + o.results);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const std::string scheme = j.value("scheme", std::string("results"));
      const std::string qid = j.at("query_id").get<std::string>();
      auto& list = runs[scheme][qid];
      if (j.contains("retrieved")) {
        for (const auto& id : j.at("retrieved")) list.emplace_back(list.size() + 1, id.get<std::string>());
      } else {
        list.emplace_back(j.at("rank").get<std::size_t>(), j.at("id").get<std::string>());
      }
    } catch (const json::exception& e) {
      throw FormatError(o.results + ":" + std::to_string(lineno) + ": " + e.what(), 0);
    }
  }
  if (runs.empty()) throw EvalError("no results in " + o.results);

  std::cout << "scheme";
  for (auto k : ks) std::cout << ",R@" << k;
  std::cout << '\n';
  for (auto& [scheme, per_query] : runs) {
    std::vector<std::vector<std::string>> results, truth;
    for (const auto& g : gts) {
      auto& hits = per_query[g.query_id];
      std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      std::vector<std::string> ids;
      for (const auto& h : hits) ids.push_back(h.second);
      results.push_back(std::move(ids));
      truth.push_back(g.gt);
    }
    const auto r = recall_at(results, truth, ks, mode);
    std::cout << scheme;
    for (double v : r) std::cout << ',' << fmt6(v);
    std::cout << '\n';
  }
  return 0;
}

struct EncodeOpts {
  std::string bundle, weights, track = "text", out;
  std::optional<std::string> entry;
  std::optional<std::string> dump_graph;
  std::string pooling = "mean";
  std::string activation = "none";
};

EncoderOptions encoder_options(const std::string& pooling, const std::string& activation) {
  EncoderOptions e;
  if (pooling == "mean") e.pooling = SequencePooling::Mean;
  else if (pooling == "final") e.pooling = SequencePooling::Final;
  else throw ConfigError("unknown pooling '" + pooling + "' (mean|final)");
  if (activation == "none") e.post_mp_activation = Activation::None;
  else if (activation == "relu") e.post_mp_activation = Activation::Relu;
  else if (activation == "tanh") e.post_mp_activation = Activation::Tanh;
  else throw ConfigError("unknown activation '" + activation + "' (none|relu|tanh)");
  return e;
}

int cmd_encode(const EncodeOpts& o) {
  const BundleFile bf = read_bundle_file(o.bundle);
  const ModelWeights model = ModelWeights::load(read_weights_file(o.weights));
  model.expect_dims(bf.dims);
  const EmbeddingBundle* b = nullptr;
  for (const auto& x : bf.bundles) {
    if (!o.entry || x.entry_id == *o.entry) {
      b = &x;
      break;
    }
  }
  if (!b) throw ConfigError(o.entry ? "no bundle with id '" + *o.entry + "'" : "bundle file is empty");
  const bool text = o.track == "text";
  if (!text && o.track != "audio") throw ConfigError("--track must be text or audio");
  const auto& track = text ? b->text : b->audio;
  if (!track) throw BundleError("bundle '" + b->entry_id + "' has no " + o.track + " track");
  if (track->sentences.rows() == 0) throw GraphError("bundle '" + b->entry_id + "' has no " + o.track + " turns");
  const Mghg g = build_mghg(*track, b->word_counts);
  const Vec32 v = encode_dialogue(g, text ? model.text : model.audio, encoder_options(o.pooling, o.activation));
  write_vector_file(o.out, v);
  if (o.dump_graph) meta::write_json(*o.dump_graph, mghg_to_json(g));
  std::cout << "entry=" << b->entry_id << " track=" << o.track << " dim=" << v.dim() << '\n';
  return 0;
}

struct PipelineOpts {
  std::string db, cd, cd_meta, weights;
  std::optional<std::string> cd_id;
  bool exclude_cd = false;
  bool normalize_query = false;
  bool fold_an = false;
  std::string pooling = "mean";
  std::string activation = "none";
};

struct Loaded {
  Db db;
  CurrentSet cs;
  ModelWeights model;
  BundleFile bundles;
};

Loaded load_pipeline(const PipelineOpts& o) {
  Loaded l{open_db(o.db), open_current(o.cd, o.cd_meta), ModelWeights::load(read_weights_file(o.weights)),
           read_bundle_file(db_bundles_file(o.db))};
  l.model.expect_dims(l.bundles.dims);
  return l;
}

struct AggregateOpts : PipelineOpts {
  std::string out;
  std::size_t z = 25;
};

int cmd_aggregate(const AggregateOpts& o) {
  Loaded l = load_pipeline(o);
  const EmbeddingBundle& cd = *l.cs.select(o.cd_id).front();
  const EncoderOptions eopts = encoder_options(o.pooling, o.activation);
  EntryEncoder enc(l.bundles, l.model, eopts);
  const auto spk = l.cs.speakers(cd);
  const CurrentContext ctx = prepare_current(cd, spk, l.db.store.speakers(), l.model, QueryOptions{o.fold_an}, eopts);
  RetrievalConfig cfg;
  cfg.k = cfg.z = o.z;
  if (o.exclude_cd) cfg.exclude_ids.insert(cd.entry_id);
  const auto hits = retrieve(l.db.store, ctx.query.sem, ctx.query.sty, cfg);
  const Aggregation agg = aggregate_retrieved(enc, ctx, hits, AggregationOptions{o.normalize_query});
  export_fs_emb(agg.fs_emb, o.out);
  ordered_json j;
  j["query_id"] = cd.entry_id;
  j["z"] = o.z;
  j["retrieved"] = json::array();
  for (const auto& h : hits) j["retrieved"].push_back(h.entry_id);
  j["weights"] = std::vector<float>(agg.weights.values().begin(), agg.weights.values().end());
  j["fs_dim"] = agg.fs_emb.dim();
  std::cout << j.dump() << '\n';
  return 0;
}

struct ZSweepCliOpts : PipelineOpts {
  std::string gt_style;
  std::string z = "1..50";
  bool full_fs = false;
  std::optional<std::string> out;
};

int cmd_z_sweep(const ZSweepCliOpts& o) {
  Loaded l = load_pipeline(o);
  const EmbeddingBundle& cd = *l.cs.select(o.cd_id).front();
  const EncoderOptions eopts = encoder_options(o.pooling, o.activation);
  EntryEncoder enc(l.bundles, l.model, eopts);
  const auto spk = l.cs.speakers(cd);
  const CurrentContext ctx = prepare_current(cd, spk, l.db.store.speakers(), l.model, QueryOptions{o.fold_an}, eopts);
  ZSweepOptions zo;
  zo.full_fs = o.full_fs;
  zo.aggregation.normalize_query = o.normalize_query;
  if (o.exclude_cd) zo.exclude_ids.insert(cd.entry_id);
  const auto zs = parse_size_list(o.z, "z list");
  const std::string csv = z_sweep_csv(z_sweep(l.db.store, enc, ctx, zs, read_vector_file(o.gt_style), zo));
  if (o.out) {
    std::ofstream f(*o.out, std::ios::trunc);
    if (!f || !(f << csv)) throw IoError("cannot write " + *o.out);
  } else {
    std::cout << csv;
  }
  return 0;
}

struct ContrastiveOpts : PipelineOpts {
  std::size_t k = 5;
  double tau = 0.07;
  bool keep_self = false;
};

int cmd_contrastive(const ContrastiveOpts& o) {
  Loaded l = load_pipeline(o);
  const EncoderOptions eopts = encoder_options(o.pooling, o.activation);
  EntryEncoder enc(l.bundles, l.model, eopts);
  for (const EmbeddingBundle* cd : l.cs.select(o.cd_id)) {
    const auto spk = l.cs.speakers(*cd);
    const CdQuery q = query_cd_vectors(*cd, spk, l.db.store.speakers());
    std::set<std::string> excl;
    if (o.exclude_cd) excl.insert(cd->entry_id);
    const ContrastiveSets sets = sample_contrastive_sets(l.db.store, q.sem, q.sty, o.k, excl);
    const auto [pt, pa] = enc.stack(sets.positives);
    const auto [nt, na] = enc.stack(sets.negatives);
    ordered_json j;
    j["query_id"] = cd->entry_id;
    j["k"] = o.k;
    j["tau"] = o.tau;
    j["positives"] = sets.positives;
    j["negatives"] = sets.negatives;
    j["loss_text"] = batch_contrastive(pt, nt, o.tau, !o.keep_self);
    j["loss_audio"] = batch_contrastive(pa, na, o.tau, !o.keep_self);
    std::cout << j.dump() << '\n';
  }
  return 0;
}

struct VerifyOpts {
  std::string bundles;
};

int cmd_verify_bundle(const VerifyOpts& o) {
  const BundleFile bf = read_bundle_file(o.bundles);
  std::size_t partial = 0;
  for (const auto& b : bf.bundles) {
    b.validate(bf.dims);
    if (b.audio && !b.audio_complete()) ++partial;
  }
  std::cout << "OK bundles=" << bf.bundles.size() << " partial_audio=" << partial << " dims=" << dims_string(bf.dims)
            << '\n';
  return 0;
}

void add_pipeline_flags(CLI::App* c, PipelineOpts& o) {
  c->add_option("--db", o.db, "Store directory written by build-db")->required();
  c->add_option("--cd", o.cd, "Current-dialogue bundle file")->required();
  c->add_option("--cd-meta", o.cd_meta, "Current-dialogue metadata (speakers)")->required();
  c->add_option("--weights", o.weights, "Model weights file")->required();
  c->add_option("--cd-id", o.cd_id, "Current dialogue to use (default: first)");
  c->add_flag("--exclude-cd", o.exclude_cd, "Drop the current dialogue's id from the store");
  c->add_flag("--normalize-query", o.normalize_query, "L2-normalize the text query before attention");
  c->add_flag("--fold-an", o.fold_an, "Fold the predicted last-turn style into the style query");
  c->add_option("--pooling", o.pooling, "Sequence pooling: mean|final")->capture_default_str();
  c->add_option("--activation", o.activation, "After message passing: none|relu|tanh")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dialogue style-knowledge retrieval and encoding toolkit", "radka"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values (nested objects per subcommand)");
  app.require_subcommand(1);

  GenOpts gen;
  auto* c_gen = app.add_subcommand("gen-synthetic", "Write a seeded clustered fixture corpus");
  c_gen->add_option("--entries", gen.entries, "Stored dialogues")->capture_default_str();
  c_gen->add_option("--turns-range", gen.turns, "Turns per dialogue, A..B")->capture_default_str();
  c_gen->add_option("--words-range", gen.words, "Words per turn, A..B")->capture_default_str();
  c_gen->add_option("--dims", gen.dims, "Feature dims dt=,st=,wt=,sa=,wa=,spk=")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "Corpus seed")->capture_default_str();
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->add_option("--clusters", gen.clusters, "Cluster count")->capture_default_str();
  c_gen->add_option("--cd-cluster-size", gen.cd_cluster_size, "Stored entries sharing the first query's cluster");
  c_gen->add_option("--noise", gen.noise, "Node feature noise")->capture_default_str();
  c_gen->add_option("--text-noise", gen.text_noise, "Text node feature noise (default: --noise)");
  c_gen->add_option("--vector-noise", gen.vector_noise, "Dialogue text vector noise")->capture_default_str();
  c_gen->add_option("--speaker-scale", gen.speaker_scale, "Speaker vector scale")->capture_default_str();
  c_gen->add_option("--queries", gen.queries, "Current dialogues")->capture_default_str();
  c_gen->add_option("--gt-size", gen.gt_size, "Ground-truth list length")->capture_default_str();
  c_gen->add_option("--model-dim", gen.model_dim, "Encoder width of the reference weights")->capture_default_str();
  c_gen->add_option("--weight-scale", gen.weight_scale, "Weights drawn from uniform(-s, s)")->capture_default_str();
  c_gen->add_option("--weight-seed", gen.weight_seed, "Weights seed")->capture_default_str();
  c_gen->add_flag("--zero-weights", gen.zero_weights, "Write all-zero weights");
  c_gen->add_flag("--shared-text", gen.shared_text, "Clusters differ in style only");

  BuildOpts build;
  auto* c_build = app.add_subcommand("build-db", "Build the semantic/style store");
  c_build->add_option("--bundles", build.bundles, "Embedding bundle file")->required();
  c_build->add_option("--meta", build.meta, "Dialogue metadata with speaker table")->required();
  c_build->add_option("--out", build.out, "Output directory")->required();
  c_build->add_flag("--normalize,!--no-normalize", build.normalize, "Store L2-normalized vectors (default)");

  QueryOpts query;
  auto* c_query = app.add_subcommand("query", "Retrieve stored dialogues for current dialogues");
  c_query->add_option("--db", query.db, "Store directory")->required();
  c_query->add_option("--cd", query.cd, "Current-dialogue bundle file")->required();
  c_query->add_option("--cd-meta", query.cd_meta, "Current-dialogue metadata (speakers)")->required();
  c_query->add_option("--cd-id", query.cd_id, "Only this current dialogue");
  c_query->add_option("--scheme", query.scheme, "rs1..rs7")->capture_default_str();
  c_query->add_option("--k", query.k, "Hits per query")->capture_default_str();
  c_query->add_option("--z", query.z, "Inference retrieval count (overrides --k)");
  c_query->add_option("--pool", query.pool, "Two-stage pool size (default 4k)");
  c_query->add_option("--weights", query.weights, "Model weights (predictor)");
  c_query->add_option("--gt", query.gt, "Ground-truth JSONL (rs7)");
  c_query->add_option("--seed", query.seed, "Seed for rs6")->capture_default_str();
  c_query->add_option("--threads", query.threads, "Scan threads")->capture_default_str();
  c_query->add_option("--exclude", query.exclude, "Comma-separated ids to drop");
  c_query->add_flag("--exclude-cd", query.exclude_cd, "Drop each query's own id");
  c_query->add_flag("--fold-an", query.fold_an, "Fold the predicted last-turn style into the style query");

  RecallOpts recall;
  auto* c_recall = app.add_subcommand("eval-recall", "Recall@k table over result files");
  c_recall->add_option("--results", recall.results, "Hits JSONL from query")->required();
  c_recall->add_option("--gt", recall.gt, "Ground-truth JSONL")->required();
  c_recall->add_option("--ks", recall.ks, "k values")->capture_default_str();
  c_recall->add_option("--mode", recall.mode, "hit|overlap")->capture_default_str();

  EncodeOpts encode;
  auto* c_encode = app.add_subcommand("encode", "Encode one bundle track through its graph encoder");
  c_encode->add_option("--bundle", encode.bundle, "Bundle file")->required();
  c_encode->add_option("--weights", encode.weights, "Model weights")->required();
  c_encode->add_option("--track", encode.track, "text|audio")->capture_default_str();
  c_encode->add_option("--entry", encode.entry, "Bundle id (default: first)");
  c_encode->add_option("--out", encode.out, "Output vector file")->required();
  c_encode->add_option("--dump-graph", encode.dump_graph, "Write the graph as JSON");
  c_encode->add_option("--pooling", encode.pooling, "mean|final")->capture_default_str();
  c_encode->add_option("--activation", encode.activation, "none|relu|tanh")->capture_default_str();

  AggregateOpts agg;
  auto* c_agg = app.add_subcommand("aggregate", "Retrieve, encode and write the final style embedding");
  add_pipeline_flags(c_agg, agg);
  c_agg->add_option("--out", agg.out, "Output vector file")->required();
  c_agg->add_option("--z", agg.z, "Retrieved dialogues")->capture_default_str();

  ZSweepCliOpts zs;
  auto* c_z = app.add_subcommand("z-sweep", "Similarity to a reference style as the retrieval count grows");
  add_pipeline_flags(c_z, zs);
  c_z->add_option("--gt-style", zs.gt_style, "Reference style vector file")->required();
  c_z->add_option("--z", zs.z, "z values, e.g. 1..50 or 1,5,10")->capture_default_str();
  c_z->add_flag("--full-fs", zs.full_fs, "Compare the whole final embedding");
  c_z->add_option("--out", zs.out, "CSV path (default stdout)");

  ContrastiveOpts cl;
  auto* c_cl = app.add_subcommand("contrastive", "Contrastive losses over sampled positives and negatives");
  add_pipeline_flags(c_cl, cl);
  c_cl->add_option("--k", cl.k, "Positives and negatives per query")->capture_default_str();
  c_cl->add_option("--tau", cl.tau, "Temperature")->capture_default_str();
  c_cl->add_flag("--keep-self", cl.keep_self, "Keep the anchor in both sums");

  VerifyOpts verify;
  auto* c_verify = app.add_subcommand("verify-bundle", "Check a bundle file");
  c_verify->add_option("--bundles", verify.bundles, "Bundle file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const FormatError& e) {
    log::error(e.what());
    return 2;
  } catch (const Error& e) {
    log::error(e.what());
    return 1;
  }

  try {
    log::info("resolved config: " + resolved(&app).dump());
    if (*c_gen) return cmd_gen_synthetic(gen);
    if (*c_build) return cmd_build_db(build);
    if (*c_query) return cmd_query(query);
    if (*c_recall) return cmd_eval_recall(recall);
    if (*c_encode) return cmd_encode(encode);
    if (*c_agg) return cmd_aggregate(agg);
    if (*c_z) return cmd_z_sweep(zs);
    if (*c_cl) return cmd_contrastive(cl);
    if (*c_verify) return cmd_verify_bundle(verify);
  } catch (const FormatError& e) {
    log::error(e.what());
    return 2;
  } catch (const IoError& e) {
    log::error(e.what());
    return 2;
  } catch (const Error& e) {
    log::error(e.what());
    return 1;
  } catch (const std::exception& e) {
    log::error(std::string("unexpected failure: ") + e.what());
    return 1;
  }
  return 1;
}
