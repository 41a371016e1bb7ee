// Command-line front end: prepare / train / eval / sample / bench-conv.
// Exit codes: 0 success, 1 usage or configuration problem, 2 data or io
// problem.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "hinge/config.hpp"
#include "hinge/dataset.hpp"
#include "hinge/serialize.hpp"
#include "hinge/trainer.hpp"
#include "json.hpp"

using namespace hinge;

namespace {

// A train config is the manifest key set, so a previous run's manifest.txt can
// be replayed as --config.
TrainConfig make_train_config(const Config& c) {
  TrainConfig t;
  t.metapaths = c.get_list("metapaths");
  t.model.embed_dim = static_cast<uint32_t>(c.get_int("embed_dim", t.model.embed_dim));
  t.model.heads = static_cast<uint32_t>(c.get_int("heads", t.model.heads));
  t.model.paths = static_cast<uint32_t>(c.get_int("paths", t.model.paths));
  t.model.elem_temp = static_cast<float>(c.get_double("elem_temp", t.model.elem_temp));
  t.model.path_temp = static_cast<float>(c.get_double("path_temp", t.model.path_temp));
  t.model.cross = c.get_bool("cross", t.model.cross);
  t.model.all_pairs = c.get_bool("all_pairs", t.model.all_pairs);
  t.model.mean_pool = c.get_bool("mean_pool", t.model.mean_pool);
  std::string route = c.get_or("route", "fft");
  if (route == "fft") t.model.route = ConvRoute::fft;
  else if (route == "naive") t.model.route = ConvRoute::naive;
  else throw ConfigError("route must be fft or naive, got '" + route + "'");
  t.model.nonlin = parse_nonlinearity(c.get_or("nonlin", "elu"));

  t.lr = static_cast<float>(c.get_double("lr", t.lr));
  t.beta1 = static_cast<float>(c.get_double("beta1", t.beta1));
  t.beta2 = static_cast<float>(c.get_double("beta2", t.beta2));
  t.adam_eps = static_cast<float>(c.get_double("adam_eps", t.adam_eps));
  t.batch = static_cast<uint32_t>(c.get_int("batch", t.batch));
  t.max_epochs = static_cast<uint32_t>(c.get_int("max_epochs", t.max_epochs));
  t.patience = static_cast<uint32_t>(c.get_int("patience", t.patience));
  if (c.has("split")) {
    auto parts = c.get_list("split");
    if (parts.size() != 3) throw ConfigError("split needs 3 comma-separated fractions");
    for (int i = 0; i < 3; ++i) t.split[i] = std::stod(parts[i]);
  }
  t.seed = static_cast<uint64_t>(c.get_int("seed", static_cast<int64_t>(t.seed)));
  t.threads = static_cast<uint32_t>(c.get_int("threads", t.threads));
  t.ns = c.get_bool("ns", t.ns);
  t.ns_candidates = static_cast<uint32_t>(c.get_int("ns_candidates", t.ns_candidates));
  t.ns_filter_epochs = static_cast<uint32_t>(c.get_int("ns_filter_epochs", t.ns_filter_epochs));
  t.topn = c.get_bool("topn", t.topn);
  t.topn_negatives = static_cast<uint32_t>(c.get_int("topn_negatives", t.topn_negatives));
  return t;
}

void print_graph_summary(const HeteroGraph& g, size_t n_pairs) {
  std::cout << "graph checksum " << g.checksum() << "\n";
  for (TypeId t = 0; t < g.num_types(); ++t)
    std::cout << "type " << g.type(t).name << " (" << g.type(t).code << "): " << g.num_nodes(t)
              << " nodes\n";
  for (RelationId r = 0; r < g.num_relations(); ++r) {
    const Relation& rel = g.relation(r);
    if (rel.inverse < r) continue;  // one line per undirected pair
    std::cout << "relation " << rel.name << ": " << g.num_edges(r) << " edges\n";
  }
  std::cout << "pairs " << n_pairs << "\n";
}

struct PrepareArgs {
  std::string movielens, edges, pairs, source_type, target_type, out;
};

int run_prepare(const PrepareArgs& a) {
  Dataset ds;
  if (!a.movielens.empty()) {
    ds = ingest_movielens(a.movielens);
  } else {
    if (a.edges.empty() || a.pairs.empty() || a.source_type.empty() || a.target_type.empty())
      throw ConfigError("need either --movielens or all of --edges --pairs --source --target");
    ds = ingest_edge_list(a.edges, a.pairs, a.source_type, a.target_type);
  }
  std::filesystem::create_directories(a.out);
  save_graph(a.out + "/graph.hngg", ds.graph);
  save_pairs(a.out + "/pairs.hngp", ds.pairs);
  Config meta;
  meta.set("source_type", ds.graph.type(ds.source_type).name);
  meta.set("target_type", ds.graph.type(ds.target_type).name);
  meta.set("graph_checksum", std::to_string(ds.graph.checksum()));
  meta.set_int("pairs", static_cast<int64_t>(ds.pairs.size()));
  meta.write_file(a.out + "/dataset.txt");
  print_graph_summary(ds.graph, ds.pairs.size());
  return 0;
}

struct TrainArgs {
  std::string graph, pairs, out, config;
  std::vector<std::pair<std::string, std::string>> overrides;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  Config c = a.config.empty() ? Config{} : Config::parse_file(a.config);
  for (const auto& [k, v] : a.overrides) c.set(k, v);
  TrainConfig cfg = make_train_config(c);
  cfg.out_dir = a.out;

  HeteroGraph g = load_graph(a.graph);
  std::vector<LabeledPair> pairs = load_pairs(a.pairs);
  if (cfg.metapaths.empty()) throw ConfigError("no metapaths configured (set metapaths=...)");

  Model model(g, cfg.model, cfg.seed);
  Trainer trainer(model, cfg);
  TrainResult res = trainer.run(pairs, a.quiet ? nullptr : &std::cout);
  std::cout << "best epoch " << res.best_epoch << " val acc " << res.best_val_acc << "\n";
  std::cout << "test acc " << res.test_ctr.acc << " f1 " << res.test_ctr.f1 << " logloss "
            << res.test_ctr.logloss << "\n";
  if (cfg.topn)
    std::cout << "test map5 " << res.test_topn.map5 << " ndcg3 " << res.test_topn.ndcg3
              << " ndcg5 " << res.test_topn.ndcg5 << "\n";
  return 0;
}

struct EvalArgs {
  std::string graph, pairs, checkpoint, filter_checkpoint, config, dump, split = "test";
  std::vector<std::pair<std::string, std::string>> overrides;
  bool topn = false;
};

int run_eval(const EvalArgs& a) {
  Config c = a.config.empty() ? Config{} : Config::parse_file(a.config);
  for (const auto& [k, v] : a.overrides) c.set(k, v);
  TrainConfig cfg = make_train_config(c);

  HeteroGraph g = load_graph(a.graph);
  std::vector<LabeledPair> pairs = load_pairs(a.pairs);
  if (cfg.metapaths.empty()) throw ConfigError("no metapaths configured (set metapaths=...)");

  Model model(g, cfg.model, cfg.seed);
  Trainer trainer(model, cfg);
  load_checkpoint(a.checkpoint, model.params());
  if (cfg.ns) {
    if (a.filter_checkpoint.empty())
      throw ConfigError("ns runs need --filter-checkpoint for evaluation");
    load_checkpoint(a.filter_checkpoint, trainer.filter()->params());
  }

  SplitIndices splits = split_pairs(pairs.size(), cfg.split, cfg.seed);
  std::vector<uint32_t> idx;
  if (a.split == "train") idx = splits.train;
  else if (a.split == "val") idx = splits.val;
  else if (a.split == "test") idx = splits.test;
  else if (a.split == "all") {
    idx.resize(pairs.size());
    for (uint32_t i = 0; i < pairs.size(); ++i) idx[i] = i;
  } else {
    throw ConfigError("--on must be train, val, test or all");
  }
  std::vector<LabeledPair> subset;
  subset.reserve(idx.size());
  for (uint32_t i : idx) subset.push_back(pairs[i]);

  std::ofstream dump;
  EvalSink sink;
  if (!a.dump.empty()) {
    dump.open(a.dump, std::ios::binary);
    if (!dump) throw IoError("cannot write " + a.dump);
    sink = [&](size_t, const EvalRecord& rec) {
      nlohmann::json j;
      j["source"] = g.node_label({trainer.source_metapaths()[0].anchor_type(), rec.pair.source});
      j["target"] = g.node_label({trainer.target_metapaths()[0].anchor_type(), rec.pair.target});
      j["label"] = rec.pair.label;
      j["prob"] = rec.prob;
      std::vector<float> beta(rec.beta.data(), rec.beta.data() + rec.beta.size());
      j["beta"] = beta;
      nlohmann::json tops = nlohmann::json::array();
      for (const Tensor& alpha : rec.alphas) {
        // strongest positions of the first row of each combination
        uint32_t m = alpha.shape().d[1];
        std::vector<uint32_t> order(m);
        for (uint32_t i = 0; i < m; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](uint32_t x, uint32_t y) {
          if (alpha.at(0, x) != alpha.at(0, y)) return alpha.at(0, x) > alpha.at(0, y);
          return x < y;
        });
        order.resize(std::min<uint32_t>(5, m));
        tops.push_back(order);
      }
      j["alpha_top5"] = tops;
      dump << j.dump() << "\n";
    };
  }

  CtrMetrics m = trainer.evaluate(subset, sink);
  std::cout << "examples " << subset.size() << "\n";
  std::cout << "acc " << m.acc << "\nf1 " << m.f1 << "\nlogloss " << m.logloss << "\n";
  if (a.topn) {
    TopnMetrics tn = trainer.evaluate_topn(pairs, idx);
    std::cout << "map5 " << tn.map5 << "\nndcg3 " << tn.ndcg3 << "\nndcg5 " << tn.ndcg5 << "\n";
  }
  return 0;
}

struct SampleArgs {
  std::string graph, metapath, out, csv, filter_checkpoint, config;
  uint32_t anchor = 0;
  uint32_t paths = 16;
  uint64_t seed = 7;
  uint32_t candidates = 128;
  std::optional<uint32_t> select;
  std::optional<uint32_t> partner;
};

void write_selection_rows(std::ostream& os, const HeteroGraph& g, const PathGroupBuffer& buf,
                          const SelectionPlan& plan) {
  std::string anchor = g.node_label(buf.high.anchor);
  for (size_t gi = 0; gi < buf.groups.size(); ++gi) {
    const PathGroup& grp = buf.groups[gi];
    std::string prefix;
    for (size_t i = 0; i < grp.low_path.size(); ++i) {
      if (i) prefix += '>';
      prefix += g.node_label({buf.high.metapath.type_at(i, g), grp.low_path[i]});
    }
    os << anchor << ',' << prefix << ',' << grp.sample_rate << ',';
    bool first = true;
    for (uint32_t row : plan.survivors) {
      if (std::find(grp.member_rows.begin(), grp.member_rows.end(), row) ==
          grp.member_rows.end())
        continue;
      if (!first) os << ';';
      os << row;
      first = false;
    }
    os << '\n';
  }
}

int run_sample(const SampleArgs& a) {
  HeteroGraph g = load_graph(a.graph);
  Metapath mp = g.parse_metapath(a.metapath);
  if (a.anchor >= g.num_nodes(mp.anchor_type()))
    throw DataError("anchor index out of range for type " + g.type(mp.anchor_type()).name);
  NodeRef anchor{mp.anchor_type(), a.anchor};

  if (!a.select) {
    Rng rng = Rng::keyed({a.seed, anchor.type, anchor.index, mp.label_hash(g), Trainer::kEvalKey});
    PathBatch batch = sample_paths(g, anchor, mp, a.paths, rng);
    if (!a.out.empty()) save_path_batch(a.out, batch);
    for (uint32_t row = 0; row < batch.rows; ++row) {
      for (uint32_t pos = 0; pos < batch.nodes; ++pos) {
        if (pos) std::cout << " -> ";
        if (batch.padded(row, pos)) std::cout << "PAD";
        else std::cout << g.node_label({mp.type_at(pos, g), batch.at(row, pos)});
      }
      std::cout << "\n";
    }
    return 0;
  }

  if (!a.partner) throw ConfigError("--select needs --partner (the target-side anchor)");
  Metapath rmp = g.reverse(mp);
  if (*a.partner >= g.num_nodes(rmp.anchor_type()))
    throw DataError("partner index out of range for type " + g.type(rmp.anchor_type()).name);
  NodeRef partner{rmp.anchor_type(), *a.partner};

  Config c = a.config.empty() ? Config{} : Config::parse_file(a.config);
  TrainConfig cfg = make_train_config(c);
  ModelConfig fcfg = cfg.model;
  fcfg.mean_pool = false;
  fcfg.paths = a.candidates;
  FilterModel filter(g, fcfg, a.seed);
  if (!a.filter_checkpoint.empty()) load_checkpoint(a.filter_checkpoint, filter.params());

  Rng srng = Rng::keyed({a.seed, anchor.type, anchor.index, mp.label_hash(g), Trainer::kEvalKey});
  Rng trng =
      Rng::keyed({a.seed, partner.type, partner.index, rmp.label_hash(g), Trainer::kEvalKey});
  PathBatch sb = sample_paths(g, anchor, mp, a.candidates, srng);
  PathBatch tb = sample_paths(g, partner, rmp, a.candidates, trng);
  PathGroupBuffer sbuf = group_by_prefix(sb, 2);
  PathGroupBuffer tbuf = group_by_prefix(tb, 2);
  ns_score(filter, sbuf, tbuf);
  Rng sel = Rng::keyed({a.seed, 0x5E1EC7ULL, Trainer::kEvalKey, anchor.index, partner.index});
  SelectionPlan splan = ns_select(sbuf, *a.select, sel);
  SelectionPlan tplan = ns_select(tbuf, *a.select, sel);

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!a.csv.empty()) {
    file.open(a.csv, std::ios::binary);
    if (!file) throw IoError("cannot write " + a.csv);
    os = &file;
  }
  *os << "anchor,group,beta,survivors\n";
  write_selection_rows(*os, g, sbuf, splan);
  write_selection_rows(*os, g, tbuf, tplan);
  if (!a.out.empty()) {
    save_path_batch(a.out + ".src", select_rows(sbuf.high, splan.survivors));
    save_path_batch(a.out + ".tgt", select_rows(tbuf.high, tplan.survivors));
  }
  return 0;
}

struct BenchArgs {
  std::vector<uint32_t> sizes{16, 64};
  uint32_t rows = 256;
  uint32_t dim = 64;
  std::string out;
};

double time_route(ConvRoute route, const Tensor& src, const Tensor& tgt, bool all_pairs,
                  ParameterStore& store) {
  GradBuffer scratch(store);
  Tape tape(store, scratch);
  auto once = [&] {
    tape.reset();
    Value s = tape.constant(src);
    Value t = tape.constant(tgt);
    Value out = interact(tape, s, t, route, all_pairs);
    // keep the result alive so the work cannot be elided
    volatile float guard = tape.value(out).at(0);
    (void)guard;
  };
  once();  // warmup, also populates the fft plan cache
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  once();
  double single = std::chrono::duration<double>(clock::now() - t0).count();
  int reps = std::max(3, static_cast<int>(0.25 / std::max(single, 1e-6)));
  t0 = clock::now();
  for (int r = 0; r < reps; ++r) once();
  double total = std::chrono::duration<double>(clock::now() - t0).count();
  return total / reps * 1e9;
}

int run_bench(const BenchArgs& a) {
  std::ostringstream csv;
  csv << "I,L,E,naive_ns,fft_ns,speedup\n";
  ParameterStore store;  // empty, tapes only hold constants here
  Rng rng(0x4b2u);
  for (uint32_t I : a.sizes) {
    Shape s = Shape::cube(a.rows, I, a.dim);
    std::vector<float> sv(s.numel()), tv(s.numel());
    for (auto& x : sv) x = rng.next_symmetric(1.0f);
    for (auto& x : tv) x = rng.next_symmetric(1.0f);
    Tensor src = Tensor::from(s, std::move(sv));
    Tensor tgt = Tensor::from(s, std::move(tv));
    double naive_ns = time_route(ConvRoute::naive, src, tgt, false, store);
    double fft_ns = time_route(ConvRoute::fft, src, tgt, false, store);
    csv << I << ',' << a.rows << ',' << a.dim << ',' << std::llround(naive_ns) << ','
        << std::llround(fft_ns) << ',' << naive_ns / fft_ns << "\n";
  }
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw IoError("cannot write " + a.out);
    f << csv.str();
  }
  return 0;
}

// Shared override plumbing: every option lands in the same key=value space the
// config file uses.
void add_train_options(CLI::App* cmd, std::vector<std::pair<std::string, std::string>>& ov) {
  auto push = [&ov](const std::string& key) {
    return [&ov, key](const std::string& v) { ov.emplace_back(key, v); };
  };
  cmd->add_option_function<std::string>("--metapaths", push("metapaths"),
                                        "comma-separated metapath labels, e.g. UMUM,UMGM");
  cmd->add_option_function<std::string>("--embed-dim", push("embed_dim"), "embedding width");
  cmd->add_option_function<std::string>("--heads", push("heads"), "attention heads");
  cmd->add_option_function<std::string>("--paths", push("paths"), "sampled walks per metapath");
  cmd->add_option_function<std::string>("--elem-temp", push("elem_temp"),
                                        "position softmax temperature");
  cmd->add_option_function<std::string>("--path-temp", push("path_temp"),
                                        "mixture softmax temperature");
  cmd->add_option_function<std::string>("--cross", push("cross"),
                                        "full source x target template product (true/false)");
  cmd->add_option_function<std::string>("--all-pairs", push("all_pairs"),
                                        "cross rows inside a combination (true/false)");
  cmd->add_option_function<std::string>("--mean-pool", push("mean_pool"),
                                        "interaction-free pooled baseline (true/false)");
  cmd->add_option_function<std::string>("--route", push("route"), "fft or naive");
  cmd->add_option_function<std::string>("--nonlin", push("nonlin"), "elu, relu or tanh");
  cmd->add_option_function<std::string>("--lr", push("lr"), "Adam learning rate");
  cmd->add_option_function<std::string>("--batch", push("batch"), "minibatch size");
  cmd->add_option_function<std::string>("--epochs", push("max_epochs"), "epoch cap");
  cmd->add_option_function<std::string>("--patience", push("patience"),
                                        "early-stop patience on validation accuracy");
  cmd->add_option_function<std::string>("--split", push("split"),
                                        "train,val,test fractions, e.g. 0.6,0.2,0.2");
  cmd->add_option_function<std::string>("--seed", push("seed"), "run seed");
  cmd->add_option_function<std::string>("--threads", push("threads"), "worker replicas, 0=auto");
  cmd->add_option_function<std::string>("--ns", push("ns"),
                                        "neighborhood selection on/off (true/false)");
  cmd->add_option_function<std::string>("--ns-candidates", push("ns_candidates"),
                                        "candidate pool per template");
  cmd->add_option_function<std::string>("--ns-filter-epochs", push("ns_filter_epochs"),
                                        "filter training passes");
  cmd->add_option_function<std::string>("--topn", push("topn"),
                                        "ranked evaluation on/off (true/false)");
  cmd->add_option_function<std::string>("--topn-negatives", push("topn_negatives"),
                                        "sampled negatives per held-out positive");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metapath-guided interaction model over heterogeneous graphs"};
  app.require_subcommand(1);

  PrepareArgs pa;
  CLI::App* prepare = app.add_subcommand("prepare", "ingest raw data into graph + pair files");
  prepare->add_option("--movielens", pa.movielens, "ml-100k directory");
  prepare->add_option("--edges", pa.edges, "TSV edge list");
  prepare->add_option("--pairs", pa.pairs, "TSV labeled pairs");
  prepare->add_option("--source", pa.source_type, "source node type name");
  prepare->add_option("--target", pa.target_type, "target node type name");
  prepare->add_option("--out", pa.out, "output directory")->required();

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "fit a model with early stopping");
  train->add_option("--graph", ta.graph, "graph file from prepare")->required();
  train->add_option("--pairs", ta.pairs, "pair file from prepare")->required();
  train->add_option("--out", ta.out, "run directory for history/manifest/checkpoint")->required();
  train->add_option("--config", ta.config, "key=value config file");
  train->add_flag("--quiet", ta.quiet, "suppress per-epoch lines");
  add_train_options(train, ta.overrides);

  EvalArgs ea;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--graph", ea.graph, "graph file")->required();
  eval->add_option("--pairs", ea.pairs, "pair file")->required();
  eval->add_option("--checkpoint", ea.checkpoint, "model checkpoint")->required();
  eval->add_option("--filter-checkpoint", ea.filter_checkpoint, "filter checkpoint (ns runs)");
  eval->add_option("--config", ea.config, "config file; a manifest.txt works");
  eval->add_option("--on", ea.split, "which subset: train, val, test or all (default test)");
  eval->add_option("--dump", ea.dump, "write per-example JSONL diagnostics here");
  eval->add_flag("--ranked", ea.topn, "also run the ranked protocol");
  add_train_options(eval, ea.overrides);

  SampleArgs sa;
  CLI::App* sample = app.add_subcommand("sample", "sample walks; optionally select survivors");
  sample->add_option("--graph", sa.graph, "graph file")->required();
  sample->add_option("--metapath", sa.metapath, "label, e.g. UMUM")->required();
  sample->add_option("--anchor", sa.anchor, "anchor node index")->required();
  sample->add_option("--paths", sa.paths, "walks to sample");
  sample->add_option("--seed", sa.seed, "stream seed");
  sample->add_option("--out", sa.out, "write sampled ids to this file");
  sample->add_option("--select", sa.select, "survivor budget; switches to selection mode");
  sample->add_option("--partner", sa.partner, "target-side anchor for selection");
  sample->add_option("--candidates", sa.candidates, "candidate pool for selection");
  sample->add_option("--filter-checkpoint", sa.filter_checkpoint, "trained filter parameters");
  sample->add_option("--config", sa.config, "config file the filter was built with");
  sample->add_option("--csv", sa.csv, "write the rate/survivor table here");

  BenchArgs ba;
  CLI::App* bench = app.add_subcommand("bench-conv", "time both interaction kernels");
  bench->add_option("--sizes", ba.sizes, "path lengths to sweep")->delimiter(',');
  bench->add_option("--rows", ba.rows, "paths per batch");
  bench->add_option("--dim", ba.dim, "embedding width");
  bench->add_option("--out", ba.out, "write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*prepare) return run_prepare(pa);
    if (*train) return run_train(ta);
    if (*eval) return run_eval(ea);
    if (*sample) return run_sample(sa);
    if (*bench) return run_bench(ba);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
