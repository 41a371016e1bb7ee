#include "hinge/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <thread>
#include <unordered_set>

#include "hinge/config.hpp"
#include "hinge/serialize.hpp"

namespace hinge {

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

constexpr uint64_t kShuffleTag = 0xBA7C4ULL;
constexpr uint64_t kFilterShuffleTag = 0xF117E4ULL;
constexpr uint64_t kFilterEpochBase = 0xF1000000ULL;
constexpr uint64_t kSelectTag = 0x5E1EC7ULL;
constexpr uint64_t kNegativeTag = 0x4E6ULL;

}  // namespace

std::string history_csv(const std::vector<EpochRow>& rows) {
  std::string out = "epoch,split,acc,f1,logloss,map5,ndcg3,ndcg5\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + ',' + r.split + ',' + fmt6(r.acc) + ',' + fmt6(r.f1) + ',' +
           fmt6(r.logloss) + ',';
    if (r.has_topn)
      out += fmt6(r.map5) + ',' + fmt6(r.ndcg3) + ',' + fmt6(r.ndcg5);
    else
      out += ",,";
    out += '\n';
  }
  return out;
}

Trainer::Trainer(Model& model, TrainConfig cfg) : model_(&model), cfg_(std::move(cfg)) {
  const HeteroGraph& g = model_->graph();
  if (cfg_.metapaths.empty()) throw ConfigError("no metapaths configured");
  for (const auto& label : cfg_.metapaths) {
    Metapath mp = g.parse_metapath(label);
    if (mp.length() < 2) throw ConfigError("metapath needs at least one hop: " + label);
    source_mps_.push_back(mp);
    target_mps_.push_back(g.reverse(mp));
  }
  for (const auto& mp : source_mps_)
    if (mp.anchor_type() != source_mps_[0].anchor_type())
      throw ConfigError("metapaths disagree on the source type");
  for (const auto& mp : target_mps_)
    if (mp.anchor_type() != target_mps_[0].anchor_type())
      throw ConfigError("metapaths disagree on the target type");

  threads_ = cfg_.threads ? cfg_.threads : std::max(1u, std::thread::hardware_concurrency());

  if (cfg_.ns) {
    if (cfg_.ns_candidates < cfg_.model.paths)
      throw ConfigError("candidate pool is smaller than the survivor budget");
    ModelConfig fcfg = cfg_.model;
    fcfg.mean_pool = false;
    fcfg.paths = cfg_.ns_candidates;
    filter_ = std::make_unique<FilterModel>(g, fcfg, cfg_.seed);
  }
}

PairPaths Trainer::sample_for(const LabeledPair& p, uint64_t epoch_key) const {
  const HeteroGraph& g = model_->graph();
  NodeRef src{source_mps_[0].anchor_type(), p.source};
  NodeRef tgt{target_mps_[0].anchor_type(), p.target};

  PairPaths out;
  uint32_t pool = cfg_.ns ? cfg_.ns_candidates : cfg_.model.paths;
  for (size_t k = 0; k < source_mps_.size(); ++k) {
    const Metapath& smp = source_mps_[k];
    const Metapath& tmp = target_mps_[k];
    Rng srng = Rng::keyed({cfg_.seed, src.type, src.index, smp.label_hash(g), epoch_key});
    Rng trng = Rng::keyed({cfg_.seed, tgt.type, tgt.index, tmp.label_hash(g), epoch_key});
    PathBatch sb = sample_paths(g, src, smp, pool, srng);
    PathBatch tb = sample_paths(g, tgt, tmp, pool, trng);
    if (!cfg_.ns) {
      out.source.push_back(std::move(sb));
      out.target.push_back(std::move(tb));
      continue;
    }
    PathGroupBuffer sbuf = group_by_prefix(sb, 2);
    PathGroupBuffer tbuf = group_by_prefix(tb, 2);
    ns_score(*filter_, sbuf, tbuf);
    Rng sel = Rng::keyed({cfg_.seed, kSelectTag, epoch_key, k, p.source, p.target});
    SelectionPlan splan = ns_select(sbuf, cfg_.model.paths, sel);
    SelectionPlan tplan = ns_select(tbuf, cfg_.model.paths, sel);
    out.source.push_back(select_rows(sbuf.high, splan.survivors));
    out.target.push_back(select_rows(tbuf.high, tplan.survivors));
  }
  return out;
}

void Trainer::process_batch(std::span<const LabeledPair> batch, uint64_t epoch_key,
                            GradBuffer& grads, BatchStats& stats) const {
  const float weight = 1.0f / static_cast<float>(batch.size());
  auto work = [&](size_t begin, size_t end, GradBuffer& gb, BatchStats& st) {
    Tape tape(model_->params(), gb);
    for (size_t i = begin; i < end; ++i) {
      const LabeledPair& p = batch[i];
      tape.reset();
      PairPaths in = sample_for(p, epoch_key);
      Value y = model_->forward(tape, in);
      Value loss = tape.bce(y, p.label);
      tape.backward(loss, weight);
      st.loss_sum += tape.value(loss).at(0);
      st.labels.push_back(p.label);
      st.probs.push_back(tape.value(y).at(0));
    }
  };

  size_t t_count = std::min<size_t>(threads_, batch.size());
  if (t_count <= 1) {
    work(0, batch.size(), grads, stats);
    return;
  }

  std::vector<GradBuffer> replica_grads;
  replica_grads.reserve(t_count);
  for (size_t t = 0; t < t_count; ++t) replica_grads.emplace_back(model_->params());
  std::vector<BatchStats> replica_stats(t_count);
  std::vector<std::exception_ptr> errors(t_count);
  std::vector<std::thread> pool;
  size_t chunk = (batch.size() + t_count - 1) / t_count;
  for (size_t t = 0; t < t_count; ++t) {
    size_t begin = t * chunk;
    size_t end = std::min(batch.size(), begin + chunk);
    pool.emplace_back([&, t, begin, end] {
      try {
        work(begin, end, replica_grads[t], replica_stats[t]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Fixed reduction order keeps the sum bit-stable for a given thread count.
  for (size_t t = 0; t < t_count; ++t) {
    replica_grads[t].reduce_into(grads);
    stats.loss_sum += replica_stats[t].loss_sum;
    stats.labels.insert(stats.labels.end(), replica_stats[t].labels.begin(),
                        replica_stats[t].labels.end());
    stats.probs.insert(stats.probs.end(), replica_stats[t].probs.begin(),
                       replica_stats[t].probs.end());
  }
}

std::vector<float> Trainer::predict_all(std::span<const LabeledPair> pairs,
                                        const EvalSink& sink) const {
  std::vector<float> probs(pairs.size());
  auto work = [&](size_t begin, size_t end, bool with_diag) {
    GradBuffer scratch(model_->params());
    Tape tape(model_->params(), scratch);
    for (size_t i = begin; i < end; ++i) {
      tape.reset();
      PairPaths in = sample_for(pairs[i], kEvalKey);
      ForwardDiag diag;
      Value y = model_->forward(tape, in, with_diag ? &diag : nullptr);
      probs[i] = tape.value(y).at(0);
      if (with_diag) {
        EvalRecord rec;
        rec.pair = pairs[i];
        rec.prob = probs[i];
        rec.beta = diag.beta;
        rec.alphas = diag.alphas;
        sink(i, rec);
      }
    }
  };

  size_t t_count = sink ? 1 : std::min<size_t>(threads_, pairs.size());
  if (t_count <= 1) {
    work(0, pairs.size(), static_cast<bool>(sink));
    return probs;
  }
  std::vector<std::exception_ptr> errors(t_count);
  std::vector<std::thread> pool;
  size_t chunk = (pairs.size() + t_count - 1) / t_count;
  for (size_t t = 0; t < t_count; ++t) {
    size_t begin = t * chunk;
    size_t end = std::min(pairs.size(), begin + chunk);
    pool.emplace_back([&, begin, end] {
      size_t slot = begin / chunk;
      try {
        work(begin, end, false);
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return probs;
}

CtrMetrics Trainer::evaluate(std::span<const LabeledPair> pairs, const EvalSink& sink) const {
  std::vector<float> labels(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) labels[i] = pairs[i].label;
  std::vector<float> probs = predict_all(pairs, sink);
  return ctr_metrics(labels, probs);
}

TopnMetrics Trainer::evaluate_topn(std::span<const LabeledPair> pairs,
                                   std::span<const uint32_t> test_idx) const {
  const HeteroGraph& g = model_->graph();
  TypeId src_type = source_mps_[0].anchor_type();
  TypeId tgt_type = target_mps_[0].anchor_type();
  uint32_t n_users = g.num_nodes(src_type);
  uint32_t n_items = g.num_nodes(tgt_type);

  std::vector<std::vector<uint32_t>> touched(n_users);
  for (const auto& p : pairs) touched[p.source].push_back(p.target);
  for (auto& v : touched) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  GradBuffer scratch(model_->params());
  Tape tape(model_->params(), scratch);
  std::vector<std::vector<RankedList>> per_user(n_users);

  for (uint32_t idx : test_idx) {
    const LabeledPair& p = pairs[idx];
    if (p.label < 0.5f) continue;
    const auto& seen = touched[p.source];
    uint64_t avail = n_items - seen.size();
    uint32_t want = static_cast<uint32_t>(std::min<uint64_t>(cfg_.topn_negatives, avail));

    std::vector<uint32_t> cands{p.target};
    Rng rng = Rng::keyed({cfg_.seed, kNegativeTag, p.source, p.target});
    if (static_cast<uint64_t>(want) * 2 >= avail) {
      // Dense case: enumerate the unseen items and draw without replacement.
      std::vector<uint32_t> unseen;
      unseen.reserve(avail);
      for (uint32_t j = 0; j < n_items; ++j)
        if (!std::binary_search(seen.begin(), seen.end(), j)) unseen.push_back(j);
      rng.shuffle(unseen);
      cands.insert(cands.end(), unseen.begin(), unseen.begin() + want);
    } else {
      std::unordered_set<uint32_t> chosen;
      while (chosen.size() < want) {
        uint32_t j = rng.next_index(n_items);
        if (std::binary_search(seen.begin(), seen.end(), j)) continue;
        if (chosen.insert(j).second) cands.push_back(j);
      }
    }

    std::vector<float> scores(cands.size());
    for (size_t c = 0; c < cands.size(); ++c) {
      tape.reset();
      PairPaths in = sample_for({p.source, cands[c], 0.0f}, kEvalKey);
      scores[c] = tape.value(model_->forward(tape, in)).at(0);
    }

    std::vector<uint32_t> order(cands.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return cands[a] < cands[b];
    });
    RankedList rl;
    rl.relevant.resize(cands.size());
    for (size_t r = 0; r < order.size(); ++r) rl.relevant[r] = order[r] == 0 ? 1 : 0;
    per_user[p.source].push_back(std::move(rl));
  }
  return topn_metrics(per_user);
}

double ns_train_epoch(FilterModel& filter, const HeteroGraph& g,
                      std::span<const LabeledPair> pairs, const std::vector<Metapath>& source_mps,
                      const std::vector<Metapath>& target_mps, const TrainConfig& cfg,
                      uint32_t epoch, Adam& adam) {
  if (pairs.empty()) return 0.0;
  std::vector<Metapath> src_low, tgt_low;
  for (const auto& mp : source_mps) src_low.push_back(mp.prefix(2));
  for (const auto& mp : target_mps) tgt_low.push_back(mp.prefix(2));

  std::vector<uint32_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0u);
  Rng shuf = Rng::keyed({cfg.seed, kFilterShuffleTag, epoch});
  shuf.shuffle(order);

  uint64_t epoch_key = kFilterEpochBase + epoch;
  GradBuffer grads(filter.params());
  Tape tape(filter.params(), grads);
  double loss_sum = 0;

  for (size_t off = 0; off < order.size(); off += cfg.batch) {
    size_t n = std::min<size_t>(cfg.batch, order.size() - off);
    grads.clear();
    for (size_t j = 0; j < n; ++j) {
      const LabeledPair& p = pairs[order[off + j]];
      tape.reset();
      PairPaths in;
      for (size_t k = 0; k < src_low.size(); ++k) {
        NodeRef src{src_low[k].anchor_type(), p.source};
        NodeRef tgt{tgt_low[k].anchor_type(), p.target};
        Rng srng =
            Rng::keyed({cfg.seed, src.type, src.index, src_low[k].label_hash(g), epoch_key});
        Rng trng =
            Rng::keyed({cfg.seed, tgt.type, tgt.index, tgt_low[k].label_hash(g), epoch_key});
        in.source.push_back(sample_paths(g, src, src_low[k], cfg.ns_candidates, srng));
        in.target.push_back(sample_paths(g, tgt, tgt_low[k], cfg.ns_candidates, trng));
      }
      Value y = filter.forward(tape, in);
      Value loss = tape.bce(y, p.label);
      tape.backward(loss, 1.0f / static_cast<float>(n));
      loss_sum += tape.value(loss).at(0);
    }
    adam.step(filter.params(), grads);
  }
  return loss_sum / static_cast<double>(pairs.size());
}

TrainResult Trainer::run(std::span<const LabeledPair> pairs, std::ostream* log) {
  TrainResult res;
  res.splits = split_pairs(pairs.size(), cfg_.split, cfg_.seed);
  auto view = [&](const std::vector<uint32_t>& idx) {
    std::vector<LabeledPair> v;
    v.reserve(idx.size());
    for (uint32_t i : idx) v.push_back(pairs[i]);
    return v;
  };
  std::vector<LabeledPair> train = view(res.splits.train);
  std::vector<LabeledPair> val = view(res.splits.val);
  std::vector<LabeledPair> test = view(res.splits.test);
  if (train.empty() || val.empty()) throw ConfigError("empty train or validation split");

  if (cfg_.ns) {
    Adam fadam(cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.adam_eps);
    for (uint32_t e = 0; e < cfg_.ns_filter_epochs; ++e) {
      double floss =
          ns_train_epoch(*filter_, model_->graph(), train, source_mps_, target_mps_, cfg_, e, fadam);
      if (log) *log << "filter epoch " << (e + 1) << " loss " << fmt6(floss) << "\n";
    }
  }

  Adam adam(cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.adam_eps);
  GradBuffer grads(model_->params());
  std::vector<Tensor> best_snap = model_->params().snapshot();
  double best_acc = -1.0;
  uint32_t best_epoch = 0, bad = 0;

  std::vector<uint32_t> order(train.size());
  std::iota(order.begin(), order.end(), 0u);
  std::vector<LabeledPair> batch;

  for (uint32_t epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
    Rng shuf = Rng::keyed({cfg_.seed, kShuffleTag, epoch});
    shuf.shuffle(order);
    BatchStats epoch_stats;
    for (size_t off = 0; off < order.size(); off += cfg_.batch) {
      size_t n = std::min<size_t>(cfg_.batch, order.size() - off);
      batch.resize(n);
      for (size_t j = 0; j < n; ++j) batch[j] = train[order[off + j]];
      grads.clear();
      BatchStats bs;
      process_batch(batch, epoch - 1, grads, bs);
      adam.step(model_->params(), grads);
      epoch_stats.loss_sum += bs.loss_sum;
      epoch_stats.labels.insert(epoch_stats.labels.end(), bs.labels.begin(), bs.labels.end());
      epoch_stats.probs.insert(epoch_stats.probs.end(), bs.probs.begin(), bs.probs.end());
    }

    CtrMetrics tm = ctr_metrics(epoch_stats.labels, epoch_stats.probs);
    res.history.push_back({epoch, "train", tm.acc, tm.f1, tm.logloss, false, 0, 0, 0});
    CtrMetrics vm = evaluate(val);
    res.history.push_back({epoch, "val", vm.acc, vm.f1, vm.logloss, false, 0, 0, 0});
    res.epochs_run = epoch;
    if (log)
      *log << "epoch " << epoch << " train acc " << fmt6(tm.acc) << " loss " << fmt6(tm.logloss)
           << " | val acc " << fmt6(vm.acc) << " loss " << fmt6(vm.logloss) << "\n";

    if (vm.acc > best_acc) {
      best_acc = vm.acc;
      best_epoch = epoch;
      best_snap = model_->params().snapshot();
      bad = 0;
    } else if (++bad >= cfg_.patience) {
      res.stopped_early = true;
      break;
    }
  }

  model_->params().restore(best_snap);
  res.best_epoch = best_epoch;
  res.best_val_acc = best_acc;

  if (!test.empty()) {
    res.test_ctr = evaluate(test);
    EpochRow trow{best_epoch, "test", res.test_ctr.acc, res.test_ctr.f1, res.test_ctr.logloss,
                  false,      0,      0,                0};
    if (cfg_.topn) {
      res.test_topn = evaluate_topn(pairs, res.splits.test);
      trow.has_topn = true;
      trow.map5 = res.test_topn.map5;
      trow.ndcg3 = res.test_topn.ndcg3;
      trow.ndcg5 = res.test_topn.ndcg5;
    }
    res.history.push_back(trow);
    if (log)
      *log << "test acc " << fmt6(res.test_ctr.acc) << " f1 " << fmt6(res.test_ctr.f1) << " loss "
           << fmt6(res.test_ctr.logloss) << "\n";
  }

  if (!cfg_.out_dir.empty()) {
    std::filesystem::create_directories(cfg_.out_dir);
    std::ofstream hist(cfg_.out_dir + "/history.csv", std::ios::binary);
    if (!hist) throw IoError("cannot write " + cfg_.out_dir + "/history.csv");
    hist << history_csv(res.history);

    Config man;
    man.set("graph_checksum", std::to_string(model_->graph().checksum()));
    std::string mps;
    for (const auto& m : cfg_.metapaths) {
      if (!mps.empty()) mps += ',';
      mps += m;
    }
    man.set("metapaths", mps);
    man.set_int("embed_dim", cfg_.model.embed_dim);
    man.set_int("heads", cfg_.model.heads);
    man.set_int("paths", cfg_.model.paths);
    man.set_double("elem_temp", cfg_.model.elem_temp);
    man.set_double("path_temp", cfg_.model.path_temp);
    man.set_bool("cross", cfg_.model.cross);
    man.set_bool("all_pairs", cfg_.model.all_pairs);
    man.set_bool("mean_pool", cfg_.model.mean_pool);
    man.set("route", cfg_.model.route == ConvRoute::fft ? "fft" : "naive");
    man.set_double("lr", cfg_.lr);
    man.set_int("batch", cfg_.batch);
    man.set_int("max_epochs", cfg_.max_epochs);
    man.set_int("patience", cfg_.patience);
    man.set("split", fmt6(cfg_.split[0]) + "," + fmt6(cfg_.split[1]) + "," + fmt6(cfg_.split[2]));
    man.set_int("seed", static_cast<int64_t>(cfg_.seed));
    man.set_int("threads", threads_);
    man.set_bool("ns", cfg_.ns);
    if (cfg_.ns) {
      man.set_int("ns_candidates", cfg_.ns_candidates);
      man.set_int("ns_filter_epochs", cfg_.ns_filter_epochs);
    }
    man.set_int("epochs_run", res.epochs_run);
    man.set_int("best_epoch", res.best_epoch);
    man.set_double("best_val_acc", res.best_val_acc);
    man.set_bool("stopped_early", res.stopped_early);
    if (!test.empty()) {
      man.set_double("test_acc", res.test_ctr.acc);
      man.set_double("test_f1", res.test_ctr.f1);
      man.set_double("test_logloss", res.test_ctr.logloss);
      if (cfg_.topn) {
        man.set_double("test_map5", res.test_topn.map5);
        man.set_double("test_ndcg3", res.test_topn.ndcg3);
        man.set_double("test_ndcg5", res.test_topn.ndcg5);
      }
    }
    man.write_file(cfg_.out_dir + "/manifest.txt");
    save_checkpoint(cfg_.out_dir + "/model.ckpt", model_->params());
    if (cfg_.ns) save_checkpoint(cfg_.out_dir + "/filter.ckpt", filter_->params());
  }
  return res;
}

}  // namespace hinge
