#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "nib/classifier.hpp"
#include "nib/common.hpp"
#include "nib/config.hpp"
#include "nib/dataset.hpp"
#include "nib/losses.hpp"
#include "nib/metrics.hpp"
#include "nib/noise.hpp"
#include "nib/random.hpp"
#include "nib/selection.hpp"
#include "nib/transition.hpp"

namespace nib {

/// Training and test splits ready for a run, with clean-data fingerprints.
struct PreparedData {
  LabeledDataset train;
  LabeledDataset test;
  std::uint64_t train_fingerprint = 0;
  std::uint64_t test_fingerprint = 0;
  Real realized_noise_rate = 0;
};

inline PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData out;
  if (cfg.dataset == DatasetKind::blobs) {
    auto tt = generate_blobs({cfg.blob_classes, cfg.blob_n_per_class, cfg.blob_dim,
                              cfg.blob_center_spread, cfg.blob_cluster_std, cfg.seed_data});
    out.train = std::move(tt.train);
    out.test = std::move(tt.test);
  } else {
    const auto dir = resolve_dataset_path(cfg);
    if (dir.empty())
      throw IngestionError(std::string("no CIFAR-10 directory: set dataset.path or ") + kDataRootEnv);
    auto tt = load_cifar10(dir);
    out.train = std::move(tt.train);
    out.test = std::move(tt.test);
  }
  if (cfg.subset_per_class > 0)
    out.train = subset_per_class(out.train, static_cast<std::size_t>(cfg.subset_per_class),
                                 cfg.seed_data);
  out.train_fingerprint = fingerprint(out.train);
  out.test_fingerprint = fingerprint(out.test);
  if (cfg.noise != NoiseKind::none && cfg.noise_rate > 0) {
    const auto q = build_noise_matrix(cfg.noise, cfg.noise_rate, out.train.classes);
    const auto rec = corrupt_labels(out.train.true_labels, q, cfg.seed_noise);
    apply_corruption(out.train, rec);
    out.realized_noise_rate = rec.realized_rate;
  }
  out.train.validate();
  out.test.validate();
  return out;
}

/// One metrics row: one network in one epoch (epochs are 1-based).
struct EpochRecord {
  int epoch = 0;
  char net = 'A';
  Real test_acc = 0;
  Real test_acc_ensemble = 0;
  Real label_precision = 0;
  Real mean_cls = 0;
  Real mean_ic = 0;  // NaN while no selected sample has a seen class row
  Real remember_rate = 1;
  std::size_t n_selected = 0;
  std::size_t n_selected_flipped = 0;
};

/// Per-batch audit entry, recorded when `log_batches` is set.
struct BatchLog {
  int epoch = 0;
  std::size_t batch = 0;
  int net = 0;                           // 0 = A, 1 = B
  std::vector<std::size_t> kept;         // training-set indices selected by `net`
  std::vector<std::optional<std::vector<Real>>> rows;  // rows accumulated into net's state
  Real remember_rate = 1;
  std::size_t batch_size = 0;
};

struct Network {
  Classifier model;
  AdamState opt;
  TransitionState transition;
};

/// Two peer networks with their optimizer and transition states.
struct TrainerState {
  std::array<Network, 2> nets;
  int epoch = 0;  // completed epochs
};

struct RunRecord {
  RunConfig config;
  std::uint64_t train_fingerprint = 0;
  std::uint64_t test_fingerprint = 0;
  Real realized_noise_rate = 0;
  std::vector<EpochRecord> metrics;
  std::vector<BatchLog> batches;
  std::vector<std::array<TransitionMatrix, 2>> snapshots;  // one pair per epoch
  std::optional<TrainerState> state;
  LabeledDataset train;  // as trained on, including corruption flags

  std::vector<Real> stream(char net, Real EpochRecord::*field) const {
    std::vector<Real> out;
    for (const auto& r : metrics)
      if (r.net == net) out.push_back(r.*field);
    return out;
  }
};

using EpochCallback = std::function<void(const EpochRecord&)>;

namespace detail {

inline TrainerState make_trainer(const RunConfig& cfg, const LabeledDataset& train) {
  auto make = [&](std::uint64_t tag) {
    Classifier c = init_classifier(cfg.arch, train.classes, train.sample_shape,
                                   derive_seed(cfg.seed_init, tag));
    AdamState opt(c.param_count(), cfg.lr);
    return Network{std::move(c), std::move(opt), TransitionState(train.classes)};
  };
  return TrainerState{{make(0xA), make(0xB)}, 0};
}

inline Real learning_rate(const RunConfig& cfg, int epoch0) {
  if (cfg.lr_decay_start <= 0 || epoch0 < cfg.lr_decay_start) return cfg.lr;
  return cfg.lr * static_cast<Real>(cfg.epochs - epoch0) /
         static_cast<Real>(cfg.epochs - cfg.lr_decay_start);
}

struct SelectionTally {
  std::size_t selected = 0;
  std::size_t flipped = 0;
  Real sum_cls = 0;
  Real sum_ic = 0;
  std::size_t n_ic = 0;

  void add(std::size_t global, const LabeledDataset& ds, const LossBreakdown& b, bool has_soft) {
    ++selected;
    flipped += ds.flip_mask[global];
    sum_cls += b.cls;
    if (has_soft) {
      sum_ic += b.ic;
      ++n_ic;
    }
  }
};

struct Batch {
  std::vector<std::size_t> index;  // training-set indices
  std::vector<Real> features;
  std::vector<Label> labels;       // observed
};

inline Batch fetch(const LabeledDataset& ds, std::span<const std::size_t> idx) {
  Batch b;
  b.index.assign(idx.begin(), idx.end());
  const std::size_t d = ds.dim();
  b.features.reserve(idx.size() * d);
  for (std::size_t i : idx) {
    const auto s = ds.sample(i);
    b.features.insert(b.features.end(), s.begin(), s.end());
    b.labels.push_back(ds.observed_labels[i]);
  }
  return b;
}

inline std::vector<SoftLabel> soft_labels(const TransitionMatrix& t, std::span<const Label> labels) {
  std::vector<SoftLabel> out;
  out.reserve(labels.size());
  for (Label y : labels) out.push_back(soft_label(t, y));
  return out;
}

/// Gradient of the mean sample loss over `kept`, reusing a forward pass of
/// the whole batch (unselected columns contribute zero).
inline std::vector<Real> selected_gradient(const Classifier& net, const ForwardCache& cache,
                                           std::span<const Label> labels,
                                           std::span<const SoftLabel> soft,
                                           std::span<const std::size_t> kept, Real lambda,
                                           bool use_ic) {
  const int k = net.classes();
  Matrix dlogits = Matrix::Zero(k, static_cast<Eigen::Index>(labels.size()));
  std::vector<Real> g(k);
  const Real w = 1.0 / static_cast<Real>(kept.size());
  for (std::size_t i : kept) {
    std::fill(g.begin(), g.end(), 0.0);
    const auto p = cache.probs.row(i);
    add_sample_loss_grad(p, labels[i], use_ic ? soft[i] : SoftLabel{}, lambda, w, g);
    softmax_backward(p, g, std::span<Real>(dlogits.col(static_cast<Eigen::Index>(i)).data(), k));
  }
  return net.backward(cache, dlogits);
}

inline void evaluate(TrainerState& st, const LabeledDataset& test, int epoch, Real rate,
                     const std::array<SelectionTally, 2>& tally, RunRecord& rec,
                     const EpochCallback& cb) {
  const auto pa = predict_dataset(st.nets[0].model, test);
  const auto pb = predict_dataset(st.nets[1].model, test);
  const Real acc_ens = accuracy(predicted_classes(average(pa, pb)), test.true_labels);
  const std::array<Real, 2> acc = {accuracy(predicted_classes(pa), test.true_labels),
                                   accuracy(predicted_classes(pb), test.true_labels)};
  for (int n = 0; n < 2; ++n) {
    const auto& t = tally[n];
    EpochRecord r;
    r.epoch = epoch;
    r.net = n == 0 ? 'A' : 'B';
    r.test_acc = acc[n];
    r.test_acc_ensemble = acc_ens;
    r.n_selected = t.selected;
    r.n_selected_flipped = t.flipped;
    r.label_precision = t.selected ? static_cast<Real>(t.selected - t.flipped) /
                                         static_cast<Real>(t.selected)
                                   : std::numeric_limits<Real>::quiet_NaN();
    r.mean_cls = t.selected ? t.sum_cls / static_cast<Real>(t.selected)
                            : std::numeric_limits<Real>::quiet_NaN();
    r.mean_ic = t.n_ic ? t.sum_ic / static_cast<Real>(t.n_ic)
                       : std::numeric_limits<Real>::quiet_NaN();
    r.remember_rate = rate;
    rec.metrics.push_back(r);
    if (cb) cb(r);
  }
}

inline void end_epoch(TrainerState& st, RunRecord& rec) {
  rec.snapshots.push_back({st.nets[0].transition.snapshot_epoch(),
                           st.nets[1].transition.snapshot_epoch()});
  ++st.epoch;
}

// One epoch of co-teaching: each network ranks the batch with its own
// criterion and transition snapshot, accumulates its own clean rows, and is
// updated on its peer's clean set.
inline void coteaching_epoch(const RunConfig& cfg, const LabeledDataset& train, TrainerState& st,
                             RunRecord& rec, std::array<SelectionTally, 2>& tally, Real rate) {
  const int epoch0 = st.epoch;
  const Criterion crit = criterion_for(cfg.nib);
  const bool use_ic = cfg.nib != NibMode::off;
  const int k = train.classes;
  const auto plan = make_batch_plan(train.size(), static_cast<std::size_t>(cfg.batch_size),
                                    cfg.seed_shuffle, static_cast<std::uint64_t>(epoch0));
  for (auto& n : st.nets) n.opt.lr = learning_rate(cfg, epoch0);

  for (std::size_t j = 0; j < plan.iterations(); ++j) {
    const Batch batch = fetch(train, plan.batch(j));
    const std::size_t rows = batch.labels.size();
    const std::size_t d = keep_count(rate, rows);

    std::array<ForwardCache, 2> cache;
    std::array<std::vector<SoftLabel>, 2> soft;
    std::array<CriterionScores, 2> scores;
    std::array<SelectionOutcome, 2> sel;
    for (int n = 0; n < 2; ++n) {
      cache[n] = st.nets[n].model.forward(batch.features, rows);
      const auto& snap = st.nets[n].transition.snapshot();
      soft[n] = soft_labels(snap, batch.labels);
      scores[n] = criterion_losses(cache[n].probs, batch.labels, snap, cfg.lambda, crit);
      sel[n] = select_clean(scores[n].criterion, d, crit);
    }

    for (int n = 0; n < 2; ++n) {
      auto batch_rows = batch_class_rows(k, batch.labels, sel[n].kept,
                                         [&](std::size_t i) { return cache[n].probs.row(i); });
      st.nets[n].transition.accumulate_batch(batch_rows);
      for (std::size_t i : sel[n].kept)
        tally[n].add(batch.index[i], train, scores[n].parts[i], soft[n][i].has_value());
      if (cfg.log_batches) {
        BatchLog log{epoch0 + 1, j, n, {}, std::move(batch_rows), rate, rows};
        for (std::size_t i : sel[n].kept) log.kept.push_back(batch.index[i]);
        rec.batches.push_back(std::move(log));
      }
    }

    for (int n = 0; n < 2; ++n) {
      const auto& peer_kept = sel[1 - n].kept;
      const auto grad = selected_gradient(st.nets[n].model, cache[n], batch.labels, soft[n],
                                          peer_kept, cfg.lambda, use_ic);
      apply_update(st.nets[n].model, st.nets[n].opt, grad);
    }
  }
}

// Joint-training per-sample scores. Returns the selection criterion and the
// training criterion (the latter is the NIB objective for ic_only).
struct JointScores {
  std::vector<Real> select;
  std::vector<Real> train;
  std::array<std::vector<LossBreakdown>, 2> parts;
};

inline Real joint_nib_value(Real joint, const SoftLabel& sa, const SoftLabel& sb, Real ica,
                            Real icb, Real lambda, bool ic_only) {
  Real ic = 0;
  int present = 0;
  if (sa) {
    ic += ica;
    ++present;
  }
  if (sb) {
    ic += icb;
    ++present;
  }
  if (!present) return joint;
  ic /= present;
  return ic_only ? ic : lambda * joint + (1 - lambda) * ic;
}

/// Mean over `kept` of the joint training objective: the co-regularized
/// loss, mixed with the averaged IC losses when `nib_lambda` is set.
inline Real jocor_objective(const Probabilities& pa, const Probabilities& pb,
                            std::span<const Label> labels, std::span<const SoftLabel> sa,
                            std::span<const SoftLabel> sb, std::span<const std::size_t> kept,
                            Real coreg, std::optional<Real> nib_lambda) {
  Real sum = 0;
  for (std::size_t i : kept) {
    const Real joint = joint_coreg_loss(pa.row(i), pb.row(i), labels[i], coreg);
    if (!nib_lambda) {
      sum += joint;
      continue;
    }
    const Real ica = sa[i] ? ic_loss(*sa[i], pa.row(i)) : 0;
    const Real icb = sb[i] ? ic_loss(*sb[i], pb.row(i)) : 0;
    sum += joint_nib_value(joint, sa[i], sb[i], ica, icb, *nib_lambda, false);
  }
  return sum / static_cast<Real>(kept.size());
}

/// d(jocor_objective)/d(logits) for both networks, one column per batch sample.
inline std::array<Matrix, 2> jocor_dlogits(const Probabilities& pa_all, const Probabilities& pb_all,
                                           std::span<const Label> labels,
                                           std::span<const SoftLabel> sa,
                                           std::span<const SoftLabel> sb,
                                           std::span<const std::size_t> kept, Real coreg,
                                           std::optional<Real> nib_lambda) {
  const auto k = static_cast<Eigen::Index>(pa_all.classes);
  const auto rows = static_cast<Eigen::Index>(labels.size());
  std::array<Matrix, 2> dlogits = {Matrix::Zero(k, rows), Matrix::Zero(k, rows)};
  std::vector<Real> ga(pa_all.classes), gb(pa_all.classes);
  const Real scale = 1.0 / static_cast<Real>(kept.size());
  for (std::size_t i : kept) {
    const auto pa = pa_all.row(i), pb = pb_all.row(i);
    const Label y = labels[i];
    std::fill(ga.begin(), ga.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    const int present = static_cast<int>(sa[i].has_value()) + static_cast<int>(sb[i].has_value());
    const bool mixed = nib_lambda && present;
    const Real jw = mixed ? *nib_lambda * scale : scale;
    add_cross_entropy_grad(pa, y, jw * (1 - coreg), ga);
    add_cross_entropy_grad(pb, y, jw * (1 - coreg), gb);
    add_kl_grad(pa, pb, jw * coreg, ga, gb);
    add_kl_grad(pb, pa, jw * coreg, gb, ga);
    if (mixed) {
      const Real icw = (1 - *nib_lambda) * scale / present;
      if (sa[i]) add_ic_grad(*sa[i], pa, icw, ga);
      if (sb[i]) add_ic_grad(*sb[i], pb, icw, gb);
    }
    const auto col = static_cast<Eigen::Index>(i);
    softmax_backward(pa, ga, std::span<Real>(dlogits[0].col(col).data(), pa_all.classes));
    softmax_backward(pb, gb, std::span<Real>(dlogits[1].col(col).data(), pa_all.classes));
  }
  return dlogits;
}

inline void jocor_epoch(const RunConfig& cfg, const LabeledDataset& train, TrainerState& st,
                        RunRecord& rec, std::array<SelectionTally, 2>& tally, Real rate) {
  const int epoch0 = st.epoch;
  const int k = train.classes;
  const Real w = cfg.jocor_lambda;
  const Real lam = cfg.lambda;
  const bool nib = cfg.nib != NibMode::off;
  const auto plan = make_batch_plan(train.size(), static_cast<std::size_t>(cfg.batch_size),
                                    cfg.seed_shuffle, static_cast<std::uint64_t>(epoch0));
  for (auto& n : st.nets) n.opt.lr = learning_rate(cfg, epoch0);

  for (std::size_t j = 0; j < plan.iterations(); ++j) {
    const Batch batch = fetch(train, plan.batch(j));
    const std::size_t rows = batch.labels.size();
    const std::size_t d = keep_count(rate, rows);

    std::array<ForwardCache, 2> cache;
    std::array<std::vector<SoftLabel>, 2> soft;
    for (int n = 0; n < 2; ++n) {
      cache[n] = st.nets[n].model.forward(batch.features, rows);
      soft[n] = soft_labels(st.nets[n].transition.snapshot(), batch.labels);
    }

    JointScores sc;
    for (std::size_t i = 0; i < rows; ++i) {
      const auto pa = cache[0].probs.row(i), pb = cache[1].probs.row(i);
      const Label y = batch.labels[i];
      const Real joint = joint_coreg_loss(pa, pb, y, w);
      sc.parts[0].push_back(sample_loss(pa, y, soft[0][i], lam));
      sc.parts[1].push_back(sample_loss(pb, y, soft[1][i], lam));
      const Real ica = sc.parts[0].back().ic, icb = sc.parts[1].back().ic;
      const Real with_nib = joint_nib_value(joint, soft[0][i], soft[1][i], ica, icb, lam, false);
      switch (cfg.nib) {
        case NibMode::off: sc.select.push_back(joint); break;
        case NibMode::on: sc.select.push_back(with_nib); break;
        case NibMode::ic_only:
          sc.select.push_back(joint_nib_value(joint, soft[0][i], soft[1][i], ica, icb, lam, true));
          break;
      }
      sc.train.push_back(nib ? with_nib : joint);
    }
    const auto sel = select_clean(sc.select, d, criterion_for(cfg.nib));

    for (int n = 0; n < 2; ++n) {
      auto batch_rows = batch_class_rows(k, batch.labels, sel.kept,
                                         [&](std::size_t i) { return cache[n].probs.row(i); });
      st.nets[n].transition.accumulate_batch(batch_rows);
      for (std::size_t i : sel.kept)
        tally[n].add(batch.index[i], train, sc.parts[n][i], soft[n][i].has_value());
      if (cfg.log_batches) {
        BatchLog log{epoch0 + 1, j, n, {}, std::move(batch_rows), rate, rows};
        for (std::size_t i : sel.kept) log.kept.push_back(batch.index[i]);
        rec.batches.push_back(std::move(log));
      }
    }

    const auto dlogits = jocor_dlogits(cache[0].probs, cache[1].probs, batch.labels, soft[0],
                                       soft[1], sel.kept, w, nib ? std::optional<Real>(lam) : std::nullopt);
    for (int n = 0; n < 2; ++n) {
      const auto grad = st.nets[n].model.backward(cache[n], dlogits[n]);
      apply_update(st.nets[n].model, st.nets[n].opt, grad);
    }
  }
}

inline RunRecord run_paradigm(const RunConfig& cfg, const PreparedData& data,
                              const EpochCallback& cb) {
  cfg.validate();
  RunRecord rec;
  rec.config = cfg;
  rec.train_fingerprint = data.train_fingerprint;
  rec.test_fingerprint = data.test_fingerprint;
  rec.realized_noise_rate = data.realized_noise_rate;
  rec.train = data.train;

  TrainerState st = make_trainer(cfg, data.train);
  const Real tau = cfg.effective_tau();
  for (int e = 0; e < cfg.epochs; ++e) {
    const Real rate = remember_rate(e, tau, cfg.ramp_epochs);
    std::array<SelectionTally, 2> tally{};
    if (cfg.paradigm == Paradigm::coteaching)
      coteaching_epoch(cfg, data.train, st, rec, tally, rate);
    else
      jocor_epoch(cfg, data.train, st, rec, tally, rate);
    end_epoch(st, rec);
    evaluate(st, data.test, e + 1, rate, tally, rec, cb);
  }
  rec.state = std::move(st);
  return rec;
}

}  // namespace detail

/// Co-teaching, optionally with the noise ignoring block (nib.mode).
inline RunRecord run_coteaching(RunConfig cfg, const PreparedData& data,
                                const EpochCallback& cb = {}) {
  if (cfg.paradigm != Paradigm::coteaching)
    throw ParameterError("run_coteaching called with paradigm=" + std::string(to_string(cfg.paradigm)));
  return detail::run_paradigm(cfg, data, cb);
}

/// Joint training with co-regularization, optionally with the noise ignoring block.
inline RunRecord run_jocor(RunConfig cfg, const PreparedData& data, const EpochCallback& cb = {}) {
  if (cfg.paradigm != Paradigm::jocor)
    throw ParameterError("run_jocor called with paradigm=" + std::string(to_string(cfg.paradigm)));
  return detail::run_paradigm(cfg, data, cb);
}

inline RunRecord run_training(const RunConfig& cfg, const PreparedData& data,
                              const EpochCallback& cb = {}) {
  return cfg.paradigm == Paradigm::coteaching ? run_coteaching(cfg, data, cb)
                                              : run_jocor(cfg, data, cb);
}

inline RunRecord run_training(const RunConfig& cfg, const EpochCallback& cb = {}) {
  cfg.validate();
  return run_training(cfg, prepare_data(cfg), cb);
}

}  // namespace nib
