#include "pqa/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "pqa/io/png_io.hpp"
#include "pqa/nn/ops.hpp"
#include "pqa/nn/params.hpp"

namespace fs = std::filesystem;

namespace pqa::train {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double param_l2(const nn::ParamStore<float>& ps) {
  double acc = 0.0;
  for (size_t i = 0; i < ps.size(); ++i) {
    const auto& t = ps[i].value;
    for (int64_t j = 0; j < t.numel(); ++j) acc += static_cast<double>(t[j]) * t[j];
  }
  return std::sqrt(acc);
}

double param_max(const nn::ParamStore<float>& ps) {
  double m = 0.0;
  for (size_t i = 0; i < ps.size(); ++i) {
    const auto& t = ps[i].value;
    for (int64_t j = 0; j < t.numel(); ++j) m = std::max(m, std::abs(static_cast<double>(t[j])));
  }
  return m;
}

}  // namespace

uint64_t per_image_seed(uint64_t global_seed, int64_t epoch, const std::string& image_id) {
  return Rng::mix(Rng::mix(global_seed, static_cast<uint64_t>(epoch)), Rng::hash_str(image_id));
}

Tensor<float> stack_patches(const aps::PatchSet& ps) {
  if (ps.patches.empty()) throw std::invalid_argument("stack_patches: empty patch set");
  const auto k = static_cast<int64_t>(ps.patches.size());
  const auto& first = ps.patches.front().shape();
  Tensor<float> out({k, first[0], first[1], first[2]});
  const int64_t per = first[0] * first[1] * first[2];
  for (int64_t i = 0; i < k; ++i) {
    const auto& p = ps.patches[static_cast<size_t>(i)];
    if (p.shape() != first) throw std::invalid_argument("stack_patches: ragged patch set");
    for (int64_t j = 0; j < per; ++j) out[i * per + j] = p[j];
  }
  return out;
}

data::Checkpoint make_checkpoint(const model::Model<float>& m, const data::AppConfig& cfg,
                                 uint64_t rng_state, int64_t epoch) {
  data::Checkpoint ck;
  ck.config_kv = data::to_kv(cfg);
  ck.rng_state = rng_state;
  ck.epoch = epoch;
  for (size_t i = 0; i < m.params.size(); ++i)
    ck.tensors.emplace_back(m.params[i].name, m.params[i].value.clone());
  return ck;
}

void load_into_model(model::Model<float>& m, const data::Checkpoint& ck) {
  if (ck.tensors.size() != m.params.size())
    throw std::runtime_error("checkpoint/model mismatch: " + std::to_string(ck.tensors.size()) +
                             " tensors vs " + std::to_string(m.params.size()) + " params");
  for (size_t i = 0; i < m.params.size(); ++i) {
    const Tensor<float>* t = ck.find(m.params[i].name);
    if (!t) throw std::runtime_error("checkpoint missing tensor " + m.params[i].name);
    if (t->shape() != m.params[i].value.shape())
      throw std::runtime_error("checkpoint shape mismatch for " + m.params[i].name);
    std::copy(t->data(), t->data() + t->numel(), m.params[i].value.data());
  }
}

TrainResult train_run(const data::DatasetManifest& manifest, const data::AppConfig& cfg_in,
                      const std::string& out_dir, std::ostream* log) {
  data::AppConfig cfg = cfg_in;
  cfg.sync();
  const auto rows = manifest.split_rows(data::Split::train);
  if (rows.empty()) throw std::invalid_argument("train_run: empty train split");
  fs::create_directories(out_dir);

  // Load every training image once; the synthetic sets fit in memory.
  std::vector<erp::Image> images;
  images.reserve(rows.size());
  for (const auto& r : rows) images.push_back(io::load_png(r.image_path));

  model::Model<float> model(cfg.model);
  nn::Adam<float> opt(static_cast<float>(cfg.train.lr));
  opt.init(model.params);

  std::vector<double> mos(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) mos[i] = rows[i].mos;

  TrainResult res;
  const auto t_start = std::chrono::steady_clock::now();
  for (int64_t epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
    // deterministic shuffle of image order
    std::vector<size_t> order(rows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(Rng::mix(Rng::mix(cfg.train.seed, static_cast<uint64_t>(epoch)), 0x6f72646572ull));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(shuffle_rng.uniform_int(static_cast<int64_t>(i)))]);

    // batch boundaries; a trailing singleton folds into the previous batch
    // because the loss needs at least two scores
    std::vector<std::pair<size_t, size_t>> batches;
    const auto bs = static_cast<size_t>(std::max<int64_t>(2, cfg.train.batch_size));
    for (size_t at = 0; at < order.size(); at += bs)
      batches.emplace_back(at, std::min(at + bs, order.size()));
    if (batches.size() > 1 && batches.back().second - batches.back().first < 2) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }

    double loss_sum = 0.0;
    std::vector<double> epoch_scores(rows.size(), 0.0);
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const auto [beg, end] = batches[bi];
      const size_t n = end - beg;

      // phase A: sample patches and score without gradients
      std::vector<Tensor<float>> batch_patches(n);
      Tensor<double> batch_mos({static_cast<int64_t>(n)});
      std::vector<double> raw(n);
      for (size_t j = 0; j < n; ++j) {
        const size_t img_i = order[beg + j];
        Rng srng(per_image_seed(cfg.train.seed, epoch, rows[img_i].image_id));
        const auto ps = aps::sample_image(images[img_i], cfg.sampler, srng);
        batch_patches[j] = stack_patches(ps);
        raw[j] = static_cast<double>(model.score(batch_patches[j]));
        batch_mos[static_cast<int64_t>(j)] = mos[img_i];
        epoch_scores[img_i] = raw[j];
      }

      // loss and dL/ds_hat on a small double-precision tape
      nn::Tape<double> lt;
      Tensor<double> s_hat({static_cast<int64_t>(n)});
      for (size_t j = 0; j < n; ++j) s_hat[static_cast<int64_t>(j)] = raw[j];
      nn::Var<double> sh = lt.leaf(s_hat, true);
      nn::Var<double> loss = nn::norm_in_norm_loss(lt, sh, batch_mos, static_cast<double>(cfg.loss.gamma),
                                               cfg.loss.omega, cfg.loss.epsilon);
      const double loss_val = lt.val(loss)[0];
      if (!std::isfinite(loss_val))
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                             std::to_string(bi) + ": |params|_2=" + fmt17(param_l2(model.params)) +
                             " max|p|=" + fmt17(param_max(model.params)));
      lt.backward_scalar(loss);
      const Tensor<double>& gs = lt.grad(sh);

      // phase B: per-image backward, seeded with dL/ds_hat_i, summed
      nn::GradAccum<float> acc(model.params.size());
      for (size_t j = 0; j < n; ++j) {
        nn::Tape<float> t;
        nn::Binding<float> bd(t, model.params, true);
        nn::Var<float> s = model.forward(t, bd, t.leaf(batch_patches[j]));
        Tensor<float> seed({1});
        seed[0] = static_cast<float>(gs[static_cast<int64_t>(j)]);
        t.backward(s, seed);
        acc.add(model.params, t, bd);
      }
      opt.step(model.params, acc.grads());
      loss_sum += loss_val * static_cast<double>(n);
    }

    EpochStats es;
    es.epoch = epoch;
    es.loss = loss_sum / static_cast<double>(rows.size());
    es.srcc = stats::srcc(epoch_scores, mos);
    res.history.push_back(es);
    if (log) {
      const double dt =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      *log << "epoch " << epoch << "/" << cfg.train.epochs << "  loss " << es.loss << "  srcc "
           << es.srcc << "  (" << dt << " s)\n";
    }
  }

  res.checkpoint =
      make_checkpoint(model, cfg, Rng::mix(cfg.train.seed, static_cast<uint64_t>(cfg.train.epochs)),
                      cfg.train.epochs);
  res.history_path = (fs::path(out_dir) / "history.csv").string();
  res.checkpoint_path = (fs::path(out_dir) / "checkpoint.ckpt").string();
  write_history_csv(res.history_path, res.history);
  data::save_checkpoint(res.checkpoint_path, res.checkpoint);
  return res;
}

EvalReport evaluate_run(const data::Checkpoint& ck, const data::DatasetManifest& manifest,
                        data::Split split, std::ostream* log) {
  data::AppConfig cfg = data::app_config_from_kv(ck.config_kv);
  model::Model<float> model(cfg.model);
  load_into_model(model, ck);

  EvalReport rep;
  rep.config_hash_hex = [&] {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(data::config_hash(ck.config_kv)));
    return std::string(buf);
  }();
  rep.checkpoint_id = data::checkpoint_id(ck);

  const auto rows = manifest.split_rows(split);
  std::vector<double> raw, mos;
  for (const auto& r : rows) {
    EvalItem item;
    item.image_id = r.image_id;
    item.mos = r.mos;
    try {
      const erp::Image img = io::load_png(r.image_path);
      Rng srng(per_image_seed(cfg.eval_seed, 0, r.image_id));
      const auto ps = aps::sample_image(img, cfg.sampler, srng);
      item.raw_score = static_cast<double>(model.score(stack_patches(ps)));
      if (!std::isfinite(item.raw_score)) throw NumericalError("non-finite score");
      raw.push_back(item.raw_score);
      mos.push_back(item.mos);
    } catch (const std::exception& e) {
      item.error = e.what();
      ++rep.n_failed;
      if (log) *log << "eval: " << r.image_id << " failed: " << e.what() << "\n";
    }
    rep.items.push_back(item);
  }
  rep.n_scored = static_cast<int64_t>(raw.size());

  // Fall back to the identity map when fitting is impossible so the report
  // still carries mapped scores.
  rep.rho = stats::LogisticParams{0.0, 0.0, 0.0, 1.0, 0.0};
  if (rep.n_scored >= 5) {
    try {
      rep.rho = stats::logistic_fit(raw, mos);
    } catch (const stats::FitFailure& e) {
      rep.rho = e.best;
      rep.fit_converged = false;
    } catch (const std::invalid_argument&) {
      rep.fit_converged = false;  // constant scores
    }
  } else {
    rep.fit_converged = false;
  }

  std::vector<double> mapped;
  for (auto& item : rep.items)
    if (item.error.empty()) {
      item.mapped_score = stats::logistic_eval(rep.rho, item.raw_score);
      mapped.push_back(item.mapped_score);
    }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.plcc = rep.srcc = rep.rmse = nan;
  if (rep.n_scored >= 2) {
    try {
      rep.plcc = stats::plcc(mapped, mos);
    } catch (const std::exception&) {
    }
    try {
      rep.srcc = stats::srcc(raw, mos);
    } catch (const std::exception&) {
    }
    rep.rmse = stats::rmse(mapped, mos);
  }
  return rep;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write history: " + path);
  out << "epoch,loss,srcc\n";
  for (const auto& h : history)
    out << h.epoch << ',' << fmt17(h.loss) << ',' << fmt17(h.srcc) << '\n';
}

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << "image_id,mos,raw_score,mapped_score,error\n";
  for (const auto& item : report.items) {
    out << item.image_id << ',' << fmt17(item.mos) << ',';
    if (item.error.empty()) {
      out << fmt17(item.raw_score) << ',' << fmt17(item.mapped_score) << ',';
    } else {
      std::string clean = item.error;
      for (char& c : clean)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
      out << ",," << clean;
    }
    out << '\n';
  }
}

void write_summary_json(const std::string& path, const EvalReport& report) {
  nlohmann::json j;
  auto num_or_null = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  j["plcc"] = num_or_null(report.plcc);
  j["srcc"] = num_or_null(report.srcc);
  j["rmse"] = num_or_null(report.rmse);
  j["rho"] = {report.rho.rho1, report.rho.rho2, report.rho.rho3, report.rho.rho4, report.rho.rho5};
  j["fit_converged"] = report.fit_converged;
  j["n_scored"] = report.n_scored;
  j["n_failed"] = report.n_failed;
  j["config_hash"] = report.config_hash_hex;
  j["checkpoint_id"] = report.checkpoint_id;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write summary: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace pqa::train
