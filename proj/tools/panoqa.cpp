#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "pqa/aps/sampler.hpp"
#include "pqa/data/checkpoint.hpp"
#include "pqa/data/config.hpp"
#include "pqa/data/manifest.hpp"
#include "pqa/data/synth.hpp"
#include "pqa/fr/metrics.hpp"
#include "pqa/io/png_io.hpp"
#include "pqa/kernels/kernels.hpp"
#include "pqa/report/plot.hpp"
#include "pqa/stats/stats.hpp"
#include "pqa/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace pqa;

namespace {

void diag(const std::string& code, const std::string& message) {
  nlohmann::json j;
  j["code"] = code;
  j["message"] = message;
  std::cerr << j.dump() << "\n";
}

data::AppConfig layered_config(const std::string& config_path) {
  data::AppConfig cfg;
  if (!config_path.empty()) cfg = data::app_config_from_kv(data::load_config_file(config_path));
  cfg.sync();
  return cfg;
}

void write_resolved(const std::string& out_dir, const data::KvMap& kv) {
  fs::create_directories(out_dir);
  data::save_config_file((fs::path(out_dir) / "resolved.cfg").string(), kv);
}

int cmd_sample(const std::string& image_path, const std::string& out_dir,
               const std::string& config_path, uint64_t seed, bool seed_set,
               const std::string& mode) {
  data::AppConfig cfg = layered_config(config_path);
  if (!mode.empty()) {
    if (mode == "prior_equator")
      cfg.sampler.mode = aps::SamplerConfig::Mode::prior_equator;
    else if (mode == "uniform_grid")
      cfg.sampler.mode = aps::SamplerConfig::Mode::uniform_grid;
    else
      throw std::invalid_argument("unknown sampling mode: " + mode);
  }
  const uint64_t s = seed_set ? seed : cfg.eval_seed;

  const erp::Image img = io::load_png(image_path);
  Rng rng(s);
  const aps::PatchSet ps = aps::sample_image(img, cfg.sampler, rng);

  fs::create_directories(out_dir);
  std::ofstream centers((fs::path(out_dir) / "centers.csv").string(), std::ios::binary);
  centers << "patch,block_index,colat_deg,lon_deg,p_w,p_h\n";
  for (size_t i = 0; i < ps.patches.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "patch_%02zu.png", i);
    io::save_png((fs::path(out_dir) / name).string(), erp::Image(ps.patches[i]), 8);
    const auto& c = ps.centers[i];
    centers << i << ',' << c.block_index << ',' << c.colat_deg << ',' << c.lon_deg << ','
            << ps.p_w << ',' << ps.p_h << '\n';
  }
  write_resolved(out_dir, data::to_kv(cfg));
  std::cout << "wrote " << ps.patches.size() << " patches to " << out_dir << "\n";
  return 0;
}

int cmd_score_fr(const std::string& metric, const std::string& ref_path,
                 const std::string& dist_path) {
  const erp::Image ref = io::load_png(ref_path);
  const erp::Image dist = io::load_png(dist_path);
  std::vector<std::pair<std::string, fr::MetricResult>> rows;
  const bool all = metric == "all";
  if (all || metric == "ws-psnr") rows.emplace_back("ws-psnr", fr::ws_psnr(ref, dist));
  if (all || metric == "s-psnr") rows.emplace_back("s-psnr", fr::s_psnr(ref, dist));
  if (all || metric == "cpp-psnr") rows.emplace_back("cpp-psnr", fr::cpp_psnr(ref, dist));
  if (all || metric == "ws-ssim") rows.emplace_back("ws-ssim", fr::ws_ssim(ref, dist));
  if (rows.empty()) throw std::invalid_argument("unknown metric: " + metric);
  std::cout << "metric,value,sample_count,capped\n";
  for (const auto& [name, r] : rows) {
    char val[64];
    std::snprintf(val, sizeof(val), "%.10g", r.value);
    std::cout << name << ',' << val << ',' << r.sample_count << ',' << (r.capped ? 1 : 0) << "\n";
  }
  return 0;
}

int cmd_synth(const std::string& out_dir, const std::string& config_path, int64_t contents,
              int64_t height, uint64_t seed, bool c_set, bool h_set, bool s_set) {
  data::AppConfig cfg = layered_config(config_path);
  if (c_set) cfg.synth.n_contents = contents;
  if (h_set) cfg.synth.height = height;
  if (s_set) cfg.synth.seed = seed;
  const auto res = data::synth_dataset(out_dir, cfg.synth);
  write_resolved(out_dir, data::to_kv(cfg));
  std::cout << "wrote " << res.manifest.rows.size() << " images and " << res.manifest_path
            << "\n";
  return 0;
}

int cmd_train(const std::string& manifest_path, const std::string& out_dir,
              const std::string& config_path, const std::map<std::string, std::string>& overrides) {
  data::AppConfig cfg = layered_config(config_path);
  if (!overrides.empty()) {
    data::KvMap kv = data::to_kv(cfg);
    for (const auto& [k, v] : overrides) kv[k] = v;
    cfg = data::app_config_from_kv(kv);
  }
  const auto manifest =
      data::load_manifest(manifest_path, cfg.train.seed, cfg.train.train_fraction);
  write_resolved(out_dir, data::to_kv(cfg));
  const auto res = train::train_run(manifest, cfg, out_dir, &std::cout);
  std::cout << "history: " << res.history_path << "\ncheckpoint: " << res.checkpoint_path << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& manifest_path,
             const std::string& out_dir, const std::string& split_name) {
  const data::Checkpoint ck = data::load_checkpoint(checkpoint_path);
  data::AppConfig cfg = data::app_config_from_kv(ck.config_kv);
  const auto manifest =
      data::load_manifest(manifest_path, cfg.train.seed, cfg.train.train_fraction);

  data::Split split = data::Split::test;
  if (split_name == "train")
    split = data::Split::train;
  else if (split_name != "test")
    throw std::invalid_argument("unknown split: " + split_name);

  const auto rep = train::evaluate_run(ck, manifest, split, &std::cerr);
  fs::create_directories(out_dir);
  train::write_report_csv((fs::path(out_dir) / "report.csv").string(), rep);
  train::write_summary_json((fs::path(out_dir) / "summary.json").string(), rep);
  write_resolved(out_dir, ck.config_kv);
  char line[160];
  std::snprintf(line, sizeof(line), "plcc %.4f  srcc %.4f  rmse %.4f  (%lld scored, %lld failed)",
                rep.plcc, rep.srcc, rep.rmse, static_cast<long long>(rep.n_scored),
                static_cast<long long>(rep.n_failed));
  std::cout << line << "\n";
  return 0;
}

int cmd_report(const std::string& report_csv, const std::string& summary_json,
               const std::string& out_dir) {
  // raw/mos pairs from report.csv
  std::ifstream in(report_csv);
  if (!in) throw std::runtime_error("cannot read report: " + report_csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("image_id,mos,raw_score,mapped_score", 0) != 0)
    throw std::invalid_argument("unexpected report header in " + report_csv);
  std::vector<double> raw, mos;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string id, mos_s, raw_s;
    std::getline(ss, id, ',');
    std::getline(ss, mos_s, ',');
    std::getline(ss, raw_s, ',');
    if (raw_s.empty()) continue;  // per-item error row
    mos.push_back(std::stod(mos_s));
    raw.push_back(std::stod(raw_s));
  }
  if (raw.empty()) throw std::invalid_argument("report has no scored rows: " + report_csv);

  std::ifstream sin(summary_json);
  if (!sin) throw std::runtime_error("cannot read summary: " + summary_json);
  nlohmann::json j;
  sin >> j;
  stats::LogisticParams rho;
  const auto& arr = j.at("rho");
  rho.rho1 = arr.at(0).get<double>();
  rho.rho2 = arr.at(1).get<double>();
  rho.rho3 = arr.at(2).get<double>();
  rho.rho4 = arr.at(3).get<double>();
  rho.rho5 = arr.at(4).get<double>();

  fs::create_directories(out_dir);
  report::render_scatter_png((fs::path(out_dir) / "scatter.png").string(), raw, mos, rho);
  report::render_scatter_svg((fs::path(out_dir) / "scatter.svg").string(), raw, mos, rho);

  std::ofstream metrics((fs::path(out_dir) / "metrics.csv").string(), std::ios::binary);
  metrics << "plcc,srcc,rmse,n_scored,n_failed,config_hash,checkpoint_id\n";
  auto num = [&](const char* key) {
    const auto& v = j.at(key);
    return v.is_null() ? std::string("nan") : std::to_string(v.get<double>());
  };
  metrics << num("plcc") << ',' << num("srcc") << ',' << num("rmse") << ','
          << j.at("n_scored").get<int64_t>() << ',' << j.at("n_failed").get<int64_t>() << ','
          << j.at("config_hash").get<std::string>() << ','
          << j.at("checkpoint_id").get<std::string>() << '\n';
  std::cout << "wrote scatter.png, scatter.svg, metrics.csv to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panoqa: viewport-free omnidirectional image quality toolkit"};
  app.require_subcommand(1);
  std::string simd = "auto";
  app.add_option("--simd", simd, "kernel backend: auto|scalar|avx2|neon");

  std::function<int()> action;

  // sample
  auto* sample = app.add_subcommand("sample", "extract prior-equator patches from an ERP image");
  std::string s_image, s_out, s_config, s_mode;
  uint64_t s_seed = 0;
  sample->add_option("--image", s_image, "input PNG")->required();
  sample->add_option("--out", s_out, "output directory")->required();
  sample->add_option("--config", s_config, "config file");
  auto* s_seed_opt = sample->add_option("--seed", s_seed, "sampling seed");
  sample->add_option("--mode", s_mode, "prior_equator|uniform_grid");
  sample->callback([&] {
    action = [&, seed_set = s_seed_opt->count() > 0] {
      return cmd_sample(s_image, s_out, s_config, s_seed, seed_set, s_mode);
    };
  });

  // score-fr
  auto* fr_cmd = app.add_subcommand("score-fr", "full-reference spherical metrics");
  std::string f_metric = "all", f_ref, f_dist;
  fr_cmd->add_option("--metric", f_metric, "all|ws-psnr|s-psnr|cpp-psnr|ws-ssim");
  fr_cmd->add_option("--ref", f_ref, "reference PNG")->required();
  fr_cmd->add_option("--dist", f_dist, "distorted PNG")->required();
  fr_cmd->callback([&] { action = [&] { return cmd_score_fr(f_metric, f_ref, f_dist); }; });

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic distortion dataset");
  std::string y_out, y_config;
  int64_t y_contents = 4, y_height = 512;
  uint64_t y_seed = 7;
  synth->add_option("--out", y_out, "output directory")->required();
  synth->add_option("--config", y_config, "config file");
  auto* y_c = synth->add_option("--contents", y_contents, "number of pristine contents");
  auto* y_h = synth->add_option("--height", y_height, "ERP height in pixels (width is 2x)");
  auto* y_s = synth->add_option("--seed", y_seed, "generation seed");
  synth->callback([&] {
    action = [&, cs = y_c->count() > 0, hs = y_h->count() > 0, ss = y_s->count() > 0] {
      return cmd_synth(y_out, y_config, y_contents, y_height, y_seed, cs, hs, ss);
    };
  });

  // train
  auto* tr = app.add_subcommand("train", "train the quality model on a manifest");
  std::string t_manifest, t_out, t_config;
  int64_t t_epochs = 0, t_batch = 0;
  double t_lr = 0.0;
  uint64_t t_seed = 0;
  tr->add_option("--manifest", t_manifest, "dataset manifest CSV")->required();
  tr->add_option("--out", t_out, "output directory")->required();
  tr->add_option("--config", t_config, "config file");
  auto* t_e = tr->add_option("--epochs", t_epochs, "training epochs");
  auto* t_b = tr->add_option("--batch", t_batch, "batch size");
  auto* t_l = tr->add_option("--lr", t_lr, "learning rate");
  auto* t_s = tr->add_option("--seed", t_seed, "run seed");
  tr->callback([&] {
    action = [&, es = t_e->count() > 0, bs = t_b->count() > 0, ls = t_l->count() > 0,
              ss = t_s->count() > 0] {
      std::map<std::string, std::string> ov;
      if (es) ov["train.epochs"] = std::to_string(t_epochs);
      if (bs) ov["train.batch_size"] = std::to_string(t_batch);
      if (ls) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", t_lr);
        ov["train.lr"] = buf;
      }
      if (ss) ov["train.seed"] = std::to_string(t_seed);
      return cmd_train(t_manifest, t_out, t_config, ov);
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "score a split and fit the logistic map");
  std::string e_ckpt, e_manifest, e_out = ".", e_split = "test";
  ev->add_option("--checkpoint", e_ckpt, "trained checkpoint")->required();
  ev->add_option("--manifest", e_manifest, "dataset manifest CSV")->required();
  ev->add_option("--out", e_out, "output directory");
  ev->add_option("--split", e_split, "train|test");
  ev->callback([&] { action = [&] { return cmd_eval(e_ckpt, e_manifest, e_out, e_split); }; });

  // report
  auto* rp = app.add_subcommand("report", "render scatter plot and metrics table");
  std::string r_report, r_summary, r_out = ".";
  rp->add_option("--report-csv", r_report, "report.csv from eval")->required();
  rp->add_option("--summary", r_summary, "summary.json from eval")->required();
  rp->add_option("--out", r_out, "output directory");
  rp->callback([&] { action = [&] { return cmd_report(r_report, r_summary, r_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    diag("usage", e.what());
    return 1;
  }

  try {
    kernels::Backend backend;
    if (!kernels::parse(simd, backend)) throw std::invalid_argument("unknown --simd: " + simd);
    kernels::select(backend);
    return action ? action() : 1;
  } catch (const data::ManifestError& e) {
    std::string msg = e.what();
    for (const auto& item : e.items) msg += "; " + item;
    diag("data", msg);
    return 2;
  } catch (const train::NumericalError& e) {
    diag("numerical", e.what());
    return 3;
  } catch (const stats::FitFailure& e) {
    diag("numerical", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    diag("data", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    diag("data", e.what());
    return 2;
  } catch (const std::exception& e) {
    diag("internal", e.what());
    return 3;
  }
}
