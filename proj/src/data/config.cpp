#include "pqa/data/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace pqa::data {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Reader {
  const KvMap& kv;
  std::vector<std::string> errors;
  std::map<std::string, bool> consumed;

  explicit Reader(const KvMap& m) : kv(m) {
    for (const auto& [k, v] : m) consumed[k] = false;
  }

  const std::string* find(const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    consumed[key] = true;
    return &it->second;
  }

  void num(const std::string& key, double& out) {
    if (const std::string* s = find(key)) {
      try {
        size_t used = 0;
        out = std::stod(*s, &used);
        if (used != s->size() || !std::isfinite(out)) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        errors.push_back("bad number for " + key + ": '" + *s + "'");
      }
    }
  }
  template <class I>
  void integer(const std::string& key, I& out) {
    if (const std::string* s = find(key)) {
      try {
        size_t used = 0;
        const long long v = std::stoll(*s, &used);
        if (used != s->size()) throw std::invalid_argument("trailing");
        out = static_cast<I>(v);
      } catch (const std::exception&) {
        errors.push_back("bad integer for " + key + ": '" + *s + "'");
      }
    }
  }
  void uinteger(const std::string& key, uint64_t& out) {
    if (const std::string* s = find(key)) {
      try {
        size_t used = 0;
        out = std::stoull(*s, &used);
        if (used != s->size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        errors.push_back("bad integer for " + key + ": '" + *s + "'");
      }
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const std::string* s = find(key)) {
      if (*s == "true")
        out = true;
      else if (*s == "false")
        out = false;
      else
        errors.push_back("bad boolean for " + key + ": '" + *s + "'");
    }
  }
  void str(const std::string& key, std::string& out) {
    if (const std::string* s = find(key)) out = *s;
  }
};

}  // namespace

KvMap parse_config_text(const std::string& text) {
  KvMap kv;
  std::stringstream ss(text);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty section");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.count(full))
      throw std::invalid_argument("config: duplicate key " + full);
    kv[full] = val;
  }
  return kv;
}

KvMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string render_config(const KvMap& kv) {
  // std::map iterates sorted, so sections come out grouped and ordered.
  std::string out;
  std::string section;
  for (const auto& [full, val] : kv) {
    const size_t dot = full.rfind('.');
    const std::string sec = dot == std::string::npos ? "" : full.substr(0, dot);
    const std::string key = dot == std::string::npos ? full : full.substr(dot + 1);
    if (sec != section) {
      if (!out.empty()) out += '\n';
      out += '[' + sec + "]\n";
      section = sec;
    }
    out += key + " = " + val + '\n';
  }
  return out;
}

void save_config_file(const std::string& path, const KvMap& kv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << render_config(kv);
}

uint64_t fnv1a(const void* data, size_t n, uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t config_hash(const KvMap& kv) {
  const std::string text = render_config(kv);
  return fnv1a(text.data(), text.size());
}

KvMap to_kv(const AppConfig& cfg) {
  KvMap kv;
  kv["model.k_patches"] = std::to_string(cfg.model.k_patches);
  kv["model.embed_dim"] = std::to_string(cfg.model.embed_dim);
  kv["model.heads"] = std::to_string(cfg.model.heads);
  kv["model.hpa_groups"] = std::to_string(cfg.model.hpa_groups);
  kv["model.hpa_norm_groups"] = std::to_string(cfg.model.hpa_norm_groups);
  kv["model.deform_groups"] = std::to_string(cfg.model.deform_groups);
  kv["model.deform_kernel"] = std::to_string(cfg.model.deform_kernel);
  kv["model.network_side"] = std::to_string(cfg.model.network_side);
  kv["model.base_channels"] = std::to_string(cfg.model.base_channels);
  kv["model.freeze_backbone"] = cfg.model.freeze_backbone ? "true" : "false";
  kv["model.init_seed"] = std::to_string(cfg.model.init_seed);
  kv["model.backbone"] = cfg.model.backbone;
  kv["sampler.kappa_w"] = fmt_double(cfg.sampler.kappa_w);
  kv["sampler.kappa_h"] = fmt_double(cfg.sampler.kappa_h);
  kv["sampler.mode"] =
      cfg.sampler.mode == aps::SamplerConfig::Mode::prior_equator ? "prior_equator" : "uniform_grid";
  kv["sampler.pe_mu"] = fmt_double(cfg.sampler.pe.mu);
  kv["sampler.pe_lambda"] = fmt_double(cfg.sampler.pe.lambda_scale);
  kv["sampler.pe_theta_t"] = fmt_double(cfg.sampler.pe.theta_t);
  kv["sampler.pe_family"] =
      cfg.sampler.pe.family == aps::PriorEquatorParams::Family::gaussian ? "gaussian" : "laplace";
  kv["train.lr"] = fmt_double(cfg.train.lr);
  kv["train.batch_size"] = std::to_string(cfg.train.batch_size);
  kv["train.epochs"] = std::to_string(cfg.train.epochs);
  kv["train.train_fraction"] = fmt_double(cfg.train.train_fraction);
  kv["train.seed"] = std::to_string(cfg.train.seed);
  kv["loss.gamma"] = std::to_string(cfg.loss.gamma);
  kv["loss.omega"] = fmt_double(cfg.loss.omega);
  kv["loss.epsilon"] = fmt_double(cfg.loss.epsilon);
  kv["synth.n_contents"] = std::to_string(cfg.synth.n_contents);
  kv["synth.height"] = std::to_string(cfg.synth.height);
  kv["synth.seed"] = std::to_string(cfg.synth.seed);
  kv["eval.seed"] = std::to_string(cfg.eval_seed);
  return kv;
}

AppConfig app_config_from_kv(const KvMap& kv) {
  AppConfig cfg;
  Reader r(kv);
  r.integer("model.k_patches", cfg.model.k_patches);
  r.integer("model.embed_dim", cfg.model.embed_dim);
  r.integer("model.heads", cfg.model.heads);
  r.integer("model.hpa_groups", cfg.model.hpa_groups);
  r.integer("model.hpa_norm_groups", cfg.model.hpa_norm_groups);
  r.integer("model.deform_groups", cfg.model.deform_groups);
  r.integer("model.deform_kernel", cfg.model.deform_kernel);
  r.integer("model.network_side", cfg.model.network_side);
  r.integer("model.base_channels", cfg.model.base_channels);
  r.boolean("model.freeze_backbone", cfg.model.freeze_backbone);
  r.uinteger("model.init_seed", cfg.model.init_seed);
  r.str("model.backbone", cfg.model.backbone);
  r.num("sampler.kappa_w", cfg.sampler.kappa_w);
  r.num("sampler.kappa_h", cfg.sampler.kappa_h);
  if (const std::string* s = r.find("sampler.mode")) {
    if (*s == "prior_equator")
      cfg.sampler.mode = aps::SamplerConfig::Mode::prior_equator;
    else if (*s == "uniform_grid")
      cfg.sampler.mode = aps::SamplerConfig::Mode::uniform_grid;
    else
      r.errors.push_back("bad sampler.mode: '" + *s + "'");
  }
  r.num("sampler.pe_mu", cfg.sampler.pe.mu);
  r.num("sampler.pe_lambda", cfg.sampler.pe.lambda_scale);
  r.num("sampler.pe_theta_t", cfg.sampler.pe.theta_t);
  if (const std::string* s = r.find("sampler.pe_family")) {
    if (*s == "gaussian")
      cfg.sampler.pe.family = aps::PriorEquatorParams::Family::gaussian;
    else if (*s == "laplace")
      cfg.sampler.pe.family = aps::PriorEquatorParams::Family::laplace;
    else
      r.errors.push_back("bad sampler.pe_family: '" + *s + "'");
  }
  r.num("train.lr", cfg.train.lr);
  r.integer("train.batch_size", cfg.train.batch_size);
  r.integer("train.epochs", cfg.train.epochs);
  r.num("train.train_fraction", cfg.train.train_fraction);
  r.uinteger("train.seed", cfg.train.seed);
  r.integer("loss.gamma", cfg.loss.gamma);
  r.num("loss.omega", cfg.loss.omega);
  r.num("loss.epsilon", cfg.loss.epsilon);
  r.integer("synth.n_contents", cfg.synth.n_contents);
  r.integer("synth.height", cfg.synth.height);
  r.uinteger("synth.seed", cfg.synth.seed);
  r.uinteger("eval.seed", cfg.eval_seed);

  for (const auto& [k, used] : r.consumed)
    if (!used) r.errors.push_back("unknown config key: " + k);
  if (!r.errors.empty()) {
    std::string msg = "config errors:";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  cfg.sync();
  return cfg;
}

}  // namespace pqa::data
