#include "pqa/data/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "pqa/data/config.hpp"

namespace pqa::data {

namespace {

constexpr char kMagic[8] = {'P', 'Q', 'A', 'C', 'K', 'P', 'T', '\0'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_str(std::ostream& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

std::string get_str(std::istream& in) {
  const auto n = get<uint32_t>(in);
  if (n > (1u << 20)) throw std::runtime_error("checkpoint: implausible string length");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  put<uint32_t>(out, ck.version);
  put<uint64_t>(out, ck.rng_state);
  put<int64_t>(out, ck.epoch);
  put<uint32_t>(out, static_cast<uint32_t>(ck.config_kv.size()));
  for (const auto& [k, v] : ck.config_kv) {
    put_str(out, k);
    put_str(out, v);
  }
  put<uint32_t>(out, static_cast<uint32_t>(ck.tensors.size()));
  for (const auto& [name, t] : ck.tensors) {
    put_str(out, name);
    put<uint8_t>(out, 0);  // dtype tag: f32
    put<uint32_t>(out, static_cast<uint32_t>(t.shape().size()));
    for (int64_t d : t.shape()) put<int64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(t.numel())));
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  Checkpoint ck;
  ck.version = get<uint32_t>(in);
  if (ck.version != 1) throw std::runtime_error("unsupported checkpoint version");
  ck.rng_state = get<uint64_t>(in);
  ck.epoch = get<int64_t>(in);
  const auto n_cfg = get<uint32_t>(in);
  for (uint32_t i = 0; i < n_cfg; ++i) {
    std::string k = get_str(in);
    std::string v = get_str(in);
    ck.config_kv[k] = v;
  }
  const auto n_tensors = get<uint32_t>(in);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = get_str(in);
    const auto dtype = get<uint8_t>(in);
    if (dtype != 0) throw std::runtime_error("checkpoint: unsupported dtype for " + name);
    const auto ndim = get<uint32_t>(in);
    if (ndim > 8) throw std::runtime_error("checkpoint: implausible rank for " + name);
    std::vector<int64_t> shape(ndim);
    for (auto& d : shape) d = get<int64_t>(in);
    Tensor<float> t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(t.numel())));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor " + name);
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

std::string checkpoint_id(const Checkpoint& ck) {
  uint64_t h = 14695981039346656037ull;
  for (const auto& [name, t] : ck.tensors) {
    h = fnv1a(name.data(), name.size(), h);
    h = fnv1a(t.data(), sizeof(float) * static_cast<size_t>(t.numel()), h);
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pqa::data
