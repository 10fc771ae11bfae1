// speak/core/checkpoint.hpp

// Copyright 2026  The SPEAK Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SPEAK_CORE_CHECKPOINT_HPP_
#define SPEAK_CORE_CHECKPOINT_HPP_

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "speak/core/adam.hpp"
#include "speak/core/errors.hpp"
#include "speak/core/nn.hpp"
#include "speak/core/tensor.hpp"

namespace speak {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

// Flat training snapshot. Arrays sit in a sorted map so serialization is
// byte-deterministic: save(load(f)) reproduces f exactly. Parameter arrays
// are keyed "param.<name>", optimizer state "opt.<label>.{m,v,t}.<name>".
template <class T>
struct Checkpoint {
  std::string stage;
  std::string config_json;
  int64_t step = 0;
  uint64_t rng_state = 0;
  std::map<std::string, Tensor<T>> arrays;
};

namespace ckpt_detail {

inline constexpr char kMagic[8] = {'S', 'P', 'E', 'A', 'K', 'C', 'K', '1'};

template <class V>
void put(std::string& out, V v) {
  char buf[sizeof(V)];
  std::memcpy(buf, &v, sizeof(V));
  out.append(buf, sizeof(V));
}

inline void put_str(std::string& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.append(s);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  template <class V>
  V get() {
    if (pos + sizeof(V) > buf.size()) throw IoError("truncated checkpoint");
    V v;
    std::memcpy(&v, buf.data() + pos, sizeof(V));
    pos += sizeof(V);
    return v;
  }

  std::string get_str() {
    const uint32_t n = get<uint32_t>();
    if (pos + n > buf.size()) throw IoError("truncated checkpoint");
    std::string s(buf.data() + pos, n);
    pos += n;
    return s;
  }
};

}  // namespace ckpt_detail

template <class T>
void save_checkpoint(const std::string& path, const Checkpoint<T>& ck) {
  using namespace ckpt_detail;
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<uint8_t>(out, static_cast<uint8_t>(sizeof(T)));
  put<int64_t>(out, ck.step);
  put<uint64_t>(out, ck.rng_state);
  put_str(out, ck.stage);
  put_str(out, ck.config_json);
  put<uint64_t>(out, ck.arrays.size());
  for (const auto& [name, arr] : ck.arrays) {
    put_str(out, name);
    put<uint32_t>(out, static_cast<uint32_t>(arr.shape.size()));
    for (index_t d : arr.shape) put<int64_t>(out, d);
    put<uint64_t>(out, static_cast<uint64_t>(arr.numel()));
    out.append(reinterpret_cast<const char*>(arr.data()), arr.numel() * sizeof(T));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write on checkpoint: " + path);
}

template <class T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  using namespace ckpt_detail;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r{buf};
  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw ValidationError("not a checkpoint file: " + path);
  r.pos = sizeof(kMagic);
  const uint8_t dtype = r.get<uint8_t>();
  if (dtype != sizeof(T))
    throw ValidationError("checkpoint dtype width " + std::to_string(dtype) +
                          " does not match requested width " + std::to_string(sizeof(T)));
  Checkpoint<T> ck;
  ck.step = r.get<int64_t>();
  ck.rng_state = r.get<uint64_t>();
  ck.stage = r.get_str();
  ck.config_json = r.get_str();
  const uint64_t count = r.get<uint64_t>();
  for (uint64_t i = 0; i < count; ++i) {
    const std::string name = r.get_str();
    const uint32_t ndim = r.get<uint32_t>();
    Shape shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = r.get<int64_t>();
    const uint64_t numel = r.get<uint64_t>();
    Tensor<T> arr = Tensor<T>::zeros(shape);
    if (static_cast<uint64_t>(arr.numel()) != numel)
      throw ValidationError("checkpoint array '" + name + "' count disagrees with its shape");
    if (r.pos + numel * sizeof(T) > buf.size()) throw IoError("truncated checkpoint");
    std::memcpy(arr.data(), buf.data() + r.pos, numel * sizeof(T));
    r.pos += numel * sizeof(T);
    ck.arrays.emplace(name, std::move(arr));
  }
  if (r.pos != buf.size()) throw ValidationError("trailing bytes in checkpoint: " + path);
  return ck;
}

template <class T>
void pack_params(Checkpoint<T>& ck, const ParamStore<T>& ps) {
  for (const std::string& name : ps.names())
    ck.arrays["param." + name] = ps.at(name).val().clone();
}

// Copies values in place so optimizer entries aliasing the same Vars see the
// restored weights. With require_all every store parameter must be present.
template <class T>
size_t restore_params(ParamStore<T>& ps, const Checkpoint<T>& ck, bool require_all,
                      const std::string& prefix = "") {
  size_t loaded = 0;
  for (const std::string& name : ps.names()) {
    if (!prefix.empty() && name.rfind(prefix, 0) != 0) continue;
    auto it = ck.arrays.find("param." + name);
    if (it == ck.arrays.end()) {
      if (require_all) throw ValidationError("checkpoint missing parameter: " + name);
      continue;
    }
    Tensor<T>& dst = ps.at(name).value_mut();
    if (it->second.shape != dst.shape)
      throw ValidationError("checkpoint parameter '" + name + "' has shape " +
                            shape_str(it->second.shape) + ", model expects " +
                            shape_str(dst.shape));
    std::copy(it->second.data(), it->second.data() + dst.numel(), dst.data());
    ++loaded;
  }
  return loaded;
}

template <class T>
void pack_adam(Checkpoint<T>& ck, const Adam<T>& opt, const std::string& label) {
  for (const auto& e : opt.entries()) {
    ck.arrays["opt." + label + ".m." + e.name] = e.m.clone();
    ck.arrays["opt." + label + ".v." + e.name] = e.v.clone();
    ck.arrays["opt." + label + ".t." + e.name] =
        Tensor<T>::full({1}, static_cast<T>(e.t));
  }
}

template <class T>
void restore_adam(Adam<T>& opt, const Checkpoint<T>& ck, const std::string& label) {
  for (auto& e : opt.entries()) {
    const auto m = ck.arrays.find("opt." + label + ".m." + e.name);
    const auto v = ck.arrays.find("opt." + label + ".v." + e.name);
    const auto t = ck.arrays.find("opt." + label + ".t." + e.name);
    if (m == ck.arrays.end() || v == ck.arrays.end() || t == ck.arrays.end())
      throw ValidationError("checkpoint missing optimizer state for: " + e.name);
    if (m->second.shape != e.m.shape || v->second.shape != e.v.shape)
      throw ValidationError("optimizer state shape mismatch for: " + e.name);
    std::copy(m->second.data(), m->second.data() + e.m.numel(), e.m.data());
    std::copy(v->second.data(), v->second.data() + e.v.numel(), e.v.data());
    e.t = static_cast<int64_t>(t->second[0]);
  }
}

}  // namespace speak

#endif  // SPEAK_CORE_CHECKPOINT_HPP_
