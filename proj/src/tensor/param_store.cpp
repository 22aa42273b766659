#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "nfce/param_store.hpp"

namespace nfce::ad {
namespace {

constexpr std::array<char, 4> kMagic{'N', 'F', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename V>
void put(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::istream& in, const std::string& file) {
  V v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(V))) throw std::runtime_error(file + ": truncated checkpoint");
  return v;
}

}  // namespace

template <typename T>
Tensor<T>& ParamStore<T>::add(const std::string& path, Tensor<T> value) {
  if (path.empty()) throw std::invalid_argument("ParamStore: empty parameter path");
  if (!value.defined()) throw std::invalid_argument("ParamStore: undefined tensor for " + path);
  if (index_.count(path)) throw std::invalid_argument("ParamStore: duplicate parameter path " + path);
  value.node()->requires_grad = true;
  value.node()->is_leaf = true;
  index_.emplace(path, params_.size());
  paths_.push_back(path);
  params_.push_back(std::move(value));
  return params_.back();
}

template <typename T>
Tensor<T>& ParamStore<T>::at(const std::string& path) {
  auto it = index_.find(path);
  if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter " + path);
  return params_[it->second];
}

template <typename T>
const Tensor<T>& ParamStore<T>::at(const std::string& path) const {
  auto it = index_.find(path);
  if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter " + path);
  return params_[it->second];
}

template <typename T>
std::size_t ParamStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.numel();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
void sgd_momentum_step(ParamStore<T>& store, T lr, T momentum, T weight_decay) {
  auto& params = store.tensors();
  auto& buffers = store.momentum();
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i].has_grad())
      throw std::logic_error("sgd_momentum_step: parameter " + store.paths()[i] + " has no gradient");
  if (buffers.size() != params.size()) buffers.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].data();
    auto g = params[i].grad();
    auto& v = buffers[i];
    if (v.size() != w.size()) v.assign(w.size(), T(0));
    for (std::size_t j = 0; j < w.size(); ++j) {
      const T gj = g[j] + weight_decay * w[j];
      v[j] = momentum * v[j] + gj;
      w[j] -= lr * v[j];
    }
  }
}

template <typename T>
void save_checkpoint(const ParamStore<T>& store, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + file.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, sizeof(T));
  put<std::uint64_t>(out, store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& path = store.paths()[i];
    const auto& t = store.tensors()[i];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(path.size()));
    out.write(path.data(), static_cast<std::streamsize>(path.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) put<std::uint64_t>(out, e);
    out.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.numel() * sizeof(T)));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + file.string());
}

template <typename T>
void load_checkpoint(ParamStore<T>& store, const std::filesystem::path& file) {
  const std::string name = file.string();
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + name);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error(name + ": not an NFPT checkpoint");
  if (get<std::uint32_t>(in, name) != kVersion) throw std::runtime_error(name + ": unsupported checkpoint version");
  if (get<std::uint32_t>(in, name) != sizeof(T))
    throw std::runtime_error(name + ": scalar size differs from the running precision");
  const auto count = get<std::uint64_t>(in, name);
  if (count != store.size())
    throw std::runtime_error(name + ": " + std::to_string(count) + " records, network has " +
                             std::to_string(store.size()) + " parameters");
  for (std::uint64_t r = 0; r < count; ++r) {
    std::string path(get<std::uint32_t>(in, name), '\0');
    in.read(path.data(), static_cast<std::streamsize>(path.size()));
    auto& t = store.at(path);
    Shape shape(get<std::uint32_t>(in, name));
    for (auto& e : shape) e = get<std::uint64_t>(in, name);
    if (shape != t.shape())
      throw std::runtime_error(name + ": " + path + " has shape " + shape_string(shape) + ", expected " +
                               shape_string(t.shape()));
    in.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(t.numel() * sizeof(T)));
    if (!in) throw std::runtime_error(name + ": truncated checkpoint");
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template void sgd_momentum_step(ParamStore<float>&, float, float, float);
template void sgd_momentum_step(ParamStore<double>&, double, double, double);
template void save_checkpoint(const ParamStore<float>&, const std::filesystem::path&);
template void save_checkpoint(const ParamStore<double>&, const std::filesystem::path&);
template void load_checkpoint(ParamStore<float>&, const std::filesystem::path&);
template void load_checkpoint(ParamStore<double>&, const std::filesystem::path&);

}  // namespace nfce::ad
