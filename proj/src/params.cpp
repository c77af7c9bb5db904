#include "rvos/params.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "rvos/errors.hpp"

namespace rvos {

namespace {

constexpr char kMagic[8] = {'R', 'V', 'O', 'S', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw LoadError("truncated checkpoint: " + path.string());
  return v;
}

}  // namespace

const Matrix& ParamStore::get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw ValidationError("missing parameter '" + name + "'");
  return it->second;
}

Matrix& ParamStore::mutable_get(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw ValidationError("missing parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : values_) n += static_cast<std::size_t>(m.size());
  return n;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (values_.size() != other.values_.size()) return false;
  for (const auto& [k, m] : values_) {
    auto it = other.values_.find(k);
    if (it == other.values_.end()) return false;
    if (m.rows() != it->second.rows() || m.cols() != it->second.cols()) return false;
    if (m != it->second) return false;
  }
  return true;
}

void ParamStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kVersion);
  write_pod<std::uint64_t>(out, values_.size());
  for (const auto& [name, m] : values_) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw LoadError("failed writing checkpoint: " + path.string());
}

ParamStore ParamStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw LoadError("not a checkpoint file: " + path.string());
  if (read_pod<std::uint32_t>(in, path) != kVersion)
    throw LoadError("unsupported checkpoint version: " + path.string());
  const auto count = read_pod<std::uint64_t>(in, path);
  ParamStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = read_pod<std::uint32_t>(in, path);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = read_pod<std::uint64_t>(in, path);
    const auto cols = read_pod<std::uint64_t>(in, path);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw LoadError("truncated checkpoint: " + path.string());
    store.set(name, std::move(m));
  }
  return store;
}

Var Binder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Matrix& m = params_.get(name);
  Var v = trainable_ ? graph_.leaf(m) : graph_.constant(m);
  bound_.emplace(name, v);
  return v;
}

Gradients Binder::gradients() const {
  Gradients out;
  for (const auto& [name, v] : bound_)
    if (v.requires_grad()) out.emplace(name, v.grad());
  return out;
}

}  // namespace rvos
