#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "rvos/autodiff.hpp"
#include "rvos/tensor.hpp"

namespace rvos {

using Graph = ad::Graph<double>;
using Var = ad::Var<double>;

/// Flat name → matrix parameter archive. Names are dot-namespaced
/// (`backbone.*`, `text.*`, `proj.*`, `mta.*`, `dec.*`, `mti.*`, `head.*`,
/// `block.*`, `q0`).
class ParamStore {
 public:
  void set(const std::string& name, Matrix value) { values_[name] = std::move(value); }
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  const Matrix& get(const std::string& name) const;
  Matrix& mutable_get(const std::string& name);

  const std::map<std::string, Matrix>& entries() const { return values_; }
  std::map<std::string, Matrix>& entries() { return values_; }
  std::size_t size() const { return values_.size(); }
  std::size_t scalar_count() const;

  bool operator==(const ParamStore& other) const;

  /// Binary checkpoint; see README for the byte layout.
  void save(const std::filesystem::path& path) const;
  static ParamStore load(const std::filesystem::path& path);

 private:
  std::map<std::string, Matrix> values_;
};

using Gradients = std::map<std::string, Matrix>;

/// Binds named parameters into a Graph, once per name. With `trainable` the
/// parameters become gradient leaves and `gradients()` reads them back after
/// `Graph::backward`.
class Binder {
 public:
  Binder(Graph& graph, const ParamStore& params, bool trainable)
      : graph_(graph), params_(params), trainable_(trainable) {}

  Var operator()(const std::string& name);
  Graph& graph() { return graph_; }
  const ParamStore& params() const { return params_; }
  Var constant(Matrix m) { return graph_.constant(std::move(m)); }

  Gradients gradients() const;

 private:
  Graph& graph_;
  const ParamStore& params_;
  bool trainable_;
  std::map<std::string, Var> bound_;
};

}  // namespace rvos
