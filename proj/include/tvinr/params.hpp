#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "tvinr/tensor.hpp"

namespace tvinr {

/// Named parameter registry with a fixed iteration order (insertion order).
/// Optimizer state lives alongside each tensor so updates and checkpoints
/// walk one structure.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m, adam_v;
    bool trainable = true;
  };

  int add(const std::string& name, Tensor value, bool trainable = true);
  int index_of(const std::string& name) const;       // -1 if missing
  bool has(const std::string& name) const { return index_of(name) >= 0; }

  Entry& entry(int i) { return items_[i]; }
  const Entry& entry(int i) const { return items_[i]; }
  Tensor& value(const std::string& name) { return items_[require(name)].value; }
  const Tensor& value(const std::string& name) const { return items_[require(name)].value; }

  int size() const { return int(items_.size()); }
  std::size_t scalar_count() const;
  std::size_t trainable_scalar_count() const;

  void zero_grads();

 private:
  int require(const std::string& name) const;
  std::vector<Entry> items_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace tvinr
