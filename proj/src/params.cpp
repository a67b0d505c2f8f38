#include "tvinr/params.hpp"

#include <stdexcept>

namespace tvinr {

int ParameterStore::add(const std::string& name, Tensor value, bool trainable) {
  if (index_.count(name)) throw std::logic_error("duplicate parameter " + name);
  Entry e;
  e.name = name;
  e.grad = Tensor(value.rows(), value.cols());
  if (trainable) {
    e.adam_m = Tensor(value.rows(), value.cols());
    e.adam_v = Tensor(value.rows(), value.cols());
  }
  e.value = std::move(value);
  e.trainable = trainable;
  items_.push_back(std::move(e));
  index_[name] = int(items_.size()) - 1;
  return int(items_.size()) - 1;
}

int ParameterStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

int ParameterStore::require(const std::string& name) const {
  const int i = index_of(name);
  if (i < 0) throw std::logic_error("unknown parameter " + name);
  return i;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : items_) n += e.value.size();
  return n;
}

std::size_t ParameterStore::trainable_scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : items_)
    if (e.trainable) n += e.value.size();
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& e : items_) e.grad.zero();
}

}  // namespace tvinr
