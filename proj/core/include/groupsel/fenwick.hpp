#pragma once

#include <cstddef>
#include <vector>

namespace groupsel {

// Binary indexed tree over nonnegative weights with O(log n) point update
// and prefix-sum search. Weights are also kept flat so the tree can be
// rebuilt exactly, discarding accumulated rounding in the internal nodes.
template <class T>
class Fenwick {
 public:
  Fenwick() = default;

  std::size_t size() const noexcept { return weights_.size(); }

  void resize(std::size_t n) {
    weights_.resize(n, T{});
    rebuild();
  }

  T weight(std::size_t i) const { return weights_[i]; }

  void set(std::size_t i, T value) {
    const T delta = value - weights_[i];
    weights_[i] = value;
    for (std::size_t j = i + 1; j <= tree_.size(); j += j & (~j + 1)) tree_[j - 1] += delta;
  }

  T prefix(std::size_t count) const {
    T s{};
    for (std::size_t j = count; j > 0; j -= j & (~j + 1)) s += tree_[j - 1];
    return s;
  }

  T total() const { return prefix(tree_.size()); }

  // Smallest index i with prefix(i + 1) > target; size() if none. The
  // remainder target - prefix(i) is written to `residual` when given.
  std::size_t find(T target, T* residual = nullptr) const {
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 <= tree_.size()) step *= 2;
    for (; step > 0; step /= 2) {
      const std::size_t next = pos + step;
      if (next <= tree_.size() && !(target < tree_[next - 1])) {
        pos = next;
        target -= tree_[next - 1];
      }
    }
    if (residual != nullptr) *residual = target;
    return pos;
  }

  void rebuild() {
    tree_.assign(weights_.size(), T{});
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      tree_[i] += weights_[i];
      const std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
      if (parent <= tree_.size()) tree_[parent - 1] += tree_[i];
    }
  }

 private:
  std::vector<T> weights_;
  std::vector<T> tree_;
};

}  // namespace groupsel
