#pragma once

#include <optional>
#include <vector>

#include "bibc/errors.hpp"
#include "bibc/numerics.hpp"

namespace bibc {

/// (s, a, r, s') transition. `terminal` marks the last step of an episode;
/// the following state belongs to an independent channel draw, so targets do
/// not bootstrap across it.
template <class Action>
struct Experience {
  RealVector s;
  Action a;
  double r = 0.0;
  RealVector s_next;
  bool terminal = false;
};

/// Fixed-capacity FIFO store with uniform sampling without replacement.
template <class Action>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ParameterError("ReplayBuffer: capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool ready(std::size_t batch) const { return batch > 0 && items_.size() >= batch; }

  /// Appends, evicting the oldest entry once full.
  void push(Experience<Action> e) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(e));
    } else {
      items_[head_] = std::move(e);
      head_ = (head_ + 1) % capacity_;
    }
  }

  /// Entry by age, 0 = oldest.
  const Experience<Action>& at(std::size_t age) const {
    if (age >= items_.size()) throw ParameterError("ReplayBuffer::at: index out of range");
    return items_[(head_ + age) % items_.size()];
  }

  /// L distinct ages drawn uniformly (Floyd's algorithm); nullopt while the
  /// buffer holds fewer than L entries.
  std::optional<std::vector<std::size_t>> sample_indices(std::size_t batch, SeededRng& rng) const {
    if (!ready(batch)) return std::nullopt;
    const std::size_t n = items_.size();
    std::vector<std::size_t> picked;
    picked.reserve(batch);
    for (std::size_t j = n - batch; j < n; ++j) {
      const std::size_t t = rng.index(j + 1);
      const bool seen = std::find(picked.begin(), picked.end(), t) != picked.end();
      picked.push_back(seen ? j : t);
    }
    return picked;
  }

  std::optional<std::vector<const Experience<Action>*>> sample(std::size_t batch,
                                                                SeededRng& rng) const {
    auto idx = sample_indices(batch, rng);
    if (!idx) return std::nullopt;
    std::vector<const Experience<Action>*> out;
    out.reserve(idx->size());
    for (std::size_t i : *idx) out.push_back(&at(i));
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Experience<Action>> items_;
  std::size_t head_ = 0;  // oldest slot once the buffer is full
};

/// Column-stacked minibatch for continuous actions.
struct ContinuousBatch {
  RealMatrix s;       // D_s x L
  RealMatrix a;       // D_a x L
  RealVector r;       // L
  RealMatrix s_next;  // D_s x L
  RealVector not_done;  // 1 unless terminal
  Eigen::Index size() const { return r.size(); }
};

inline ContinuousBatch stack_batch(const std::vector<const Experience<RealVector>*>& items) {
  const Eigen::Index L = static_cast<Eigen::Index>(items.size());
  if (L == 0) throw ParameterError("stack_batch: empty minibatch");
  const Eigen::Index ds = items.front()->s.size();
  const Eigen::Index da = items.front()->a.size();
  ContinuousBatch b{RealMatrix(ds, L), RealMatrix(da, L), RealVector(L), RealMatrix(ds, L),
                    RealVector(L)};
  for (Eigen::Index j = 0; j < L; ++j) {
    const auto& e = *items[static_cast<std::size_t>(j)];
    b.s.col(j) = e.s;
    b.a.col(j) = e.a;
    b.r[j] = e.r;
    b.s_next.col(j) = e.s_next;
    b.not_done[j] = e.terminal ? 0.0 : 1.0;
  }
  return b;
}

}  // namespace bibc
