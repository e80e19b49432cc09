#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "cltta/labeling.hpp"
#include "cltta/numerics.hpp"

namespace cltta {

// Bounded FIFO store of past prediction rows. Per-category percentiles over
// the stored rows define the dynamic thresholds.
class MemoryBank {
public:
    explicit MemoryBank(std::size_t capacity);

    // Appends all rows in batch order, then evicts the oldest rows until
    // size <= capacity. An empty batch is a no-op.
    void push_batch(const ProbMatrix& probs);

    // theta[c] = percentile(stored c-th coordinates, t). Throws when empty;
    // callers handle cold start via policy_thresholds.
    ThresholdVector thresholds(double percentile_t) const;

    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    std::size_t capacity() const noexcept { return capacity_; }
    // 0 until the first push fixes the category count.
    std::size_t num_categories() const noexcept { return num_categories_; }
    const std::deque<std::vector<double>>& rows() const noexcept { return rows_; }

    void clear();

private:
    std::size_t capacity_;
    std::size_t num_categories_ = 0;
    std::deque<std::vector<double>> rows_;
};

struct ThresholdPolicy {
    enum class Kind { Dynamic, Fixed };

    Kind kind = Kind::Dynamic;
    // Dynamic policy: percentile t over a bank of the given capacity.
    double percentile = 75.0;
    std::size_t capacity = 200;
    // Fixed policy: constant thresholds, ignores the bank.
    ThresholdVector fixed_theta;

    static ThresholdPolicy dynamic(double t, std::size_t capacity);
    static ThresholdPolicy fixed(ThresholdVector theta0);
    static ThresholdPolicy fixed_uniform(double theta0, std::size_t num_classes);
};

// Fixed policy: returns theta0 regardless of bank state. Dynamic policy:
// bank percentiles when the bank is non-empty; on a cold start (empty bank)
// the current batch's own predictions seed the thresholds.
ThresholdVector policy_thresholds(const ThresholdPolicy& policy, const MemoryBank& bank,
                                  const ProbMatrix& current_batch);

}  // namespace cltta
