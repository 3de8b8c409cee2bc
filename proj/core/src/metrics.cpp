#include "dpdlgmm/metrics.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>

namespace dpdlgmm {

namespace {

void check_same_size(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("labelings differ in length");
}

double choose2(double n) { return 0.5 * n * (n - 1.0); }

// Dense relabeling of arbitrary int labels.
std::vector<int> compact(std::span<const int> labels, int& count) {
  std::map<int, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int v : labels) out.push_back(ids.emplace(v, static_cast<int>(ids.size())).first->second);
  count = static_cast<int>(ids.size());
  return out;
}

}  // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  check_same_size(a, b);
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  int ka = 0, kb = 0;
  const auto ca = compact(a, ka);
  const auto cb = compact(b, kb);
  std::vector<double> table(static_cast<size_t>(ka) * kb, 0.0), rows(ka, 0.0), cols(kb, 0.0);
  for (size_t i = 0; i < ca.size(); ++i) {
    table[static_cast<size_t>(ca[i]) * kb + cb[i]] += 1.0;
    rows[ca[i]] += 1.0;
    cols[cb[i]] += 1.0;
  }
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (double v : table) index += choose2(v);
  for (double v : rows) sum_rows += choose2(v);
  for (double v : cols) sum_cols += choose2(v);
  const double expected = sum_rows * sum_cols / choose2(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both labelings trivial
  return (index - expected) / (max_index - expected);
}

std::vector<int> hungarian_max(const std::vector<std::vector<double>>& score) {
  const int rows = static_cast<int>(score.size());
  if (rows == 0) return {};
  const int cols = static_cast<int>(score.front().size());
  for (const auto& r : score)
    if (static_cast<int>(r.size()) != cols) throw std::invalid_argument("ragged score matrix");
  const int n = std::max(rows, cols);
  double top = 0.0;
  for (const auto& r : score)
    for (double v : r) top = std::max(top, v);
  // Square cost matrix, 1-based, padded with zero-score entries.
  std::vector<std::vector<double>> cost(n + 1, std::vector<double>(n + 1, top));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) cost[i + 1][j + 1] = top - score[i][j];

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0][j] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(rows, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] >= 1 && p[j] <= rows && j <= cols) assignment[p[j] - 1] = j - 1;
  }
  return assignment;
}

double matched_accuracy(std::span<const int> predicted, std::span<const int> truth,
                        std::vector<int>* mapping) {
  check_same_size(predicted, truth);
  if (predicted.empty()) return 1.0;
  int max_pred = 0, max_true = 0;
  for (int v : predicted) {
    if (v < 0) throw std::invalid_argument("negative cluster index");
    max_pred = std::max(max_pred, v);
  }
  for (int v : truth) {
    if (v < 0) throw std::invalid_argument("negative class index");
    max_true = std::max(max_true, v);
  }
  std::vector<std::vector<double>> counts(max_pred + 1, std::vector<double>(max_true + 1, 0.0));
  for (size_t i = 0; i < predicted.size(); ++i) counts[predicted[i]][truth[i]] += 1.0;
  const auto assign = hungarian_max(counts);
  double hits = 0.0;
  for (size_t c = 0; c < assign.size(); ++c)
    if (assign[c] >= 0) hits += counts[c][assign[c]];
  if (mapping) *mapping = assign;
  return hits / static_cast<double>(predicted.size());
}

double accuracy(std::span<const int> a, std::span<const int> b) {
  check_same_size(a, b);
  if (a.empty()) return 1.0;
  size_t same = 0;
  for (size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

}  // namespace dpdlgmm
