#include "pchaos/combinatorics.hpp"

#include <algorithm>
#include <array>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace pchaos {

namespace {

std::array<double, 2 * kMaxOrder + 2> make_factorials() {
  std::array<double, 2 * kMaxOrder + 2> t{};
  t[0] = 1.0;
  for (std::size_t k = 1; k < t.size(); ++k) t[k] = t[k - 1] * static_cast<double>(k);
  return t;
}

void extend(int q, int next, Partition& cur, std::vector<Partition>& out) {
  if (next == q) {
    out.push_back(cur);
    return;
  }
  // Index loop: the recursion appends to `cur`, which would invalidate references.
  for (std::size_t i = 0; i < cur.size(); ++i) {
    cur[i].push_back(next);
    extend(q, next + 1, cur, out);
    cur[i].pop_back();
  }
  cur.push_back({next});
  extend(q, next + 1, cur, out);
  cur.pop_back();
}

}  // namespace

double factorial(int k) {
  static const auto table = make_factorials();
  if (k < 0 || static_cast<std::size_t>(k) >= table.size())
    throw std::out_of_range("factorial: argument out of table range");
  return table[static_cast<std::size_t>(k)];
}

double binom(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  return factorial(n) / (factorial(k) * factorial(n - k));
}

const std::vector<Partition>& set_partitions(int q) {
  static std::array<std::vector<Partition>, kMaxOrder + 1> cache;
  static std::array<std::once_flag, kMaxOrder + 1> flags;
  if (q < 0 || q > kMaxOrder) throw std::out_of_range("set_partitions: order out of range");
  std::call_once(flags[static_cast<std::size_t>(q)], [q] {
    Partition cur;
    extend(q, 0, cur, cache[static_cast<std::size_t>(q)]);
  });
  return cache[static_cast<std::size_t>(q)];
}

const std::vector<std::vector<int>>& permutations(int q) {
  static std::array<std::vector<std::vector<int>>, 9> cache;
  static std::array<std::once_flag, 9> flags;
  if (q < 0 || q > 8) throw std::out_of_range("permutations: order out of range");
  std::call_once(flags[static_cast<std::size_t>(q)], [q] {
    std::vector<int> p(static_cast<std::size_t>(q));
    std::iota(p.begin(), p.end(), 0);
    auto& out = cache[static_cast<std::size_t>(q)];
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
  });
  return cache[static_cast<std::size_t>(q)];
}

}  // namespace pchaos
