#pragma once

#include <cstdint>
#include <vector>

namespace pchaos {

// Shared factorial / binomial table. Every combinatorial coefficient in the
// library (product formula, moment formulas, derivative bounds) goes through here.
double factorial(int k);
double binom(int n, int k);

// Set partitions of {0, ..., q-1}; each partition is a list of blocks.
using Block = std::vector<int>;
using Partition = std::vector<Block>;
const std::vector<Partition>& set_partitions(int q);

// All permutations of {0, ..., q-1} in lexicographic order.
const std::vector<std::vector<int>>& permutations(int q);

constexpr int kMaxOrder = 12;

}  // namespace pchaos
