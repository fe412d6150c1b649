#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "memkit/tasks/tasks.hpp"

namespace memkit::harness {

enum class MetricKind { BitError, BitAccuracy, SeqAccuracy, Nld, PrecisionAtK, Mse };

MetricKind parse_metric(const std::string& name);
std::string to_string(MetricKind kind);

// Wrong bits on masked rows, prediction thresholded at 0.5.
double bit_error(const tasks::Rows& pred, const tasks::Rows& target, const std::vector<double>& mask);
// 1 - wrong bits / masked bits.
double bit_accuracy(const tasks::Rows& pred, const tasks::Rows& target, const std::vector<double>& mask);

// Correct positions over the target length; missing predictions count wrong.
double seq_accuracy(const std::vector<int>& pred, const std::vector<int>& target);
std::size_t levenshtein(const std::vector<int>& a, const std::vector<int>& b);
// Levenshtein distance over the longer length; two empty sequences give 0.
double nld(const std::vector<int>& pred, const std::vector<int>& target);

// Fraction of the k highest scored candidates that are relevant.
double precision_at_k(const std::vector<double>& scores, const std::vector<int>& relevant, std::size_t k);

double mse(const tasks::Rows& pred, const tasks::Rows& target, const std::vector<double>& mask);

struct Summary {
  double mean = 0.0, sd = 0.0;
  std::size_t n = 0;
};
// Sample standard deviation; sd is 0 for n < 2.
Summary summarize(const std::vector<double>& values);

}  // namespace memkit::harness
