#pragma once

#include "dnnr/common.hpp"

#include <span>
#include <vector>

namespace dnnr {

double mean_squared_error(const Vector& predicted, const Vector& actual);

// 1 - SSE / SST, with SST taken around the mean of `actual`.
double r_squared(const Vector& predicted, const Vector& actual);

double pearson(std::span<const double> a, std::span<const double> b);

// Pearson correlation of average ranks (ties share their mean rank).
double spearman(std::span<const double> a, std::span<const double> b);

std::vector<double> average_ranks(std::span<const double> values);

// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

double mean(std::span<const double> values);
double sample_std(std::span<const double> values);

}  // namespace dnnr
