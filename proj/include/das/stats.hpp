#pragma once

#include <vector>

namespace das {

// Linear-interpolation quantile (the usual "type 7" definition); q in [0, 1].
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

struct Summary {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double iqr() const { return q75 - q25; }
};

Summary summarize(const std::vector<double>& values);

}  // namespace das
