#pragma once

#include <cstddef>
#include <vector>

namespace muir {

double mean(const std::vector<double>& xs);
double median(std::vector<double> xs);
double stddev(const std::vector<double>& xs);       // sample (n-1)
double stderr_mean(const std::vector<double>& xs);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct MannWhitneyResult {
    double u = 0.0;         // U statistic of the first sample
    double p_two_sided = 1.0;
    bool exact = false;     // exact enumeration vs normal approximation
};

// Two-sided Mann-Whitney U. Exact distribution (no ties, n1*n2 <= 400) by
// the standard counting recurrence; otherwise normal approximation with tie
// correction. Undefined (p = NaN) when either sample is empty.
MannWhitneyResult mann_whitney(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace muir
