#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocean/inventory.hpp"
#include "ocean/traits.hpp"

namespace ocean::metrics {

class DegenerateInput : public std::runtime_error {
  public:
    explicit DegenerateInput(const std::string& why) : std::runtime_error("degenerate input: " + why) {}
};

class LengthMismatch : public std::runtime_error {
  public:
    LengthMismatch() : std::runtime_error("input lengths differ") {}
};

class TooFewValues : public std::runtime_error {
  public:
    explicit TooFewValues(std::size_t n)
        : std::runtime_error("need at least 4 values, got " + std::to_string(n)) {}
};

class DegenerateExpectation : public std::runtime_error {
  public:
    DegenerateExpectation() : std::runtime_error("no expected disagreement mass") {}
};

struct CorrelationResult {
    double r = 0;
    double p = 1;
    std::size_t n = 0;
    std::string stars;
};

enum class KappaWeighting { linear, unweighted };

struct OutlierSummary {
    double q1 = 0, q3 = 0, iqr = 0;
    double lower_fence = 0, upper_fence = 0;
    std::vector<std::size_t> outlier_indices;  // positions in the input order
};

// Pearson r with a two-tailed p from the exact t relation
// t = r * sqrt((n-2)/(1-r^2)) against Student t with n-2 df.
CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y);

// strict thresholds: *** p<0.001, ** p<0.01, * p<0.05, otherwise empty
std::string assign_stars(double p);

double mae(const std::vector<double>& x, const std::vector<double>& y);

// rows = respondents, columns = items; sample (n-1) variances
double cronbach_alpha(const std::vector<std::vector<double>>& matrix);

// two aligned runs of 5-point answers; 1.0 by convention when both runs are
// constant and equal (no expected disagreement mass)
double weighted_kappa(const std::vector<int>& run_a, const std::vector<int>& run_b,
                      KappaWeighting weighting);

// quantiles by linear interpolation with p(k) = (k-1)/(n-1); values strictly
// outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR] are flagged
OutlierSummary iqr_outliers(const std::vector<double>& values);

// per-domain mean linear-weighted kappa over all unordered run pairs and the
// domain's items, item responses concatenated across sessions (answers present
// in both runs only)
struct RetestKappas {
    std::map<Domain, double> by_domain;
    double avg = 0;
};
RetestKappas test_retest(const std::vector<std::vector<inventory::ResponseSheet>>& runs,
                         const inventory::Instrument& instrument,
                         KappaWeighting weighting = KappaWeighting::linear);

// exposed for the reference tests
double regularized_incomplete_beta(double a, double b, double x);
double student_t_two_tailed_p(double t, double df);

}  // namespace ocean::metrics
