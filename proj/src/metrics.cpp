#include "ocean/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace ocean::metrics {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
    double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// continued fraction for the incomplete beta (modified Lentz)
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    double x = df / (df + t * t);
    return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw LengthMismatch();
    std::size_t n = x.size();
    if (n < 3) throw DegenerateInput("need at least 3 pairs");

    double mx = mean_of(x), my = mean_of(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("zero variance");

    double r = sxy / std::sqrt(sxx * syy);
    r = std::clamp(r, -1.0, 1.0);

    CorrelationResult out;
    out.r = r;
    out.n = n;
    if (std::fabs(r) >= 1.0) {
        out.p = 0.0;
    } else {
        double df = static_cast<double>(n - 2);
        double t = std::fabs(r) * std::sqrt(df / (1.0 - r * r));
        out.p = student_t_two_tailed_p(t, df);
    }
    out.stars = assign_stars(out.p);
    return out;
}

std::string assign_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

double mae(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw LengthMismatch();
    if (x.empty()) throw DegenerateInput("empty input");
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
}

double cronbach_alpha(const std::vector<std::vector<double>>& matrix) {
    std::size_t n = matrix.size();
    if (n < 2) throw DegenerateInput("need at least 2 respondents");
    std::size_t k = matrix[0].size();
    if (k < 2) throw DegenerateInput("need at least 2 items");
    for (const auto& row : matrix)
        if (row.size() != k) throw LengthMismatch();

    double item_var_sum = 0;
    std::vector<double> column(n), totals(n, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = matrix[i][j];
            totals[i] += matrix[i][j];
        }
        item_var_sum += sample_variance(column);
    }
    double total_var = sample_variance(totals);
    if (total_var == 0.0) throw DegenerateInput("zero total-score variance");
    double kk = static_cast<double>(k);
    return kk / (kk - 1.0) * (1.0 - item_var_sum / total_var);
}

double weighted_kappa(const std::vector<int>& run_a, const std::vector<int>& run_b,
                      KappaWeighting weighting) {
    if (run_a.size() != run_b.size()) throw LengthMismatch();
    if (run_a.empty()) throw DegenerateExpectation();

    double table[5][5] = {};
    for (std::size_t i = 0; i < run_a.size(); ++i) {
        int a = run_a[i], b = run_b[i];
        if (a < 1 || a > 5 || b < 1 || b > 5) throw std::invalid_argument("answers must be 1..5");
        table[a - 1][b - 1] += 1.0;
    }
    double n = static_cast<double>(run_a.size());
    double row[5] = {}, col[5] = {};
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            row[i] += table[i][j];
            col[j] += table[i][j];
        }

    double wo = 0, we = 0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            double w = weighting == KappaWeighting::linear ? std::fabs(i - j) / 4.0
                                                           : (i == j ? 0.0 : 1.0);
            wo += w * table[i][j];
            we += w * row[i] * col[j] / n;
        }
    if (we == 0.0) return 1.0;  // both runs constant and equal
    return 1.0 - wo / we;
}

OutlierSummary iqr_outliers(const std::vector<double>& values) {
    if (values.size() < 4) throw TooFewValues(values.size());
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    auto quantile = [&](double p) {
        double h = p * static_cast<double>(sorted.size() - 1);
        std::size_t lo = static_cast<std::size_t>(h);
        double frac = h - static_cast<double>(lo);
        if (lo + 1 >= sorted.size()) return sorted.back();
        return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
    };

    OutlierSummary out;
    out.q1 = quantile(0.25);
    out.q3 = quantile(0.75);
    out.iqr = out.q3 - out.q1;
    out.lower_fence = out.q1 - 1.5 * out.iqr;
    out.upper_fence = out.q3 + 1.5 * out.iqr;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] < out.lower_fence || values[i] > out.upper_fence)
            out.outlier_indices.push_back(i);
    return out;
}

RetestKappas test_retest(const std::vector<std::vector<inventory::ResponseSheet>>& runs,
                         const inventory::Instrument& instrument, KappaWeighting weighting) {
    if (runs.size() < 2) throw DegenerateInput("need at least 2 runs");
    std::size_t n_sessions = runs[0].size();
    for (const auto& run : runs)
        if (run.size() != n_sessions) throw LengthMismatch();

    RetestKappas out;
    double total = 0;
    for (Domain d : kDomains) {
        double sum = 0;
        std::size_t count = 0;
        for (std::size_t t1 = 0; t1 < runs.size(); ++t1) {
            for (std::size_t t2 = t1 + 1; t2 < runs.size(); ++t2) {
                for (const inventory::Item* item : instrument.domain_items(d)) {
                    std::vector<int> a, b;
                    for (std::size_t s = 0; s < n_sessions; ++s) {
                        auto fa = runs[t1][s].find(item->index);
                        auto fb = runs[t2][s].find(item->index);
                        if (fa == runs[t1][s].end() || fb == runs[t2][s].end()) continue;
                        a.push_back(fa->second);
                        b.push_back(fb->second);
                    }
                    if (a.empty()) continue;
                    sum += weighted_kappa(a, b, weighting);
                    ++count;
                }
            }
        }
        if (count == 0) throw DegenerateInput("no overlapping answers for domain");
        out.by_domain[d] = sum / static_cast<double>(count);
        total += out.by_domain[d];
    }
    out.avg = total / static_cast<double>(kDomains.size());
    return out;
}

}  // namespace ocean::metrics
