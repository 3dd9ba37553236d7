#pragma once

namespace emrl {

// Normal(alpha, beta^2) restricted to [a, b].
struct TruncNormParams {
    double alpha = 0.0;
    double beta = 1.0;
    double a = 0.0;
    double b = 1.0;
};

// Moments of the standardized variable X = (x - alpha) / beta.
struct StdTruncMoments {
    double A = 0.0, B = 0.0;
    double log_z = 0.0;      // log(Phi(B) - Phi(A))
    double mean = 0.0;
    double var = 0.0;
    double mu3 = 0.0;        // third central moment
    bool tail = false;       // one-sided tail branch was used
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

struct EntropyGrad {
    double value = 0.0;
    double d_alpha = 0.0;
};

void validate(const TruncNormParams& p);

StdTruncMoments standardized_moments(const TruncNormParams& p);

double log_normalizer(const TruncNormParams& p);
double pdf(const TruncNormParams& p, double x);
double log_pdf(const TruncNormParams& p, double x);
double cdf(const TruncNormParams& p, double x);
Moments moments(const TruncNormParams& p);
double entropy(const TruncNormParams& p);
EntropyGrad entropy_mean_grad(const TruncNormParams& p);

// Inverse-CDF draw, u in (0,1).
double sample(const TruncNormParams& p, double u);

// d/d alpha of log pdf at x.
double log_pdf_mean_grad(const TruncNormParams& p, double x);

} // namespace emrl
