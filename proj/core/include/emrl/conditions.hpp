#pragma once

#include "emrl/market.hpp"

#include <optional>
#include <ostream>

namespace emrl {

// f(q) for the constrained exploration bound; -inf when the Gaussian mass underflows.
double f_ab(double q, double m, double mu_excess, double a, double b);

// 2m ln Z alone, i.e. the constraint part of f_ab.
double f_ab_log_mass(double q, double m, double mu_excess, double a, double b);

// Zero-temperature limit of f_ab_log_mass.
double f_ab_log_mass_limit(double q, double mu_excess, double a, double b);

// sup of mu - r over [y_lo, y_hi].
double mu_excess_bar(const MarketParams& p, double y_lo = 0.0, double y_hi = 1.0);

// sup of sigma^2 over [y_lo, y_hi].
double sup_sigma2(const MarketParams& p, double y_lo = 0.0, double y_hi = 1.0);

struct CondI {
    double value;
    bool pass;
};

CondI check_condition_i(const MarketParams& p, double mu_bar);

// Smallest root of f_ab above eta sigma*^2; nullopt when there is no sign change below q_hi.
std::optional<double> find_q0(const MarketParams& p, double mu_bar, double q_hi = 1e6);

bool check_condition_ii(const MarketParams& p, std::optional<double> q0, double sup_s2);

double psi_bound(const MarketParams& p, double mu_bar);

struct ConditionReport {
    double mu_excess_bar = 0.0;
    double cond_i_value = 0.0;
    bool cond_i_pass = false;
    std::optional<double> q0;
    std::optional<double> q0_over_eta;
    double sup_sigma2 = 0.0;
    bool cond_ii_pass = false;
    double psi_bound = 0.0;
};

ConditionReport check_conditions(const MarketParams& p, double y_lo = 0.0, double y_hi = 1.0);

void print_report(std::ostream& os, const ConditionReport& r);
void write_report_csv(std::ostream& os, const ConditionReport& r);

} // namespace emrl
