#pragma once

namespace heavytail {

// Standard normal CDF and its inverse. The inverse uses a rational
// first pass refined with Halley steps against std::erfc, accurate to
// full double precision over (0,1).
double normal_cdf(double x);
double normal_quantile(double p);

// Regularized incomplete gamma P(a,x) and Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Regularized incomplete beta I_x(a,b).
double inc_beta(double a, double b, double x);

// Survival of |T| for Student t with df degrees of freedom:
// P{|T| >= t} = I_{df/(df+t^2)}(df/2, 1/2).
double student_t_abs_survival(double df, double t);

// Upper-tail p-value of a chi-square statistic with df degrees of freedom.
double chi_square_sf(double stat, double df);

} // namespace heavytail
