#pragma once

#include <utility>
#include <vector>

#include "cpl/config.hpp"

namespace cpl {

// Dispatches on spec.kind.
Config sample(const ModelSpec& spec);

// Site x is occupied iff U(seed, x) < u, so configurations at different u are
// nested when they share a seed.
Config sample_bernoulli(const ModelSpec& spec);

// Zero-mean Gaussian field on the torus with covariance equal to the Green
// function of I - P (P the simple random walk), zero mode removed.
std::vector<double> sample_gff_field(const ModelSpec& spec);
Config sample_gff_level_set(const ModelSpec& spec);
// Superlevel set {phi >= h} of a sampled field.
Config level_set(const std::vector<double>& field, const ModelSpec& spec, double h);

// Trace of a torus random walk of floor(u N^d) steps from a uniform start;
// vacant-interlacement returns the complement.
Config sample_interlacement(const ModelSpec& spec);

// Two configurations from one random source: (config at u_low, config at u_high).
std::pair<Config, Config> coupled_pair(const ModelSpec& spec, double u_low, double u_high);

struct EtaEstimate {
  double value = 0;
  double std_error = 0;
  int replicas = 0;
};

// Fraction of replicas in which the origin lies in the largest component of the window.
EtaEstimate estimate_eta(const ModelSpec& spec, int replicas, int threads = 1);

// Torus Green function G(0, x) of I - P with the zero mode removed, by spectral sum.
double torus_green(const Window& w, const Point& x);

}  // namespace cpl
