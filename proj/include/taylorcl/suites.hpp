#pragma once

// Ready-made collections of theory checks. Each suite returns one CheckRecord
// per inequality instance plus a JSON block of the constants it used.

#include "taylorcl/record.hpp"
#include "taylorcl/theory.hpp"

#include <string>
#include <vector>

namespace taylorcl {

struct SuiteResult {
  std::string name;
  std::vector<CheckRecord> records;
  Json info = Json::object();
};

/// Slope scan of the two-task construction for every (delta, rho) pair on a
/// uniform grid of [0, 1]. One record per violated grid point (satisfied when
/// the two slopes have opposite signs) and one per pair asserting that the
/// violation set is non-empty.
SuiteResult prop1_suite(const std::vector<double>& values = {0.5, 1.0, 2.0}, Index grid_points = 1001);

/// Gradient-gap, value-gap and descent checks on the two-task construction.
SuiteResult appendix_b_suite(const std::vector<double>& values = {0.5, 1.0, 2.0}, Index grid_points = 101,
                             Index gd_steps = 200);

struct QuadraticSuiteOptions {
  Index tasks = 3;
  Index dim = 5;
  double condition_number = 10.0;
  double spread = 2.0;
  Index probes = 100;
  double probe_radius = 10.0;
  Index horizon = 10000;      // convex-rate iterations
  Index gd_steps = 1000;      // non-convex trace and descent checks
  std::uint64_t seed = 1;
};

SuiteResult quadratic_suite(const QuadraticSuiteOptions& options);

struct NeuralSuiteOptions {
  NeuralTheoryOptions problem;
  std::vector<CurvatureKind> kinds = {CurvatureKind::kronecker, CurvatureKind::diagonal_fisher,
                                      CurvatureKind::full};
  Index iterations = 100;
  Index probe_every = 10;
  Index random_probes = 10;
  double probe_radius = 0.5;
  Index restarts = 10;
  Index rho_segments = 4;
};

/// Defaults: three rotating 3-class Gaussian tasks in 4 dimensions and a
/// 4-16-3 tanh network (d = 131).
NeuralSuiteOptions default_neural_suite();

SuiteResult neural_suite(const NeuralSuiteOptions& options);

struct RademacherSuiteOptions {
  Index trials = 20;
  Index n = 200;
  Index grid = 50;
  Index population = 20000;
  Index exhaustive_n = 12;      // comparison g uses n = exhaustive_n - g
  Index exhaustive_grids = 5;
  RademacherOptions estimate;
  std::uint64_t seed = 1;
};

/// Per trial: a fresh two-class Gaussian sample and the uniform-convergence
/// check over a fixed grid of softmax-regression hypotheses. Also compares
/// Monte Carlo and exhaustive loss complexities on small samples.
SuiteResult rademacher_suite(const RademacherSuiteOptions& options);

}  // namespace taylorcl
