#pragma once

// Task families: synthetic quadratics with closed-form optima, rotating
// Gaussian-mixture classification, and permuted / rotated image tasks built
// from an IDX-format pool.

#include "taylorcl/linalg.hpp"
#include "taylorcl/mlp.hpp"
#include "taylorcl/objective.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace taylorcl {

struct TaskDataset {
  Batch train;
  Batch test;
  Batch population;  // large held-out sample standing in for the data distribution
  std::string descriptor;
};

/// L(w) = 1/2 (w - m)^T A (w - m) + offset.
struct QuadraticTask {
  Matrix hessian;
  Vector minimizer;
  double offset = 0.0;

  QuadraticObjective objective() const { return {hessian, minimizer, offset}; }
};

/// Random PSD Hessians with eigenvalues log-uniform in [1, condition_number]
/// (both ends included when dim >= 2). Minimizers sit on a randomly rotated
/// regular simplex with pairwise distance `minima_spread` when dim >= tasks - 1,
/// otherwise on a line with consecutive spacing `minima_spread`. For dim == 1
/// the minimizers are sorted ascending and centered, so two tasks with spread
/// 2 give {-1, +1}.
std::vector<QuadraticTask> gen_quadratic_suite(Index tasks, Index dim, double condition_number,
                                               double minima_spread, std::uint64_t seed);

/// Applies one pixel permutation to every split. Seed 0 is the identity.
TaskDataset permute_task(const TaskDataset& base, std::uint64_t seed);
std::vector<Index> pixel_permutation(Index size, std::uint64_t seed);

/// Rotates square images (rows of `images`) counterclockwise by
/// `angle_degrees` about the image center with bilinear interpolation.
/// Samples falling outside the frame read as 0; results are clamped to the
/// value range of the input.
Matrix rotate_images(const Matrix& images, double angle_degrees);
TaskDataset rotate_task(const TaskDataset& base, double angle_degrees);

class IdxError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, truncated, count_mismatch };
  IdxError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ImagePool {
  Batch examples;  // pixels scaled to [0, 1]
  Index rows = 0;
  Index cols = 0;
};

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
ImagePool load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Disjoint train / test / population splits of a shuffled pool. A
/// population size of 0 takes everything left after train and test.
TaskDataset split_pool(const ImagePool& pool, Index n_train, Index n_test, Index n_population,
                       std::uint64_t seed);

struct GaussianTaskOptions {
  Index tasks = 5;
  Index classes = 2;
  Index dim = 2;
  double rotation_step_degrees = 10.0;
  double mean_radius = 2.0;  // norm of each class mean
  double noise = 1.0;        // isotropic standard deviation
  Index n_train = 200;
  Index n_test = 200;
  Index n_population = 1000;
  std::uint64_t seed = 0;
};

/// Class-conditional Gaussians with balanced labels. Task k rotates every
/// class mean by k * rotation_step in the plane of coordinates 0 and 1.
std::vector<TaskDataset> gen_gaussian_tasks(const GaussianTaskOptions& options);

/// Class means used for task `k` (rows are classes).
Matrix gaussian_task_means(const GaussianTaskOptions& options, Index task);

}  // namespace taylorcl
