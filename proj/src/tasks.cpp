#include "taylorcl/tasks.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

namespace taylorcl {

namespace {

Matrix random_orthogonal(Index n, Rng& rng) {
  Matrix g(n, n);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r) g(r, c) = rng.normal();
  const Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Sign fix so the distribution does not depend on the QR convention.
  const Matrix rr = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i)
    if (rr(i, i) < 0.0) q.col(i) *= -1.0;
  return q;
}

// Regular simplex of `count` points with pairwise distance `spread`, centered
// at the origin, expressed in count - 1 coordinates.
Matrix simplex_points(Index count, double spread) {
  if (count == 1) return Matrix::Zero(1, 0);
  Matrix corners = Matrix::Identity(count, count) * (spread / std::sqrt(2.0));
  const Eigen::RowVectorXd centroid = corners.colwise().mean();
  corners.rowwise() -= centroid;
  // Orthonormal basis of the (count - 1)-dimensional span of the centered points.
  Matrix ones_complement = Matrix::Identity(count, count);
  ones_complement.col(0).setOnes();
  const Eigen::HouseholderQR<Matrix> qr(ones_complement);
  const Matrix q = qr.householderQ();
  return corners * q.rightCols(count - 1);
}

}  // namespace

std::vector<QuadraticTask> gen_quadratic_suite(Index tasks, Index dim, double condition_number,
                                               double minima_spread, std::uint64_t seed) {
  require(tasks >= 1 && dim >= 1, "gen_quadratic_suite: need tasks >= 1 and dim >= 1");
  require(condition_number >= 1.0, "gen_quadratic_suite: condition number must be >= 1");
  require(minima_spread >= 0.0, "gen_quadratic_suite: spread must be non-negative");

  std::vector<QuadraticTask> out(static_cast<std::size_t>(tasks));
  for (Index k = 0; k < tasks; ++k) {
    Rng rng = Rng::keyed(seed, {0x9ad, static_cast<std::uint64_t>(k)});
    Vector eigenvalues(dim);
    for (Index i = 0; i < dim; ++i) eigenvalues[i] = std::pow(condition_number, rng.uniform());
    if (dim >= 2) {
      eigenvalues[0] = 1.0;
      eigenvalues[dim - 1] = condition_number;
    } else {
      eigenvalues[0] = 1.0;
    }
    const Matrix q = random_orthogonal(dim, rng);
    Matrix h = q * eigenvalues.asDiagonal() * q.transpose();
    out[static_cast<std::size_t>(k)].hessian = 0.5 * (h + h.transpose());
  }

  Rng placement = Rng::keyed(seed, {0x317});
  Matrix minima(tasks, dim);
  if (dim >= tasks - 1) {
    const Matrix simplex = simplex_points(tasks, minima_spread);
    minima.setZero();
    if (tasks > 1) {
      const Matrix rotation = random_orthogonal(dim, placement);
      minima = simplex * rotation.leftCols(tasks - 1).transpose();
    }
  } else {
    Vector direction = placement.normal_vector(dim);
    direction.normalize();
    for (Index k = 0; k < tasks; ++k)
      minima.row(k) = (static_cast<double>(k) - 0.5 * static_cast<double>(tasks - 1)) * minima_spread *
                      direction.transpose();
  }
  if (dim == 1) {
    std::vector<double> sorted(minima.data(), minima.data() + tasks);
    std::sort(sorted.begin(), sorted.end());
    for (Index k = 0; k < tasks; ++k) minima(k, 0) = sorted[static_cast<std::size_t>(k)];
  }
  for (Index k = 0; k < tasks; ++k) out[static_cast<std::size_t>(k)].minimizer = minima.row(k).transpose();
  return out;
}

std::vector<Index> pixel_permutation(Index size, std::uint64_t seed) {
  if (seed == 0) {
    std::vector<Index> identity(static_cast<std::size_t>(size));
    for (Index i = 0; i < size; ++i) identity[static_cast<std::size_t>(i)] = i;
    return identity;
  }
  return Rng::keyed(seed, {0x9e77}).permutation(size);
}

namespace {

Batch permute_columns(const Batch& batch, const std::vector<Index>& perm) {
  Batch out{Matrix(batch.inputs.rows(), batch.inputs.cols()), batch.labels};
  for (std::size_t j = 0; j < perm.size(); ++j) out.inputs.col(static_cast<Index>(j)) = batch.inputs.col(perm[j]);
  return out;
}

}  // namespace

TaskDataset permute_task(const TaskDataset& base, std::uint64_t seed) {
  const auto perm = pixel_permutation(base.train.inputs.cols(), seed);
  TaskDataset out{permute_columns(base.train, perm), permute_columns(base.test, perm),
                  permute_columns(base.population, perm), {}};
  out.descriptor = base.descriptor + "|permute(seed=" + std::to_string(seed) + ")";
  return out;
}

Matrix rotate_images(const Matrix& images, double angle_degrees) {
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(images.cols()))));
  require(side * side == images.cols(), "rotate_images: rows are not square images");
  if (angle_degrees == 0.0 || images.rows() == 0) return images;

  const double theta = angle_degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double center = 0.5 * static_cast<double>(side - 1);
  const double lo = images.minCoeff();
  const double hi = images.maxCoeff();

  // For every output pixel, the four source taps and their weights.
  struct Tap {
    Index index;
    double weight;
  };
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(side * side));
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      // Output point in a y-up frame, rotated back by -theta.
      const double x = static_cast<double>(c) - center;
      const double y = center - static_cast<double>(r);
      const double sx = cos_t * x + sin_t * y;
      const double sy = -sin_t * x + cos_t * y;
      const double src_c = sx + center;
      const double src_r = center - sy;
      const double r0 = std::floor(src_r);
      const double c0 = std::floor(src_c);
      const double fr = src_r - r0;
      const double fc = src_c - c0;
      auto& out = taps[static_cast<std::size_t>(r * side + c)];
      const double weights[2][2] = {{(1 - fr) * (1 - fc), (1 - fr) * fc}, {fr * (1 - fc), fr * fc}};
      for (int dr = 0; dr < 2; ++dr) {
        for (int dc = 0; dc < 2; ++dc) {
          const auto rr = static_cast<Index>(r0) + dr;
          const auto cc = static_cast<Index>(c0) + dc;
          const double wgt = weights[dr][dc];
          if (rr < 0 || rr >= side || cc < 0 || cc >= side || wgt == 0.0) continue;
          out.push_back({rr * side + cc, wgt});
        }
      }
    }
  }

  Matrix out = Matrix::Zero(images.rows(), images.cols());
  for (Index p = 0; p < images.cols(); ++p) {
    for (const auto& tap : taps[static_cast<std::size_t>(p)]) out.col(p) += tap.weight * images.col(tap.index);
  }
  return out.cwiseMax(lo).cwiseMin(hi);
}

TaskDataset rotate_task(const TaskDataset& base, double angle_degrees) {
  TaskDataset out{{rotate_images(base.train.inputs, angle_degrees), base.train.labels},
                  {rotate_images(base.test.inputs, angle_degrees), base.test.labels},
                  {rotate_images(base.population.inputs, angle_degrees), base.population.labels},
                  {}};
  std::ostringstream desc;
  desc << base.descriptor << "|rotate(deg=" << angle_degrees << ")";
  out.descriptor = desc.str();
  return out;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void expect_magic(const std::vector<unsigned char>& bytes, std::uint32_t magic, const std::filesystem::path& path) {
  if (bytes.size() < 4) throw IdxError(IdxError::Kind::truncated, path.string() + ": file shorter than the magic number");
  const auto found = read_be32(bytes, 0);
  if (found != magic) {
    std::ostringstream msg;
    msg << path.string() << ": bad magic 0x" << std::hex << found << " (expected 0x" << magic << ")";
    throw IdxError(IdxError::Kind::bad_magic, msg.str());
  }
}

}  // namespace

ImagePool load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  expect_magic(images, 0x00000803u, images_path);
  if (images.size() < 16) throw IdxError(IdxError::Kind::truncated, images_path.string() + ": truncated header");
  const std::size_t count = read_be32(images, 4);
  const std::size_t rows = read_be32(images, 8);
  const std::size_t cols = read_be32(images, 12);
  if (images.size() - 16 < count * rows * cols)
    throw IdxError(IdxError::Kind::truncated, images_path.string() + ": truncated pixel payload");

  const auto labels = read_file(labels_path);
  expect_magic(labels, 0x00000801u, labels_path);
  if (labels.size() < 8) throw IdxError(IdxError::Kind::truncated, labels_path.string() + ": truncated header");
  const std::size_t label_count = read_be32(labels, 4);
  if (labels.size() - 8 < label_count)
    throw IdxError(IdxError::Kind::truncated, labels_path.string() + ": truncated label payload");
  if (label_count != count)
    throw IdxError(IdxError::Kind::count_mismatch, "image count " + std::to_string(count) +
                                                       " does not match label count " + std::to_string(label_count));

  ImagePool pool;
  pool.rows = static_cast<Index>(rows);
  pool.cols = static_cast<Index>(cols);
  const auto pixels = static_cast<Index>(rows * cols);
  pool.examples.inputs.resize(static_cast<Index>(count), pixels);
  pool.examples.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (Index p = 0; p < pixels; ++p)
      pool.examples.inputs(static_cast<Index>(i), p) = images[16 + i * static_cast<std::size_t>(pixels) + static_cast<std::size_t>(p)] / 255.0;
    pool.examples.labels[i] = labels[8 + i];
  }
  return pool;
}

TaskDataset split_pool(const ImagePool& pool, Index n_train, Index n_test, Index n_population,
                       std::uint64_t seed) {
  const Index total = pool.examples.size();
  require(n_train >= 1 && n_test >= 1 && n_population >= 0, "split_pool: invalid split sizes");
  require(n_train + n_test + n_population <= total, "split_pool: pool too small for requested splits");
  const Index population = n_population == 0 ? total - n_train - n_test : n_population;
  require(population >= 1, "split_pool: nothing left for the population split");
  const auto order = Rng::keyed(seed, {0x5b1}).permutation(total);
  const std::span<const Index> all(order);
  TaskDataset out{pool.examples.subset(all.subspan(0, static_cast<std::size_t>(n_train))),
                  pool.examples.subset(all.subspan(static_cast<std::size_t>(n_train), static_cast<std::size_t>(n_test))),
                  pool.examples.subset(all.subspan(static_cast<std::size_t>(n_train + n_test),
                                                   static_cast<std::size_t>(population))),
                  "idx(seed=" + std::to_string(seed) + ",train=" + std::to_string(n_train) +
                      ",test=" + std::to_string(n_test) + ",population=" + std::to_string(population) + ")"};
  return out;
}

Matrix gaussian_task_means(const GaussianTaskOptions& options, Index task) {
  require(options.dim >= 2 && options.classes >= 2, "gen_gaussian_tasks: need dim >= 2 and classes >= 2");
  Rng rng = Rng::keyed(options.seed, {0x6a55});
  Matrix means(options.classes, options.dim);
  for (Index c = 0; c < options.classes; ++c) {
    Vector m = rng.normal_vector(options.dim);
    means.row(c) = (options.mean_radius / m.norm()) * m.transpose();
  }
  const double theta = static_cast<double>(task) * options.rotation_step_degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  for (Index c = 0; c < options.classes; ++c) {
    const double x = means(c, 0);
    const double y = means(c, 1);
    means(c, 0) = cos_t * x - sin_t * y;
    means(c, 1) = sin_t * x + cos_t * y;
  }
  return means;
}

namespace {

Batch sample_gaussian(const Matrix& means, double noise, Index n, Rng rng) {
  Batch out{Matrix(n, means.cols()), std::vector<int>(static_cast<std::size_t>(n))};
  for (Index i = 0; i < n; ++i) {
    const Index label = i % means.rows();
    out.labels[static_cast<std::size_t>(i)] = static_cast<int>(label);
    for (Index j = 0; j < means.cols(); ++j) out.inputs(i, j) = means(label, j) + noise * rng.normal();
  }
  return out;
}

}  // namespace

std::vector<TaskDataset> gen_gaussian_tasks(const GaussianTaskOptions& options) {
  require(options.tasks >= 1, "gen_gaussian_tasks: need at least one task");
  require(options.n_train >= 1 && options.n_test >= 1 && options.n_population >= 1,
          "gen_gaussian_tasks: split sizes must be positive");
  std::vector<TaskDataset> out;
  for (Index k = 0; k < options.tasks; ++k) {
    const Matrix means = gaussian_task_means(options, k);
    const auto key = static_cast<std::uint64_t>(k);
    std::ostringstream desc;
    desc << "gaussian(seed=" << options.seed << ",task=" << k << ",classes=" << options.classes
         << ",dim=" << options.dim << ",step=" << options.rotation_step_degrees << ")";
    out.push_back({sample_gaussian(means, options.noise, options.n_train, Rng::keyed(options.seed, {key, 0})),
                   sample_gaussian(means, options.noise, options.n_test, Rng::keyed(options.seed, {key, 1})),
                   sample_gaussian(means, options.noise, options.n_population, Rng::keyed(options.seed, {key, 2})),
                   desc.str()});
  }
  return out;
}

}  // namespace taylorcl
