#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <random>

#include "pqfl/error.hpp"
#include "pqfl/learning.hpp"

namespace pqfl::learning {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset,
                        const std::filesystem::path& path) {
  if (buf.size() < offset + 4) {
    throw ParseError(ParseErrorKind::kTruncated, path.string() + ": truncated header");
  }
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

void check_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    char msg[96];
    std::snprintf(msg, sizeof msg, ": bad magic 0x%08x (expected 0x%08x)", got, want);
    throw ParseError(ParseErrorKind::kBadMagic, path.string() + msg);
  }
}

}  // namespace

Dataset::Dataset(std::vector<double> features, std::size_t dim, std::vector<int> labels,
                 int n_classes)
    : features_(std::move(features)), dim_(dim), labels_(std::move(labels)), n_classes_(n_classes) {
  if (dim_ == 0) throw DomainError("dataset: dim must be positive");
  if (n_classes_ < 1) throw DomainError("dataset: need at least one class");
  if (features_.size() != labels_.size() * dim_) {
    throw DomainError("dataset: feature matrix does not match label count");
  }
  std::vector<bool> present(static_cast<std::size_t>(n_classes_), false);
  for (int y : labels_) {
    if (y < 0 || y >= n_classes_) throw DomainError("dataset: label out of range");
    present[static_cast<std::size_t>(y)] = true;
  }
  if (std::find(present.begin(), present.end(), false) != present.end()) {
    throw DomainError("dataset: some class has no samples");
  }
  if (!std::all_of(features_.begin(), features_.end(), [](double v) { return std::isfinite(v); })) {
    throw DomainError("dataset: non-finite feature");
  }
}

DatasetView::DatasetView(const Dataset& data, std::vector<std::size_t> indices)
    : data_(&data), indices_(std::move(indices)) {
  for (auto i : indices_) {
    if (i >= data.size()) throw DomainError("dataset view: index out of range");
  }
}

DatasetView::DatasetView(const Dataset& data) : data_(&data), indices_(data.size()) {
  std::iota(indices_.begin(), indices_.end(), std::size_t{0});
}

Dataset make_synthetic(std::uint64_t seed, std::size_t n_samples, int n_classes, std::size_t dim,
                       double class_separation) {
  if (n_classes < 2) throw DomainError("make_synthetic: need at least 2 classes");
  if (dim < 2) throw DomainError("make_synthetic: dim must be >= 2");
  if (n_samples < static_cast<std::size_t>(n_classes)) {
    throw DomainError("make_synthetic: fewer samples than classes");
  }
  if (!(class_separation > 0.0) || !std::isfinite(class_separation)) {
    throw DomainError("make_synthetic: class_separation must be positive");
  }

  const auto classes = static_cast<std::size_t>(n_classes);
  // Smallest grid side g with g^dim >= C; centers are base-g digit vectors.
  std::size_t side = 2;
  auto fits = [&](std::size_t g) {
    std::size_t cells = 1;
    for (std::size_t d = 0; d < dim && cells < classes; ++d) cells *= g;
    return cells >= classes;
  };
  while (!fits(side)) ++side;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> shift_dist(-class_separation, class_separation);

  std::vector<double> shift(dim);
  for (auto& s : shift) s = shift_dist(rng);

  std::vector<double> centers(classes * dim);
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t k = c;
    for (std::size_t d = 0; d < dim; ++d) {
      centers[c * dim + d] = static_cast<double>(k % side) * class_separation + shift[d];
      k /= side;
    }
  }

  std::vector<double> features(n_samples * dim);
  std::vector<int> labels(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t c = i % classes;
    labels[i] = static_cast<int>(c);
    for (std::size_t d = 0; d < dim; ++d) features[i * dim + d] = centers[c * dim + d] + noise(rng);
  }
  return Dataset(std::move(features), dim, std::move(labels), n_classes);
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);

  check_magic(read_be32(images, 0, images_path), kIdxImagesMagic, images_path);
  check_magic(read_be32(labels, 0, labels_path), kIdxLabelsMagic, labels_path);

  const std::size_t n_images = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t n_labels = read_be32(labels, 4, labels_path);

  const std::size_t dim = rows * cols;
  if (images.size() - 16 < n_images * dim) {
    throw ParseError(ParseErrorKind::kTruncated, images_path.string() + ": truncated pixel data");
  }
  if (labels.size() - 8 < n_labels) {
    throw ParseError(ParseErrorKind::kTruncated, labels_path.string() + ": truncated label data");
  }
  if (n_images != n_labels) {
    throw ParseError(ParseErrorKind::kCountMismatch,
                     "image count " + std::to_string(n_images) + " != label count " +
                         std::to_string(n_labels));
  }

  std::vector<double> features(n_images * dim);
  for (std::size_t i = 0; i < features.size(); ++i) features[i] = images[16 + i] / 255.0;
  std::vector<int> y(labels.begin() + 8, labels.begin() + 8 + static_cast<std::ptrdiff_t>(n_labels));
  const int n_classes = y.empty() ? 0 : *std::max_element(y.begin(), y.end()) + 1;
  return Dataset(std::move(features), dim, std::move(y), n_classes);
}

void write_idx_images(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> pixels) {
  if (rows * cols == 0 || pixels.size() % (rows * cols) != 0) {
    throw DomainError("write_idx_images: pixel count is not a multiple of rows*cols");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_be32(out, kIdxImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(pixels.size() / (rows * cols)));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw Error("write failed: " + path.string());
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_be32(out, kIdxLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  if (!out) throw Error("write failed: " + path.string());
}

void write_csv(std::ostream& out, const Dataset& data) {
  out << "label";
  for (std::size_t d = 0; d < data.dim(); ++d) out << ",f" << d;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.label(i);
    for (double v : data.row(i)) out << ',' << v;
    out << '\n';
  }
  out.precision(old_precision);
}

std::pair<DatasetView, DatasetView> train_test_split(const Dataset& data, double train_fraction,
                                                      std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DomainError("train_test_split: fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(data.size())));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {DatasetView(data, std::move(train)), DatasetView(data, std::move(test))};
}

}  // namespace pqfl::learning
