#include <doctest.h>

#include <cstdint>
#include <vector>

#include "admmrnn/data.hpp"
#include "admmrnn/errors.hpp"

using namespace admmrnn;

namespace {

void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> image_bytes(std::uint32_t magic, std::uint32_t count, std::uint32_t rows,
                                      std::uint32_t cols, std::vector<std::uint8_t> pixels) {
  std::vector<std::uint8_t> out;
  push_be32(out, magic);
  push_be32(out, count);
  push_be32(out, rows);
  push_be32(out, cols);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<std::uint8_t> label_bytes(std::uint32_t magic, std::vector<std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  push_be32(out, magic);
  push_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

}  // namespace

TEST_CASE("parse_mnist_idx on constructed bytes") {
  const auto images = image_bytes(2051, 1, 2, 2, {0, 255, 0, 255});
  const auto labels = label_bytes(2049, {7});
  const MnistData data = parse_mnist_idx(images, labels);
  REQUIRE(data.images.size() == 1);
  CHECK(data.images[0](0, 0) == 0.0);
  CHECK(data.images[0](0, 1) == 1.0);
  CHECK(data.images[0](1, 0) == 0.0);
  CHECK(data.images[0](1, 1) == 1.0);
  CHECK(data.labels[0] == 7);
  CHECK(data.image_rows == 2);
}

TEST_CASE("parse_mnist_idx rejects malformed files") {
  const auto good_images = image_bytes(2051, 1, 2, 2, {0, 255, 0, 255});
  // wrong label magic
  CHECK_THROWS_AS(parse_mnist_idx(good_images, label_bytes(2050, {1})), format_error);
  // wrong image magic
  CHECK_THROWS_AS(parse_mnist_idx(image_bytes(2052, 1, 2, 2, {0, 0, 0, 0}),
                                  label_bytes(2049, {1})),
                  format_error);
  // image/label count mismatch (2 images, 3 labels)
  CHECK_THROWS_AS(parse_mnist_idx(image_bytes(2051, 2, 1, 1, {0, 0}),
                                  label_bytes(2049, {1, 2, 3})),
                  format_error);
  // truncated pixel payload
  CHECK_THROWS_AS(parse_mnist_idx(image_bytes(2051, 1, 2, 2, {0, 255}), label_bytes(2049, {1})),
                  format_error);
  // truncated header
  CHECK_THROWS_AS(parse_mnist_idx({0, 0}, label_bytes(2049, {1})), format_error);
}

TEST_CASE("parse_mnist_idx is deterministic and range-checked") {
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 3; ++i) {
    for (int p = 0; p < 4; ++p) pixels.push_back(static_cast<std::uint8_t>(i * 60 + p));
    labels.push_back(static_cast<std::uint8_t>(i));
  }
  const auto ib = image_bytes(2051, 3, 2, 2, pixels);
  const auto lb = label_bytes(2049, labels);
  const MnistData a = parse_mnist_idx(ib, lb);
  const MnistData b = parse_mnist_idx(ib, lb);
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    CHECK(a.labels[i] == b.labels[i]);
    CHECK(a.labels[i] >= 0);
    CHECK(a.labels[i] <= 9);
    for (std::size_t p = 0; p < a.images[i].size(); ++p) {
      CHECK(a.images[i][p] == b.images[i][p]);
      CHECK(a.images[i][p] >= 0.0);
      CHECK(a.images[i][p] <= 1.0);
    }
  }
}

TEST_CASE("image_to_sequence shapes rows into timesteps") {
  {
    const Matrix zeros(28, 28);
    const std::vector<Matrix> seq = image_to_sequence(zeros);
    CHECK(seq.size() == 28);
    for (const Matrix& x : seq) {
      CHECK(x.rows() == 28);
      CHECK(x.cols() == 1);
      CHECK(norm_fro(x) == 0.0);
    }
  }
  {
    Matrix img(4, 4);
    img(2, 1) = 0.8;
    const std::vector<Matrix> seq = image_to_sequence(img);
    for (std::size_t t = 0; t < 4; ++t) {
      if (t == 2) {
        CHECK(seq[t][1] == 0.8);
        CHECK(norm_sq(seq[t]) == doctest::Approx(0.64));
      } else {
        CHECK(norm_fro(seq[t]) == 0.0);
      }
    }
  }
  {
    // stacking the sequence rows reproduces the image
    Matrix img(3, 3);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(i) / 10.0;
    const std::vector<Matrix> seq = image_to_sequence(img);
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t c = 0; c < 3; ++c) CHECK(seq[t][c] == img(t, c));
    }
  }
  CHECK_THROWS_AS(image_to_sequence(Matrix(3, 4)), shape_error);
}

TEST_CASE("mnist_to_dataset targets the final step") {
  const auto images = image_bytes(2051, 2, 2, 2, {0, 10, 20, 30, 40, 50, 60, 70});
  const auto labels = label_bytes(2049, {3, 9});
  const Dataset ds = mnist_to_dataset(parse_mnist_idx(images, labels), 0);
  REQUIRE(ds.samples.size() == 2);
  CHECK(ds.meta.num_classes == 10);
  CHECK(ds.samples[0].xs.size() == 2);
  CHECK(!ds.samples[0].targets[0].has_value());
  REQUIRE(ds.samples[0].targets[1].has_value());
  CHECK(std::get<int>(*ds.samples[0].targets[1]) == 3);
  CHECK(std::get<int>(*ds.samples[1].targets[1]) == 9);
}

TEST_CASE("text windows with next-character targets") {
  {
    const TextData td = text_to_dataset("ab", 1);
    CHECK(td.vocab.size() == 2);
    REQUIRE(td.dataset.samples.size() == 1);
    const Sample& s = td.dataset.samples[0];
    CHECK(s.xs[0][td.vocab.index.at('a')] == 1.0);
    CHECK(std::get<int>(*s.targets[0]) == td.vocab.index.at('b'));
  }
  {
    const TextData td = text_to_dataset("abcabc", 3);
    REQUIRE(td.dataset.samples.size() == 3);
    const int ia = td.vocab.index.at('a');
    const int ib = td.vocab.index.at('b');
    const int ic = td.vocab.index.at('c');
    // window 0: abc -> bca, window 1: bca -> cab, window 2: cab -> abc
    const int want_targets[3][3] = {{ib, ic, ia}, {ic, ia, ib}, {ia, ib, ic}};
    for (std::size_t wdx = 0; wdx < 3; ++wdx) {
      for (std::size_t t = 0; t < 3; ++t) {
        CHECK(std::get<int>(*td.dataset.samples[wdx].targets[t]) == want_targets[wdx][t]);
      }
    }
  }
  {
    // every emitted one-hot sums to exactly 1
    const TextData td = text_to_dataset("hello world", 4);
    for (const Sample& s : td.dataset.samples) {
      for (const Matrix& x : s.xs) {
        double sum = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) sum += x[i];
        CHECK(sum == 1.0);
      }
    }
  }
  CHECK_THROWS_AS(text_to_dataset("", 1), config_error);
  CHECK_THROWS_AS(text_to_dataset("ab", 2), config_error);
  CHECK_THROWS_AS(text_to_dataset("ab", 5), config_error);
}

TEST_CASE("utf8 decoding covers multi-byte characters") {
  const std::string text = "h\xc3\xa9llo";  // 'e' with acute accent
  const std::vector<std::uint32_t> cps = decode_utf8(text);
  REQUIRE(cps.size() == 5);
  CHECK(cps[1] == 0xE9);
  const TextData td = text_to_dataset(text, 2);
  CHECK(td.vocab.size() == 4);  // h, e-acute, l, o

  CHECK_THROWS_AS(decode_utf8("\xff"), format_error);
  CHECK_THROWS_AS(decode_utf8("\xc3"), format_error);
}

TEST_CASE("subsample_evenly is deterministic and bounded") {
  const TextData td = text_to_dataset("abcdefghij", 2);
  const Dataset half = subsample_evenly(td.dataset, 4);
  CHECK(half.samples.size() == 4);
  const Dataset again = subsample_evenly(td.dataset, 4);
  for (std::size_t i = 0; i < half.samples.size(); ++i) {
    CHECK(std::get<int>(*half.samples[i].targets[0]) ==
          std::get<int>(*again.samples[i].targets[0]));
  }
  CHECK(subsample_evenly(td.dataset, 0).samples.size() == td.dataset.samples.size());
}
