#ifndef ADMMRNN_DATA_HPP
#define ADMMRNN_DATA_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "admmrnn/model.hpp"

namespace admmrnn {

struct Sample {
  std::vector<Matrix> xs;     // N columns, d_x x 1
  SequenceTargets targets;    // N slots
};

struct DatasetMeta {
  std::size_t d_x = 0;
  std::size_t n_steps = 0;
  std::size_t num_classes = 0;  // 0 for dense-target data
};

struct Dataset {
  std::vector<Sample> samples;
  DatasetMeta meta;
};

// Raw IDX contents before sequence shaping.
struct MnistData {
  std::vector<Matrix> images;  // rows x cols, values in [0,1]
  std::vector<int> labels;     // matching count
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
};

// Big-endian IDX files: image magic 2051, label magic 2049.
MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path);
MnistData parse_mnist_idx(const std::vector<std::uint8_t>& image_bytes,
                          const std::vector<std::uint8_t>& label_bytes);

// Row t of a square image becomes x_t; N = rows, d_x = cols.
std::vector<Matrix> image_to_sequence(const Matrix& image);

// Images to row sequences with the class label at the final step.
// limit > 0 keeps that many evenly spaced samples.
Dataset mnist_to_dataset(const MnistData& raw, std::size_t limit);

struct Vocabulary {
  std::vector<std::uint32_t> chars;               // sorted unique code points
  std::unordered_map<std::uint32_t, int> index;

  std::size_t size() const { return chars.size(); }
};

struct TextData {
  Dataset dataset;
  Vocabulary vocab;
};

// Overlapping windows of seq_len one-hot characters with next-character
// targets at every step. UTF-8 input, vocabulary over code points.
TextData load_text(const std::string& path, std::size_t seq_len);
TextData text_to_dataset(const std::string& content, std::size_t seq_len);

// Windows built against an existing vocabulary (e.g. a held-out split).
Dataset windows_from_codepoints(const std::vector<std::uint32_t>& cps, std::size_t seq_len,
                                const Vocabulary& vocab);
std::vector<std::uint32_t> decode_utf8(const std::string& bytes);

Dataset subsample_evenly(const Dataset& ds, std::size_t limit);

}  // namespace admmrnn

#endif
