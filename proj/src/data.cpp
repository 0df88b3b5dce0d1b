#include "admmrnn/data.hpp"

#include <algorithm>
#include <fstream>

#include "admmrnn/errors.hpp"

namespace admmrnn {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const char* what) {
  if (offset + 4 > bytes.size()) {
    throw format_error(std::string("truncated IDX file while reading ") + what);
  }
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

std::vector<std::size_t> even_indices(std::size_t count, std::size_t limit) {
  std::vector<std::size_t> idx;
  if (limit == 0 || limit >= count) {
    idx.resize(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    return idx;
  }
  idx.reserve(limit);
  for (std::size_t i = 0; i < limit; ++i) idx.push_back(i * count / limit);
  return idx;
}

}  // namespace

MnistData parse_mnist_idx(const std::vector<std::uint8_t>& image_bytes,
                          const std::vector<std::uint8_t>& label_bytes) {
  const std::uint32_t image_magic = read_be32(image_bytes, 0, "image magic");
  if (image_magic != kImageMagic) {
    throw format_error("bad image magic " + std::to_string(image_magic) + ", expected " +
                       std::to_string(kImageMagic));
  }
  const std::uint32_t label_magic = read_be32(label_bytes, 0, "label magic");
  if (label_magic != kLabelMagic) {
    throw format_error("bad label magic " + std::to_string(label_magic) + ", expected " +
                       std::to_string(kLabelMagic));
  }
  const std::size_t image_count = read_be32(image_bytes, 4, "image count");
  const std::size_t rows = read_be32(image_bytes, 8, "image rows");
  const std::size_t cols = read_be32(image_bytes, 12, "image cols");
  const std::size_t label_count = read_be32(label_bytes, 4, "label count");
  if (image_count != label_count) {
    throw format_error("image count " + std::to_string(image_count) + " does not match label count " +
                       std::to_string(label_count));
  }
  if (rows == 0 || cols == 0) throw format_error("IDX image dimensions must be positive");
  const std::size_t pixels = rows * cols;
  if (image_bytes.size() != 16 + image_count * pixels) {
    throw format_error("image file length " + std::to_string(image_bytes.size()) +
                       " does not match header (expected " +
                       std::to_string(16 + image_count * pixels) + ")");
  }
  if (label_bytes.size() != 8 + label_count) {
    throw format_error("label file length " + std::to_string(label_bytes.size()) +
                       " does not match header (expected " + std::to_string(8 + label_count) + ")");
  }

  MnistData out;
  out.image_rows = rows;
  out.image_cols = cols;
  out.images.reserve(image_count);
  out.labels.reserve(label_count);
  for (std::size_t i = 0; i < image_count; ++i) {
    Matrix img(rows, cols);
    const std::size_t base = 16 + i * pixels;
    for (std::size_t p = 0; p < pixels; ++p) {
      img[p] = static_cast<double>(image_bytes[base + p]) / 255.0;
    }
    out.images.push_back(std::move(img));
    out.labels.push_back(static_cast<int>(label_bytes[8 + i]));
  }
  return out;
}

MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  return parse_mnist_idx(read_file_bytes(images_path), read_file_bytes(labels_path));
}

std::vector<Matrix> image_to_sequence(const Matrix& image) {
  if (image.rows() != image.cols()) {
    throw shape_error("image_to_sequence: image must be square, got " + image.shape_str());
  }
  std::vector<Matrix> seq;
  seq.reserve(image.rows());
  for (std::size_t t = 0; t < image.rows(); ++t) {
    Matrix x(image.cols(), 1);
    for (std::size_t c = 0; c < image.cols(); ++c) x[c] = image(t, c);
    seq.push_back(std::move(x));
  }
  return seq;
}

Dataset mnist_to_dataset(const MnistData& raw, std::size_t limit) {
  Dataset ds;
  ds.meta.d_x = raw.image_cols;
  ds.meta.n_steps = raw.image_rows;
  ds.meta.num_classes = 10;
  const std::vector<std::size_t> keep = even_indices(raw.images.size(), limit);
  ds.samples.reserve(keep.size());
  for (std::size_t i : keep) {
    Sample s;
    s.xs = image_to_sequence(raw.images[i]);
    s.targets.assign(s.xs.size(), std::nullopt);
    s.targets.back() = Target{raw.labels[i]};
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::vector<std::uint32_t> decode_utf8(const std::string& bytes) {
  std::vector<std::uint32_t> cps;
  cps.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto b0 = static_cast<std::uint8_t>(bytes[i]);
    std::size_t extra;
    std::uint32_t cp;
    if (b0 < 0x80) {
      extra = 0;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      extra = 1;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3;
      cp = b0 & 0x07;
    } else {
      throw format_error("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + extra >= bytes.size()) {
      throw format_error("truncated UTF-8 sequence at offset " + std::to_string(i));
    }
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto bk = static_cast<std::uint8_t>(bytes[i + k]);
      if ((bk & 0xC0) != 0x80) {
        throw format_error("invalid UTF-8 continuation byte at offset " + std::to_string(i + k));
      }
      cp = (cp << 6) | (bk & 0x3F);
    }
    cps.push_back(cp);
    i += extra + 1;
  }
  return cps;
}

Dataset windows_from_codepoints(const std::vector<std::uint32_t>& cps, std::size_t seq_len,
                                const Vocabulary& vocab) {
  Dataset ds;
  ds.meta.d_x = vocab.size();
  ds.meta.n_steps = seq_len;
  ds.meta.num_classes = vocab.size();
  if (cps.size() <= seq_len) return ds;  // no full window with a target
  const std::size_t count = cps.size() - seq_len;
  ds.samples.reserve(count);
  for (std::size_t start = 0; start < count; ++start) {
    Sample s;
    s.xs.reserve(seq_len);
    s.targets.reserve(seq_len);
    for (std::size_t j = 0; j < seq_len; ++j) {
      s.xs.push_back(one_hot(static_cast<std::size_t>(vocab.index.at(cps[start + j])),
                             vocab.size()));
      s.targets.push_back(Target{vocab.index.at(cps[start + j + 1])});
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

TextData text_to_dataset(const std::string& content, std::size_t seq_len) {
  if (content.empty()) throw config_error("text input is empty");
  if (seq_len < 1) throw config_error("seq_len must be >= 1");
  const std::vector<std::uint32_t> cps = decode_utf8(content);
  if (seq_len >= cps.size()) {
    throw config_error("seq_len " + std::to_string(seq_len) + " must be below text length " +
                       std::to_string(cps.size()));
  }
  TextData out;
  out.vocab.chars = cps;
  std::sort(out.vocab.chars.begin(), out.vocab.chars.end());
  out.vocab.chars.erase(std::unique(out.vocab.chars.begin(), out.vocab.chars.end()),
                        out.vocab.chars.end());
  for (std::size_t i = 0; i < out.vocab.chars.size(); ++i) {
    out.vocab.index[out.vocab.chars[i]] = static_cast<int>(i);
  }
  out.dataset = windows_from_codepoints(cps, seq_len, out.vocab);
  return out;
}

TextData load_text(const std::string& path, std::size_t seq_len) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  const std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return text_to_dataset(content, seq_len);
}

Dataset subsample_evenly(const Dataset& ds, std::size_t limit) {
  if (limit == 0 || limit >= ds.samples.size()) return ds;
  Dataset out;
  out.meta = ds.meta;
  for (std::size_t i : even_indices(ds.samples.size(), limit)) {
    out.samples.push_back(ds.samples[i]);
  }
  return out;
}

}  // namespace admmrnn
