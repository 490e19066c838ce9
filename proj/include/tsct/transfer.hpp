#pragma once

// Model persistence and network adaptation (head swap + full fine-tuning).
//
// File layout (`.fcn`):
//   bytes 0..7   magic "TSCTFCN\n"
//   bytes 8..15  header length H, unsigned 64-bit little-endian
//   next H bytes JSON manifest: format_version, architecture, class_count,
//                payload_bytes and a tensor directory {name, shape, offset, count}
//   remainder    payload, IEEE-754 binary32 little-endian, tensors in directory
//                order, each tensor row-major over its declared shape

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "errors.hpp"
#include "fcn.hpp"
#include "io.hpp"

namespace tsct {

inline constexpr std::uint32_t model_format_version = 1;
inline constexpr char model_magic[8] = {'T', 'S', 'C', 'T', 'F', 'C', 'N', '\n'};

namespace detail {

  /// A model tensor seen through its serialised shape; matrices are read row-major.
  struct TensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    Eigen::MatrixXd* matrix = nullptr;
    Eigen::VectorXd* vector = nullptr;

    std::size_t count() const {
      std::size_t n = 1;
      for (auto d : shape) { n *= d; }
      return n;
    }
  };

  /// The 20 tensors of a model in file order.
  inline std::vector<TensorRef> tensor_directory(FcnModel& model) {
    std::vector<TensorRef> out;
    const auto& arch = model.arch;
    for (std::size_t l = 0; l < 3; ++l) {
      auto& b = model.blocks[l];
      const std::string conv = "conv" + std::to_string(l + 1);
      const std::string bn = "bn" + std::to_string(l + 1);
      const std::size_t f = arch.filters[l];
      out.push_back({conv + ".weight", {f, arch.in_channels(l), arch.kernels[l]}, &b.weight, nullptr});
      out.push_back({conv + ".bias", {f}, nullptr, &b.bias});
      out.push_back({bn + ".gamma", {f}, nullptr, &b.gamma});
      out.push_back({bn + ".beta", {f}, nullptr, &b.beta});
      out.push_back({bn + ".running_mean", {f}, nullptr, &b.running_mean});
      out.push_back({bn + ".running_var", {f}, nullptr, &b.running_var});
    }
    out.push_back({"head.weight", {arch.feature_count(), model.class_count}, &model.head_weight, nullptr});
    out.push_back({"head.bias", {model.class_count}, nullptr, &model.head_bias});
    return out;
  }

  template <class Fn>
  void for_each_value(TensorRef& t, Fn&& fn) {
    if (t.matrix) {
      for (Eigen::Index r = 0; r < t.matrix->rows(); ++r) {
        for (Eigen::Index c = 0; c < t.matrix->cols(); ++c) { fn((*t.matrix)(r, c)); }
      }
    } else {
      for (Eigen::Index i = 0; i < t.vector->size(); ++i) { fn((*t.vector)(i)); }
    }
  }

  inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) { out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu)); }
  }

  inline std::uint64_t get_u64(const std::string& in, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) { v |= std::uint64_t(static_cast<unsigned char>(in[at + i])) << (8 * i); }
    return v;
  }

  /// Allocate tensors for (arch, class_count) without drawing random values.
  inline FcnModel empty_model(const Architecture& arch, std::size_t class_count) {
    FcnModel m;
    m.arch = arch;
    m.class_count = class_count;
    for (std::size_t l = 0; l < 3; ++l) {
      auto& b = m.blocks[l];
      const auto f = static_cast<Eigen::Index>(arch.filters[l]);
      b.kernel = arch.kernels[l];
      b.weight = Eigen::MatrixXd::Zero(f, static_cast<Eigen::Index>(arch.in_channels(l) * arch.kernels[l]));
      for (auto* v : {&b.bias, &b.gamma, &b.beta, &b.running_mean, &b.running_var}) { *v = Eigen::VectorXd::Zero(f); }
    }
    m.head_weight = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(arch.feature_count()),
                                          static_cast<Eigen::Index>(class_count));
    m.head_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(class_count));
    return m;
  }

} // namespace detail

/// Encode a model; every value is rounded to the nearest binary32.
inline std::string encode_model(const FcnModel& model) {
  FcnModel copy = model;
  auto dir = detail::tensor_directory(copy);

  nlohmann::json header;
  header["format_version"] = model_format_version;
  header["architecture"] = {{"in_channels", 1},
                            {"filters", model.arch.filters},
                            {"kernels", model.arch.kernels},
                            {"padding", "same"},
                            {"bn_epsilon", model.arch.bn_epsilon},
                            {"bn_momentum", model.arch.bn_momentum}};
  header["class_count"] = model.class_count;
  auto tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : dir) {
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"count", t.count()}});
    offset += 4 * t.count();
  }
  header["tensors"] = tensors;
  header["payload_bytes"] = offset;
  const std::string text = header.dump();

  std::string out(model_magic, sizeof model_magic);
  detail::put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  for (auto& t : dir) {
    detail::for_each_value(t, [&](double v) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int i = 0; i < 4; ++i) { out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu)); }
    });
  }
  return out;
}

inline FcnModel decode_model(const std::string& bytes) {
  using Kind = ModelFormatError::Kind;
  if (bytes.size() < sizeof model_magic || std::memcmp(bytes.data(), model_magic, sizeof model_magic) != 0) {
    throw ModelFormatError(Kind::bad_magic, "not an FCN model file");
  }
  if (bytes.size() < 16) { throw ModelFormatError(Kind::truncated, "model file truncated in the preamble"); }
  const std::uint64_t header_len = detail::get_u64(bytes, 8);
  if (header_len > bytes.size() - 16) { throw ModelFormatError(Kind::truncated, "model file truncated in the header"); }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(Kind::malformed_header, std::string("model header is not valid JSON: ") + e.what());
  }

  FcnModel model;
  std::vector<nlohmann::json> listed;
  std::uint64_t payload_bytes = 0;
  try {
    const auto version = header.at("format_version").get<std::uint32_t>();
    if (version != model_format_version) {
      throw ModelFormatError(Kind::unknown_version, "unsupported model format version " + std::to_string(version));
    }
    const auto& a = header.at("architecture");
    Architecture arch;
    if (a.at("in_channels").get<std::size_t>() != 1 || a.at("padding").get<std::string>() != "same") {
      throw ModelFormatError(Kind::shape_mismatch, "only univariate same-padded networks are supported");
    }
    arch.filters = a.at("filters").get<std::array<std::size_t, 3>>();
    arch.kernels = a.at("kernels").get<std::array<std::size_t, 3>>();
    arch.bn_epsilon = a.at("bn_epsilon").get<double>();
    arch.bn_momentum = a.at("bn_momentum").get<double>();
    const auto classes = header.at("class_count").get<std::size_t>();
    for (auto v : arch.filters) {
      if (v == 0) { throw ModelFormatError(Kind::shape_mismatch, "zero filter count"); }
    }
    for (auto v : arch.kernels) {
      if (v == 0) { throw ModelFormatError(Kind::shape_mismatch, "zero kernel length"); }
    }
    if (classes < 2) { throw ModelFormatError(Kind::shape_mismatch, "class count below two"); }
    model = detail::empty_model(arch, classes);
    listed = header.at("tensors").get<std::vector<nlohmann::json>>();
    payload_bytes = header.at("payload_bytes").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(Kind::malformed_header, std::string("model header incomplete: ") + e.what());
  }

  auto dir = detail::tensor_directory(model);
  if (listed.size() != dir.size()) {
    throw ModelFormatError(Kind::shape_mismatch, "expected " + std::to_string(dir.size()) + " tensors, file lists " +
                                                     std::to_string(listed.size()));
  }
  std::uint64_t expected_offset = 0;
  for (std::size_t k = 0; k < dir.size(); ++k) {
    try {
      const auto name = listed[k].at("name").get<std::string>();
      const auto shape = listed[k].at("shape").get<std::vector<std::size_t>>();
      const auto count = listed[k].at("count").get<std::uint64_t>();
      const auto offset = listed[k].at("offset").get<std::uint64_t>();
      if (name != dir[k].name) {
        throw ModelFormatError(Kind::shape_mismatch, "expected tensor " + dir[k].name + ", found " + name);
      }
      if (shape != dir[k].shape || count != dir[k].count()) {
        throw ModelFormatError(Kind::shape_mismatch, "tensor " + name + " has the wrong shape for the architecture");
      }
      if (offset != expected_offset) {
        throw ModelFormatError(Kind::malformed_header, "tensor " + name + " is not contiguous in the payload");
      }
      expected_offset += 4 * count;
    } catch (const nlohmann::json::exception& e) {
      throw ModelFormatError(Kind::malformed_header, std::string("tensor entry malformed: ") + e.what());
    }
  }
  if (payload_bytes != expected_offset) {
    throw ModelFormatError(Kind::shape_mismatch, "payload size disagrees with the tensor directory");
  }
  const std::size_t start = 16 + header_len;
  if (bytes.size() - start < payload_bytes) {
    throw ModelFormatError(Kind::truncated, "model payload truncated: " + std::to_string(bytes.size() - start) + " of " +
                                                std::to_string(payload_bytes) + " bytes");
  }
  if (bytes.size() - start > payload_bytes) { throw ModelFormatError(Kind::malformed_header, "trailing bytes after payload"); }

  std::size_t at = start;
  for (auto& t : dir) {
    detail::for_each_value(t, [&](double& v) {
      std::uint32_t bits = 0;
      for (int i = 0; i < 4; ++i) { bits |= std::uint32_t(static_cast<unsigned char>(bytes[at + i])) << (8 * i); }
      at += 4;
      v = static_cast<double>(std::bit_cast<float>(bits));
      if (!std::isfinite(v)) { throw ModelFormatError(Kind::invalid_value, "non-finite value in tensor " + t.name); }
    });
  }
  for (const auto& b : model.blocks) {
    if ((b.running_var.array() <= 0.0).any()) {
      throw ModelFormatError(Kind::invalid_value, "running variance must be positive");
    }
  }
  return model;
}

/// Atomically write a model file (temp file + rename).
inline void save_model(const FcnModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, encode_model(model));
}

inline FcnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError("cannot open model file " + path.string()); }
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_model(bytes);
  } catch (const ModelFormatError& e) {
    throw ModelFormatError(e.kind(), path.string() + ": " + e.what());
  }
}

/// The model as it would read back from disk: every value rounded through binary32.
inline FcnModel round_to_storage_precision(const FcnModel& model) {
  FcnModel out = model;
  for (auto& t : detail::tensor_directory(out)) {
    detail::for_each_value(t, [](double& v) { v = static_cast<double>(static_cast<float>(v)); });
  }
  return out;
}

/// Replace the softmax head with a fresh Glorot-uniform [features x new_class_count]
/// layer and zero bias. Every other tensor, including running statistics, is copied.
inline FcnModel swap_head(const FcnModel& model, std::size_t new_class_count, std::uint64_t seed) {
  if (new_class_count < 2) { throw DataError("a classifier needs at least two classes"); }
  FcnModel out = model;
  std::mt19937_64 rng(seed);
  detail::init_head(out, new_class_count, rng);
  return out;
}

/// Head swap followed by training of the whole network on the target train
/// split. Optimizer state starts fresh.
inline TrainResult fine_tune(const FcnModel& pretrained, const Dataset& target, const TrainConfig& config,
                             std::uint64_t seed) {
  return train(swap_head(pretrained, target.class_count(), seed), target.train(), config);
}

} // namespace tsct
