// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include "extralab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace extralab {
namespace {

static_assert(sizeof(float) == 4);

void put_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get_u64_le(const unsigned char* bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void append_float_le(std::string& blob, float f) {
  auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) blob.push_back(static_cast<char>(bits >> (8 * i)));
}

float read_float_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors,
                     const nlohmann::json& meta) {
  nlohmann::ordered_json header;
  header["format"] = "extralab-checkpoint";
  header["version"] = 1;
  header["endianness"] = "little";
  header["dtype"] = "float32";
  header["tensors"] = nlohmann::ordered_json::array();
  std::string blob;
  for (const auto& nt : tensors) {
    const auto offset = blob.size();
    for (float v : nt.tensor.values()) append_float_le(blob, v);
    nlohmann::ordered_json entry;
    entry["name"] = nt.name;
    entry["shape"] = nt.tensor.shape();
    entry["offset"] = offset;
    entry["nbytes"] = blob.size() - offset;
    header["tensors"].push_back(std::move(entry));
  }
  header["meta"] = meta;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint " + path.string() + " for writing");
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u64_le(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& why) { return std::runtime_error("checkpoint " + path.string() + ": " + why); };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) throw fail("bad magic");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto header_len = get_u64_le(raw + 8);
  if (header_len > bytes.size() - 16) throw fail("truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("header is not JSON: ") + e.what());
  }
  if (header.value("endianness", "") != "little" || header.value("dtype", "") != "float32") {
    throw fail("unsupported endianness/dtype");
  }
  const std::size_t blob_start = 16 + header_len;
  const std::size_t blob_size = bytes.size() - blob_start;
  Checkpoint out;
  out.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    CheckpointEntry e;
    e.name = entry.at("name").get<std::string>();
    e.shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto nbytes = entry.at("nbytes").get<std::size_t>();
    if (nbytes != static_cast<std::size_t>(numel(e.shape)) * 4 || offset > blob_size || nbytes > blob_size - offset) {
      throw fail("tensor '" + e.name + "' has inconsistent extent");
    }
    e.values.resize(nbytes / 4);
    for (std::size_t i = 0; i < e.values.size(); ++i) e.values[i] = read_float_le(raw + blob_start + offset + 4 * i);
    out.tensors.push_back(std::move(e));
  }
  return out;
}

}  // namespace extralab
