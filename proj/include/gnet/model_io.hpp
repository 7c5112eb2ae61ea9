#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gnet/error.hpp"
#include "gnet/model.hpp"

namespace gnet {

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; big-endian hosts are unsupported");

namespace detail {

inline std::string padding_name(Padding p) {
  return p == Padding::Same ? "same" : "valid";
}

inline Padding padding_from_name(const std::string& s) {
  if (s == "same") return Padding::Same;
  if (s == "valid") return Padding::Valid;
  throw Error(ErrorKind::Format, "unknown padding '" + s + "'");
}

inline std::string activation_name(Activation a) {
  return a == Activation::Relu ? "relu" : "none";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "none") return Activation::None;
  throw Error(ErrorKind::Format, "unknown activation '" + s + "'");
}

inline std::string head_kind_name(HeadKind k) {
  switch (k) {
    case HeadKind::Detection: return "detection";
    case HeadKind::ClassifyV1: return "classify-v1";
    case HeadKind::ClassifyV2: return "classify-v2";
  }
  return "detection";
}

inline HeadKind head_kind_from_name(const std::string& s) {
  if (s == "detection") return HeadKind::Detection;
  if (s == "classify-v1") return HeadKind::ClassifyV1;
  if (s == "classify-v2") return HeadKind::ClassifyV2;
  throw Error(ErrorKind::Format, "unknown head kind '" + s + "'");
}

}  // namespace detail

/// Renders a spec as the on-disk model config document (JSON, keys
/// sorted, schema documented in docs/formats.md).
inline std::string to_config_json(const ModelSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  j["input_size"] = spec.input_size;
  j["input_channels"] = spec.input_channels;
  j["chip_max_channels"] = spec.chip_max_channels;
  j["head"] = {{"kind", detail::head_kind_name(spec.head.kind)},
               {"num_classes", spec.head.num_classes},
               {"grid", spec.head.grid}};
  j["major_layers"] = nlohmann::json::array();
  for (const MajorLayer& major : spec.major_layers) {
    nlohmann::json subs = nlohmann::json::array();
    for (const SubLayer& sl : major.sublayers) {
      subs.push_back({{"in", sl.in_channels},
                      {"out", sl.out_channels},
                      {"padding", detail::padding_name(sl.padding)},
                      {"activation", detail::activation_name(sl.activation)}});
    }
    j["major_layers"].push_back(
        {{"pool_after", major.pool_after}, {"sublayers", subs}});
  }
  return j.dump(2) + "\n";
}

inline ModelSpec from_config_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    ModelSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.input_size = j.at("input_size").get<int>();
    spec.input_channels = j.at("input_channels").get<int>();
    spec.chip_max_channels = j.value("chip_max_channels", 512);
    const auto& jh = j.at("head");
    spec.head.kind = detail::head_kind_from_name(jh.at("kind").get<std::string>());
    spec.head.num_classes = jh.at("num_classes").get<int>();
    spec.head.grid = jh.value("grid", spec.head.kind == HeadKind::ClassifyV1 ? 1 : 14);
    for (const auto& jm : j.at("major_layers")) {
      MajorLayer major;
      major.pool_after = jm.at("pool_after").get<bool>();
      for (const auto& js : jm.at("sublayers")) {
        SubLayer sl;
        sl.in_channels = js.at("in").get<int>();
        sl.out_channels = js.at("out").get<int>();
        sl.padding = detail::padding_from_name(js.at("padding").get<std::string>());
        sl.activation =
            detail::activation_from_name(js.at("activation").get<std::string>());
        major.sublayers.push_back(sl);
      }
      spec.major_layers.push_back(std::move(major));
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("config schema error: ") + e.what());
  }
}

inline ModelSpec load_model_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_config_json(buf.str());
}

inline void save_model_config(const ModelSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot write config file '" + path + "'");
  }
  out << to_config_json(spec);
  if (!out) {
    throw Error(ErrorKind::Io, "short write to '" + path + "'");
  }
}

/// Canonical, whitespace-stable description of the architecture.
/// Deliberately excludes the model name: weights stay valid when a
/// config is renamed.
inline std::string canonical_description(const ModelSpec& spec) {
  std::ostringstream out;
  out << "gnet-arch-v1\n";
  out << "input " << spec.input_size << " " << spec.input_channels << "\n";
  out << "chip-max " << spec.chip_max_channels << "\n";
  out << "head " << detail::head_kind_name(spec.head.kind) << " "
      << spec.head.num_classes << " " << spec.head.grid << "\n";
  for (const MajorLayer& major : spec.major_layers) {
    out << "major pool=" << (major.pool_after ? 1 : 0) << "\n";
    for (const SubLayer& sl : major.sublayers) {
      out << "sub " << sl.in_channels << " " << sl.out_channels << " "
          << detail::padding_name(sl.padding) << " "
          << detail::activation_name(sl.activation) << "\n";
    }
  }
  return out.str();
}

/// 64-bit FNV-1a over the canonical architecture description.
inline std::uint64_t fingerprint(const ModelSpec& spec) {
  const std::string text = canonical_description(spec);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char byte : text) {
    hash ^= byte;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

namespace detail {

inline void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::ifstream& in, void* p, std::size_t n,
                       const std::string& what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw Error(ErrorKind::Format, "weight file truncated while reading " + what);
  }
}

}  // namespace detail

inline constexpr char kWeightMagic[4] = {'G', 'N', 'W', '1'};

/// Weight file: "GNW1", u64 architecture fingerprint, then one record
/// per sublayer: out(u32), in(u32), out*in*9 kernel floats in
/// out-major/in-major/row-major order, then out bias floats. All values
/// little-endian.
inline void save_weights(const ModelSpec& spec, const WeightStore& store,
                         const std::string& path) {
  if (!weights_match(spec, store)) {
    throw Error(ErrorKind::Shape,
                "weight store does not match the model spec");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot write weight file '" + path + "'");
  }
  detail::write_bytes(out, kWeightMagic, sizeof(kWeightMagic));
  const std::uint64_t fp = fingerprint(spec);
  detail::write_bytes(out, &fp, sizeof(fp));
  for (const ConvKernel& k : store.kernels) {
    const std::uint32_t oc = static_cast<std::uint32_t>(k.out_channels);
    const std::uint32_t ic = static_cast<std::uint32_t>(k.in_channels);
    detail::write_bytes(out, &oc, sizeof(oc));
    detail::write_bytes(out, &ic, sizeof(ic));
    detail::write_bytes(out, k.weights.data(), k.weights.size() * sizeof(float));
    detail::write_bytes(out, k.bias.data(), k.bias.size() * sizeof(float));
  }
  if (!out) {
    throw Error(ErrorKind::Io, "short write to '" + path + "'");
  }
}

inline WeightStore load_weights(const ModelSpec& spec, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open weight file '" + path + "'");
  }
  char magic[4];
  detail::read_bytes(in, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kWeightMagic, sizeof(magic)) != 0) {
    throw Error(ErrorKind::Format, "'" + path + "' is not a gnet weight file");
  }
  std::uint64_t fp = 0;
  detail::read_bytes(in, &fp, sizeof(fp), "fingerprint");
  if (fp != fingerprint(spec)) {
    throw Error(ErrorKind::Format,
                "weight file fingerprint does not match the model config");
  }

  WeightStore store;
  for (const SubLayer& sl : flattened_sublayers(spec)) {
    std::uint32_t oc = 0, ic = 0;
    detail::read_bytes(in, &oc, sizeof(oc), "record header");
    detail::read_bytes(in, &ic, sizeof(ic), "record header");
    if (oc != static_cast<std::uint32_t>(sl.out_channels) ||
        ic != static_cast<std::uint32_t>(sl.in_channels)) {
      throw Error(ErrorKind::Format,
                  "weight record shape does not match the model spec");
    }
    ConvKernel k(sl.out_channels, sl.in_channels);
    detail::read_bytes(in, k.weights.data(), k.weights.size() * sizeof(float),
                       "kernel values");
    detail::read_bytes(in, k.bias.data(), k.bias.size() * sizeof(float),
                       "bias values");
    store.kernels.push_back(std::move(k));
  }
  char extra;
  in.read(&extra, 1);
  if (in.gcount() != 0) {
    throw Error(ErrorKind::Format, "trailing bytes after the last weight record");
  }
  return store;
}

}  // namespace gnet
