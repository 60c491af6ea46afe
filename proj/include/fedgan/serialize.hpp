#pragma once

// FGN1 binary model format. Little-endian throughout:
//
//   magic  "FGN1"
//   u8     kind            1 = generator, 2 = discriminator
//   u32    L               layer count (= number of activations)
//   u32[L+1] layer dims    d0 .. dL
//   u8[L]  activation codes
//   u32    tensor count T  (always 2L: W1, b1, ..., WL, bL)
//   T x    { u8 ndim, u32 dims[ndim], f32 raw data }
//   u8[T]  trainable flags (0 or 1)
//   u32    CRC32 (IEEE) over everything after the magic, excluding itself
//
// The CRC is verified before any structure is parsed, so a single flipped
// byte anywhere past the magic is always caught.

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "fedgan/gan.hpp"
#include "fedgan/tensor.hpp"

namespace fedgan {

inline uint32_t crc32(std::span<const uint8_t> data) {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t crc = 0xFFFFFFFFu;
  for (uint8_t b : data) crc = table[(crc ^ b) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

enum class ModelKind : uint8_t {
  generator = 1,
  discriminator = 2,
};

namespace detail {

inline void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}

inline void put_f32(std::vector<uint8_t>& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u32(out, bits);
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> buf) : buf_(buf) {}

  uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }

  uint32_t u32() {
    need(4);
    uint32_t v = static_cast<uint32_t>(buf_[pos_]) | (static_cast<uint32_t>(buf_[pos_ + 1]) << 8) |
                 (static_cast<uint32_t>(buf_[pos_ + 2]) << 16) |
                 (static_cast<uint32_t>(buf_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }

  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  size_t remaining() const { return buf_.size() - pos_; }

 private:
  void need(size_t n) {
    if (buf_.size() - pos_ < n) {
      throw SerializeError(SerializeError::Code::truncated, "payload ends mid-field");
    }
  }

  std::span<const uint8_t> buf_;
  size_t pos_ = 0;
};

inline Activation activation_from_code(uint8_t code) {
  switch (code) {
    case 0: return Activation::linear;
    case 1: return Activation::relu;
    case 2: return Activation::leaky_relu;
    case 3: return Activation::tanh;
    case 4: return Activation::sigmoid;
    default:
      throw SerializeError(SerializeError::Code::unknown_activation,
                           "activation code " + std::to_string(code));
  }
}

inline std::vector<uint8_t> serialize_impl(ModelKind kind, const MlpSpec& spec,
                                           const std::vector<ParamTensor>& params) {
  spec.validate();
  if (params.size() != static_cast<size_t>(2 * spec.layer_count())) {
    throw SerializeError(SerializeError::Code::invalid, "param count does not match spec");
  }
  std::vector<uint8_t> out;
  out.push_back('F');
  out.push_back('G');
  out.push_back('N');
  out.push_back('1');
  put_u8(out, static_cast<uint8_t>(kind));
  put_u32(out, static_cast<uint32_t>(spec.layer_count()));
  for (int d : spec.layer_dims) put_u32(out, static_cast<uint32_t>(d));
  for (Activation a : spec.activations) put_u8(out, static_cast<uint8_t>(a));
  put_u32(out, static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    put_u8(out, static_cast<uint8_t>(p.value.rank()));
    for (int d : p.value.shape) put_u32(out, static_cast<uint32_t>(d));
    for (float v : p.value.data) put_f32(out, v);
  }
  for (const auto& p : params) put_u8(out, p.trainable ? 1 : 0);
  const uint32_t crc = crc32(std::span<const uint8_t>(out).subspan(4));
  put_u32(out, crc);
  return out;
}

}  // namespace detail

struct AnyModel {
  ModelKind kind = ModelKind::generator;
  MlpSpec spec;
  std::vector<ParamTensor> params;

  GeneratorModel to_generator() const {
    if (kind != ModelKind::generator) {
      throw SerializeError(SerializeError::Code::invalid, "payload is not a generator");
    }
    return GeneratorModel{spec, params};
  }

  DiscriminatorModel to_discriminator() const {
    if (kind != ModelKind::discriminator) {
      throw SerializeError(SerializeError::Code::invalid, "payload is not a discriminator");
    }
    return DiscriminatorModel{spec, params};
  }
};

inline std::vector<uint8_t> serialize_model(const GeneratorModel& g) {
  return detail::serialize_impl(ModelKind::generator, g.spec, g.params);
}

inline std::vector<uint8_t> serialize_model(const DiscriminatorModel& d) {
  validate_discriminator_spec(d.spec);
  return detail::serialize_impl(ModelKind::discriminator, d.spec, d.params);
}

inline AnyModel deserialize_model(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 || bytes[0] != 'F' || bytes[1] != 'G' || bytes[2] != 'N' ||
      bytes[3] != '1') {
    throw SerializeError(SerializeError::Code::bad_magic, "missing FGN1 magic");
  }
  if (bytes.size() < 8) {
    throw SerializeError(SerializeError::Code::truncated, "no room for checksum");
  }
  const auto body = bytes.subspan(4, bytes.size() - 8);
  detail::ByteReader trailer(bytes.subspan(bytes.size() - 4));
  const uint32_t stored = trailer.u32();
  if (crc32(body) != stored) {
    throw SerializeError(SerializeError::Code::crc_mismatch, "checksum does not match payload");
  }

  detail::ByteReader r(body);
  AnyModel model;
  const uint8_t kind = r.u8();
  if (kind != static_cast<uint8_t>(ModelKind::generator) &&
      kind != static_cast<uint8_t>(ModelKind::discriminator)) {
    throw SerializeError(SerializeError::Code::unknown_kind, "kind byte " + std::to_string(kind));
  }
  model.kind = static_cast<ModelKind>(kind);

  const uint32_t layers = r.u32();
  if (layers == 0 || layers > 1024) {
    throw SerializeError(SerializeError::Code::invalid, "implausible layer count");
  }
  try {
    for (uint32_t i = 0; i <= layers; ++i) {
      model.spec.layer_dims.push_back(static_cast<int>(r.u32()));
    }
    for (uint32_t i = 0; i < layers; ++i) {
      model.spec.activations.push_back(detail::activation_from_code(r.u8()));
    }
    model.spec.validate();

    const uint32_t count = r.u32();
    if (count != 2 * layers) {
      throw SerializeError(SerializeError::Code::invalid, "tensor count must be 2 * layers");
    }
    for (uint32_t i = 0; i < count; ++i) {
      const uint8_t ndim = r.u8();
      Shape shape;
      for (uint8_t k = 0; k < ndim; ++k) shape.push_back(static_cast<int>(r.u32()));
      const size_t numel = shape_numel(shape);
      if (numel > r.remaining() / 4) {
        throw SerializeError(SerializeError::Code::truncated, "tensor data exceeds payload");
      }
      std::vector<float> data(numel);
      for (auto& v : data) v = r.f32();
      model.params.emplace_back(Tensor(std::move(shape), std::move(data)));
    }
    for (uint32_t i = 0; i < count; ++i) {
      const uint8_t flag = r.u8();
      if (flag > 1) {
        throw SerializeError(SerializeError::Code::invalid, "trainable flag must be 0 or 1");
      }
      model.params[i].trainable = flag == 1;
    }
  } catch (const SerializeError&) {
    throw;
  } catch (const Error& e) {
    throw SerializeError(SerializeError::Code::invalid, e.what());
  }
  if (r.remaining() != 0) {
    throw SerializeError(SerializeError::Code::invalid, "trailing bytes after param block");
  }

  // structural consistency: tensors must be the spec's W/b ladder
  for (int l = 0; l < model.spec.layer_count(); ++l) {
    const Shape expect_w{model.spec.layer_dims[static_cast<size_t>(l)],
                         model.spec.layer_dims[static_cast<size_t>(l) + 1]};
    const Shape expect_b{model.spec.layer_dims[static_cast<size_t>(l) + 1]};
    if (model.params[static_cast<size_t>(2 * l)].value.shape != expect_w ||
        model.params[static_cast<size_t>(2 * l) + 1].value.shape != expect_b) {
      throw SerializeError(SerializeError::Code::invalid, "tensor shapes do not match spec");
    }
  }
  if (model.kind == ModelKind::discriminator) {
    try {
      validate_discriminator_spec(model.spec);
    } catch (const Error& e) {
      throw SerializeError(SerializeError::Code::invalid, e.what());
    }
  }
  return model;
}

}  // namespace fedgan
