#pragma once

#include <stdexcept>
#include <string>

namespace fedgan {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatch, invalid dimension, or rank violation.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error("shape: " + msg) {}
};

// Non-finite value where a finite one is required.
class ValueError : public Error {
 public:
  explicit ValueError(const std::string& msg) : Error("value: " + msg) {}
};

// Model codec failures. Each failure mode has its own code so callers
// (and tests) can tell corruption from truncation from format drift.
class SerializeError : public Error {
 public:
  enum class Code {
    bad_magic,
    truncated,
    crc_mismatch,
    unknown_activation,
    unknown_kind,
    invalid,
  };

  SerializeError(Code code, const std::string& msg)
      : Error("serialize: " + msg), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

class RegistryError : public Error {
 public:
  enum class Code {
    not_found,
    invalid_payload,
    bad_id,
    storage,
  };

  RegistryError(Code code, const std::string& msg)
      : Error("registry: " + msg), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

// Socket / framing failures on the wire protocol.
class NetError : public Error {
 public:
  explicit NetError(const std::string& msg) : Error("net: " + msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

}  // namespace fedgan
