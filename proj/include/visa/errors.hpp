#pragma once

#include <stdexcept>
#include <string>

namespace visa {

/// Failure classes shared by the library and the CLI. Each maps to a
/// distinct process exit code.
enum class ErrorKind { Config, Io, Backend, Validation };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

/// A model backend failed: transport, unparseable output after retries, or an
/// out-of-contract score. `raw_output` keeps the last model reply, if any.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what, std::string raw_output = {})
      : Error(ErrorKind::Backend, what), raw_output_(std::move(raw_output)) {}
  const std::string& raw_output() const noexcept { return raw_output_; }

 private:
  std::string raw_output_;
};

/// Call inside a catch block: rethrows the active visa::Error with `context`
/// prefixed to its message, keeping its class. Other exceptions pass through.
[[noreturn]] inline void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const BackendError& e) {
    throw BackendError(context + ": " + e.what(), e.raw_output());
  } catch (const Error& e) {
    const std::string msg = context + ": " + e.what();
    switch (e.kind()) {
      case ErrorKind::Config: throw ConfigError(msg);
      case ErrorKind::Io: throw IoError(msg);
      case ErrorKind::Validation: throw ValidationError(msg);
      case ErrorKind::Backend: throw BackendError(msg);
    }
    throw;
  }
}

// sysexits.h values
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 78;      // EX_CONFIG
    case ErrorKind::Io: return 74;          // EX_IOERR
    case ErrorKind::Backend: return 69;     // EX_UNAVAILABLE
    case ErrorKind::Validation: return 65;  // EX_DATAERR
  }
  return 70;
}

}  // namespace visa
