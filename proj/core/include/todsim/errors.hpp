#pragma once

#include <stdexcept>
#include <string>

namespace todsim {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration: mismatched feature schema, missing scorer, bad flag.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A malformed structure (act, goal) was handed to a constructor.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A peer sent something that is not a valid protocol message.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  // The offending payload, verbatim.
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

// No reply within the channel timeout.
class AgentUnresponsive : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class RoleMismatch : public Error {
 public:
  using Error::Error;
};

// Could not spawn, connect, read or write.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace todsim
