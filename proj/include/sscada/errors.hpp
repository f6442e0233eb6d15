#pragma once

#include <stdexcept>
#include <string>

namespace sscada {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally invalid wire bytes (bad length, bad layout).
struct FrameError : Error {
  using Error::Error;
};

// CBC padding did not verify on decrypt.
struct PaddingError : Error {
  using Error::Error;
};

// Operation invoked in a state that does not permit it.
struct ProtocolError : Error {
  using Error::Error;
};

struct CounterExhausted : Error {
  using Error::Error;
};

struct ChainExhausted : Error {
  using Error::Error;
};

struct BufferOverflow : Error {
  using Error::Error;
};

struct UsesExhausted : Error {
  using Error::Error;
};

struct NoValidWindow : Error {
  using Error::Error;
};

// Adversary script referenced something it never recorded.
struct ScriptError : Error {
  using Error::Error;
};

// Scenario text could not be parsed; carries line information in the message.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace sscada
