#pragma once

#include <stdexcept>
#include <string>

namespace ddopt {

// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A diagram (or a restriction of one) has no root-terminal path.
class NoFeasiblePath : public Error {
public:
  using Error::Error;
};

// Compilation produced more nodes in a single layer than the configured cap.
class LayerExplosion : public Error {
public:
  using Error::Error;
};

// Path enumeration would emit more paths than the configured cap.
class PathCapExceeded : public Error {
public:
  using Error::Error;
};

// State-space expansion produced more state-nodes than the configured cap.
class StateCapExceeded : public Error {
public:
  using Error::Error;
};

// A generic enumeration or search cap was hit.
class CapExceeded : public Error {
public:
  using Error::Error;
};

// A cooperative wall-clock deadline expired inside a solver.
class TimeLimitExceeded : public Error {
public:
  using Error::Error;
};

// Malformed text input (LP files, JSON instances, CLI payloads).
class ParseError : public Error {
public:
  using Error::Error;
};

}  // namespace ddopt
