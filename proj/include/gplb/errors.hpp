#pragma once

#include <stdexcept>
#include <string>

namespace gplb {

/// Argument outside the mathematical domain of an operation (n <= 0, delta not in (0, 1/4), ...).
class domain_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Two values that must agree do not (basis ids, lengths, equal-norm families).
class contract_error : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// A numerical procedure failed to reach its tolerance.
class numerical_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration.
class config_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A report could not be read back (bad header, unknown schema version).
class schema_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A report file could not be read or written; the message names the path.
class io_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace gplb
