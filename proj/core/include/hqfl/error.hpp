// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hqfl {

// Bad caller input: malformed files, violated preconditions. CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The input is well formed but the domain computation cannot proceed.
// CLI exit code 3.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedSupport : public DomainError {
 public:
  using DomainError::DomainError;
};

class NoApplicableFamily : public DomainError {
 public:
  using DomainError::DomainError;
};

class InfeasibleMemory : public DomainError {
 public:
  using DomainError::DomainError;
};

class NeedTwoClients : public InputError {
 public:
  using InputError::InputError;
};

class NeedTwoValues : public InputError {
 public:
  using InputError::InputError;
};

class ExponentOutOfRange : public InputError {
 public:
  using InputError::InputError;
};

class KeyMismatch : public InputError {
 public:
  KeyMismatch(std::vector<std::string> ids);
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

class UnknownClient : public InputError {
 public:
  using InputError::InputError;
};

class TooManyFlagged : public DomainError {
 public:
  using DomainError::DomainError;
};

class NonFiniteInput : public InputError {
 public:
  using InputError::InputError;
};

class ShapeMismatch : public InputError {
 public:
  using InputError::InputError;
};

class NumericalDivergence : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace hqfl
