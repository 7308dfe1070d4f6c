// Copyright 2026 The PQFL Simulator Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file
 * Exception hierarchy shared by every module.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace pqfl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define PQFL_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                              \
      public:                                                                \
        using Error::Error;                                                  \
    }

/// A size exceeds a hard limit (qubit cap, amplitude capacity).
PQFL_DEFINE_ERROR(CapacityError);
/// A qubit or element index is out of range or otherwise invalid.
PQFL_DEFINE_ERROR(IndexError);
/// Two operands have incompatible dimensions.
PQFL_DEFINE_ERROR(ShapeError);
/// Input that cannot be processed, e.g. a zero vector to normalize.
PQFL_DEFINE_ERROR(DegenerateInputError);
/// The caller violated an API contract (e.g. sampling in exact mode).
PQFL_DEFINE_ERROR(ContractError);
/// A computation produced a non-finite value.
PQFL_DEFINE_ERROR(NumericError);
/// Missing, empty, or otherwise unusable data.
PQFL_DEFINE_ERROR(DataError);
/// Invalid configuration value or key.
PQFL_DEFINE_ERROR(ConfigError);
/// A sample label outside the model's class range.
PQFL_DEFINE_ERROR(LabelError);
/// A malformed line in a text input.
PQFL_DEFINE_ERROR(ParseError);
/// Rows of a table disagree on width.
PQFL_DEFINE_ERROR(SchemaError);
/// A partition could not satisfy its constraints.
PQFL_DEFINE_ERROR(PartitionError);
/// A metric is undefined for the given input (e.g. 0/0).
PQFL_DEFINE_ERROR(UndefinedMetricError);

#undef PQFL_DEFINE_ERROR

/// Wraps a client failure during a federated round.
class ClientError : public Error {
  public:
    ClientError(std::size_t client, const std::string &what)
        : Error("client " + std::to_string(client) + ": " + what),
          client_(client) {}
    [[nodiscard]] std::size_t client() const noexcept { return client_; }

  private:
    std::size_t client_;
};

} // namespace pqfl
