// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace psipfl {

// Every library failure derives from Error so callers at the process edge can
// catch one type; the subclasses exist for tests and for exit-code mapping.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IngestionError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class EmptyClientError : public Error {
 public:
  using Error::Error;
};

class PartitionInfeasibleError : public Error {
 public:
  PartitionInfeasibleError(double alpha, int clients, int attempts)
      : Error("partition infeasible: alpha=" + std::to_string(alpha) +
              " K=" + std::to_string(clients) + " after " +
              std::to_string(attempts) + " redraws"),
        alpha_(alpha),
        clients_(clients) {}

  double alpha() const noexcept { return alpha_; }
  int clients() const noexcept { return clients_; }

 private:
  double alpha_;
  int clients_;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

}  // namespace psipfl
