// Copyright 2026 The MST Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MST_ERROR_HPP_
#define MST_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mst {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument shapes, non-finite values, violated preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed files (spike patterns, IDX, manifests, checkpoints).
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// No positive threshold drives the neuron to the requested spike count.
class UnreachableError : public Error {
 public:
  using Error::Error;
};

// Threshold crossing with vanishing slope; the recursive gradient is
// undefined there.
class DegenerateCrossing : public Error {
 public:
  using Error::Error;
};

// An iterative routine hit its iteration cap.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace mst

#endif  // MST_ERROR_HPP_
