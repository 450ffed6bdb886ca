// Copyright 2026 The cpt Authors.
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

#ifndef CPT_ERRORS_HPP
#define CPT_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cpt {

// Base of every error thrown by the library. Callers that only need to report
// and exit can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Analyzer output described a program with zero statements.
class InvalidReportError : public Error {
 public:
  using Error::Error;
};

// A line of analyzer output did not follow the line protocol.
class ReportParseError : public Error {
 public:
  ReportParseError(std::size_t line_number, const std::string& what);
  std::size_t line_number() const { return line_number_; }

 private:
  std::size_t line_number_;
};

class AnalyzerUnavailableError : public Error {
 public:
  using Error::Error;
};

class AnalyzerTimeoutError : public Error {
 public:
  using Error::Error;
};

class LexError : public Error {
 public:
  LexError(std::size_t offset, const std::string& what);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class UndefinedSimilarityError : public Error {
 public:
  using Error::Error;
};

// Pair orientation is impossible because both candidates scored the same.
class OrientationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ContextOverflowError : public Error {
 public:
  using Error::Error;
};

class MaskAlignmentError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or unnormalized distributions.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

// Two result sets that should describe the same tasks do not.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace cpt

#endif  // CPT_ERRORS_HPP
