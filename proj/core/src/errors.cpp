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

#include "cpt/errors.hpp"

namespace cpt {

ReportParseError::ReportParseError(std::size_t line_number,
                                   const std::string& what)
    : Error("line " + std::to_string(line_number) + ": " + what),
      line_number_(line_number) {}

LexError::LexError(std::size_t offset, const std::string& what)
    : Error("offset " + std::to_string(offset) + ": " + what),
      offset_(offset) {}

}  // namespace cpt
