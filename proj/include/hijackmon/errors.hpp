// Copyright 2026 The hijackmon Authors
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

#ifndef HIJACKMON_ERRORS_HPP
#define HIJACKMON_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace hijackmon {

/// Base class for all domain errors. Carries a stable error name so the CLI
/// can report "<Name>: <details>" and tests can assert on the category.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(name + ": " + what), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define HIJACKMON_DEFINE_ERROR(ClassName, ErrorName)                       \
    class ClassName : public Error {                                       \
    public:                                                                \
        explicit ClassName(const std::string& what)                        \
            : Error(ErrorName, what) {}                                    \
    }

// session model
HIJACKMON_DEFINE_ERROR(MixedSessionError, "MixedSession");
HIJACKMON_DEFINE_ERROR(EmptySessionError, "EmptySession");

// hop table
HIJACKMON_DEFINE_ERROR(CorruptTableFileError, "CorruptTableFile");

// detector
HIJACKMON_DEFINE_ERROR(NotHijackedError, "NotHijacked");

// locator
HIJACKMON_DEFINE_ERROR(UnknownBrasError, "UnknownBras");
HIJACKMON_DEFINE_ERROR(InvalidTopologyError, "InvalidTopology");

// simulator
HIJACKMON_DEFINE_ERROR(UnknownNodeError, "UnknownNode");
HIJACKMON_DEFINE_ERROR(InvalidScenarioError, "InvalidScenario");

// evaluator
HIJACKMON_DEFINE_ERROR(SessionSetMismatchError, "SessionSetMismatch");
HIJACKMON_DEFINE_ERROR(UnlabeledSessionError, "UnlabeledSession");

// ingest
HIJACKMON_DEFINE_ERROR(UnmappedTapError, "UnmappedTap");
HIJACKMON_DEFINE_ERROR(InvalidMappingError, "InvalidMapping");

// file plumbing
HIJACKMON_DEFINE_ERROR(FileNotFoundError, "FileNotFound");
HIJACKMON_DEFINE_ERROR(CorruptInputFileError, "CorruptInputFile");

#undef HIJACKMON_DEFINE_ERROR

}  // namespace hijackmon

#endif  // HIJACKMON_ERRORS_HPP
