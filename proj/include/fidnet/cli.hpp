// Copyright 2026 The fidnet Authors
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

#pragma once

#include <ostream>

#include "fidnet/errors.hpp"

namespace fidnet::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kRuntimeError = 4 };

/// Maps library failures onto process exit codes.
int exit_code_for(ErrorCode code);

/// Entry point of the `fidnet` tool. Output paths are resolved against
/// $FIDNET_OUTPUT_ROOT (or --output-root) when relative.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fidnet::cli
