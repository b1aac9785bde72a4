// Copyright 2026 The DHP Framework Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <string>
#include <string_view>

namespace dhp {

// `key = value` lines; blank lines and lines starting with '#' are skipped.
// Keys and values are trimmed. Throws kInvalidConfig on a line without '=' or
// a repeated key.
std::map<std::string, std::string> parse_kv(std::string_view text);

std::string read_text_file(const std::string& path);

bool parse_bool(std::string_view key, std::string_view value);
long long parse_integer(std::string_view key, std::string_view value);

}  // namespace dhp
