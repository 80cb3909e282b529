// Copyright 2026 The kgbias Authors.
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

#include <boost/multiprecision/cpp_int.hpp>

#include "kgbias/sf.hpp"

namespace kgbias {

// 3^56: every one of the 56 enumerated terms independently +1, -1 or absent.
boost::multiprecision::cpp_int search_space_size();

// 3^35: the same count over terms distinct under commutative equality.
boost::multiprecision::cpp_int distinct_search_space_size();

}  // namespace kgbias
