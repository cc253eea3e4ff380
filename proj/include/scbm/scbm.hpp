/*
 * Copyright 2026 The scbm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SCBM_SCBM_HPP
#define SCBM_SCBM_HPP

// Core library: migration model, power models, offload advisor, solver and
// comparison managers. The harness headers (scbm/harness/*) also need nlohmann/json.

#include <scbm/benchmarks.hpp>
#include <scbm/error.hpp>
#include <scbm/model.hpp>
#include <scbm/offload.hpp>
#include <scbm/power.hpp>
#include <scbm/solver.hpp>

#endif // SCBM_SCBM_HPP
