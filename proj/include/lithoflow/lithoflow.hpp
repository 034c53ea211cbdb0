/*
 * Copyright 2026 The lithoflow Authors
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

#pragma once

// Everything except the HTTP reasoner backend and the CLI.
#include "lithoflow/analysis.hpp"
#include "lithoflow/config.hpp"
#include "lithoflow/core.hpp"
#include "lithoflow/magrpo.hpp"
#include "lithoflow/metrics.hpp"
#include "lithoflow/perception.hpp"
#include "lithoflow/reasoning.hpp"
#include "lithoflow/rewards.hpp"
#include "lithoflow/stacking.hpp"
#include "lithoflow/welldata.hpp"
#include "lithoflow/workflow.hpp"
