// Copyright 2026 The tpik Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include "tpik/camera.hpp"
#include "tpik/errors.hpp"
#include "tpik/geometry.hpp"
#include "tpik/kinematics.hpp"
#include "tpik/linalg.hpp"
#include "tpik/perception.hpp"
#include "tpik/scenario.hpp"
#include "tpik/scenario_io.hpp"
#include "tpik/sim.hpp"
#include "tpik/solver.hpp"
#include "tpik/tasks.hpp"
