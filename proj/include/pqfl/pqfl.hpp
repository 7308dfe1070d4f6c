// Copyright 2026 The PQFL Simulator Authors.
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

#include "pqfl/data.hpp"
#include "pqfl/encoding.hpp"
#include "pqfl/errors.hpp"
#include "pqfl/federation.hpp"
#include "pqfl/metrics.hpp"
#include "pqfl/model.hpp"
#include "pqfl/quantum.hpp"
#include "pqfl/rng.hpp"
#include "pqfl/runner.hpp"
#include "pqfl/training.hpp"
