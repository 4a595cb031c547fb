// Copyright 2026 The QuadMech Authors
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

// Everything at once.

#pragma once

#include "quadmech/audit.hpp"
#include "quadmech/audit_suite.hpp"
#include "quadmech/baselines.hpp"
#include "quadmech/checkpoint.hpp"
#include "quadmech/config.hpp"
#include "quadmech/curvature.hpp"
#include "quadmech/data_io.hpp"
#include "quadmech/dataset.hpp"
#include "quadmech/error.hpp"
#include "quadmech/experiment.hpp"
#include "quadmech/linalg.hpp"
#include "quadmech/loss.hpp"
#include "quadmech/mechanism.hpp"
#include "quadmech/model.hpp"
#include "quadmech/parallel.hpp"
#include "quadmech/privacy.hpp"
#include "quadmech/random.hpp"
#include "quadmech/report.hpp"
#include "quadmech/sinusoidal.hpp"
#include "quadmech/stats.hpp"
