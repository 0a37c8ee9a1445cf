// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
#pragma once

#include "risfl/channel.hpp"
#include "risfl/diagnostics.hpp"
#include "risfl/fed.hpp"
#include "risfl/harness/config.hpp"
#include "risfl/harness/dataset_io.hpp"
#include "risfl/harness/experiment.hpp"
#include "risfl/labeling.hpp"
#include "risfl/metrics.hpp"
#include "risfl/mlp.hpp"
#include "risfl/rng.hpp"
