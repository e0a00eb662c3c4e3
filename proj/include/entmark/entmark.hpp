// Copyright 2026 The entmark Authors
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

#pragma once

#include "entmark/attacks.hpp"
#include "entmark/common.hpp"
#include "entmark/corpus.hpp"
#include "entmark/detection.hpp"
#include "entmark/experiments.hpp"
#include "entmark/keys.hpp"
#include "entmark/lm_core.hpp"
#include "entmark/metrics.hpp"
#include "entmark/pipeline.hpp"
#include "entmark/records.hpp"
#include "entmark/rng.hpp"
#include "entmark/sampling.hpp"
#include "entmark/stats.hpp"
#include "entmark/token_coding.hpp"
#include "entmark/watermark.hpp"
