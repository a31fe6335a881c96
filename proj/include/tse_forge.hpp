// Copyright 2026  The tse-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "tse_forge/audio_io.hpp"
#include "tse_forge/corpus.hpp"
#include "tse_forge/curriculum.hpp"
#include "tse_forge/error.hpp"
#include "tse_forge/features.hpp"
#include "tse_forge/level.hpp"
#include "tse_forge/manifest.hpp"
#include "tse_forge/metrics.hpp"
#include "tse_forge/mixing.hpp"
#include "tse_forge/rng.hpp"
#include "tse_forge/spectral.hpp"
