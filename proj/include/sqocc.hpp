/* Copyright 2026 The sqocc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// Umbrella header.
#pragma once

#include "sqocc/gaussianize.hpp"
#include "sqocc/grid.hpp"
#include "sqocc/io.hpp"
#include "sqocc/metrics.hpp"
#include "sqocc/parallel.hpp"
#include "sqocc/render.hpp"
#include "sqocc/sample_weights.hpp"
#include "sqocc/scene_gen.hpp"
#include "sqocc/superquadric.hpp"
#include "sqocc/tessellate.hpp"
#include "sqocc/voxelize.hpp"
