// Copyright 2026 The spinvan Authors.
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

#ifndef SPINVAN_SPINVAN_HPP
#define SPINVAN_SPINVAN_HPP

#include "spinvan/arnet.hpp"
#include "spinvan/checkpoint.hpp"
#include "spinvan/estimators.hpp"
#include "spinvan/exact.hpp"
#include "spinvan/lattice.hpp"
#include "spinvan/mcbaseline.hpp"
#include "spinvan/priors.hpp"
#include "spinvan/rng.hpp"
#include "spinvan/sampler.hpp"
#include "spinvan/trainer.hpp"

#endif  // SPINVAN_SPINVAN_HPP
