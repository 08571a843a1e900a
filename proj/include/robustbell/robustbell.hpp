// Copyright 2026 The robustbell Authors
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

#include "robustbell/black_scholes.hpp"
#include "robustbell/dynamics.hpp"
#include "robustbell/errors.hpp"
#include "robustbell/evaluator/evaluate.hpp"
#include "robustbell/evaluator/strategies.hpp"
#include "robustbell/gp/kernel.hpp"
#include "robustbell/gp/surrogate.hpp"
#include "robustbell/io/config.hpp"
#include "robustbell/numerics/hull.hpp"
#include "robustbell/numerics/minimize.hpp"
#include "robustbell/numerics/nelder_mead.hpp"
#include "robustbell/numerics/quadrature.hpp"
#include "robustbell/numerics/sobol.hpp"
#include "robustbell/parallel.hpp"
#include "robustbell/rng.hpp"
#include "robustbell/solver/bellman.hpp"
#include "robustbell/solver/design.hpp"
#include "robustbell/solver/serialize.hpp"
#include "robustbell/solver/solve.hpp"
#include "robustbell/version.hpp"
