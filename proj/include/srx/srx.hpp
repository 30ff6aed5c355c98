/*
 Copyright 2026 The srx Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef SRX_SRX_HPP
#define SRX_SRX_HPP

#include "srx/errors.hpp"
#include "srx/lin_sys.hpp"
#include "srx/policy.hpp"
#include "srx/cost.hpp"
#include "srx/scenarios.hpp"
#include "srx/constraints.hpp"
#include "srx/sample_size.hpp"
#include "srx/qp.hpp"
#include "srx/cascade.hpp"
#include "srx/validation.hpp"
#include "srx/lq_baseline.hpp"
#include "srx/mpc_sim.hpp"
#include "srx/config.hpp"
#include "srx/solution_io.hpp"
#include "srx/pipeline.hpp"

#endif  // SRX_SRX_HPP
